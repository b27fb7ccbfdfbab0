#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "comets/parallel.hpp"
#include "comets/regression.hpp"
#include "comets/rng.hpp"

namespace comets {

struct TreeNode {
  double threshold = 0.0;  // go left when x[feature] <= threshold
  double value = 0.0;      // mean target of the node's training rows
  std::int32_t feature = -1;
  std::int32_t left = -1;
  std::int32_t right = -1;

  bool is_leaf() const { return feature < 0; }
};

class RegressionTree {
 public:
  explicit RegressionTree(std::vector<TreeNode> nodes) : nodes_(std::move(nodes)) {}

  double predict(std::span<const double> row) const {
    std::size_t k = 0;
    while (!nodes_[k].is_leaf()) {
      const auto& node = nodes_[k];
      k = static_cast<std::size_t>(row[static_cast<std::size_t>(node.feature)] <= node.threshold ? node.left
                                                                                                  : node.right);
    }
    return nodes_[k].value;
  }

  const std::vector<TreeNode>& nodes() const { return nodes_; }
  std::size_t leaf_count() const {
    return static_cast<std::size_t>(std::count_if(nodes_.begin(), nodes_.end(), [](auto& n) { return n.is_leaf(); }));
  }

 private:
  std::vector<TreeNode> nodes_;
};

namespace detail {

// CART regression tree grown on the rows listed in `sample` (duplicates
// allowed). Splits maximise the decrease in squared error over `mtry`
// randomly drawn features; ties go to the lower feature index, then the
// smaller split point. Each feature keeps its own sorted order of sample
// positions; a node owns the same [begin, end) range in every order.
class TreeBuilder {
 public:
  TreeBuilder(const std::vector<std::vector<double>>& columns, std::span<const double> target,
              const ForestParams& params)
      : columns_(columns), target_(target), params_(params) {}

  RegressionTree grow(const std::vector<std::uint32_t>& sample, RngStream& rng) {
    const std::size_t p = columns_.size();
    const std::size_t m = sample.size();
    const std::size_t mtry = params_.mtry_for(p);

    ys_.resize(m);
    for (std::size_t k = 0; k < m; ++k) ys_[k] = target_[sample[k]];
    xs_.resize(p);
    order_.resize(p);
    for (std::size_t j = 0; j < p; ++j) {
      auto& x = xs_[j];
      x.resize(m);
      for (std::size_t k = 0; k < m; ++k) x[k] = columns_[j][sample[k]];
      auto& ord = order_[j];
      ord.resize(m);
      for (std::size_t k = 0; k < m; ++k) ord[k] = static_cast<std::uint32_t>(k);
      std::stable_sort(ord.begin(), ord.end(), [&x](std::uint32_t a, std::uint32_t b) { return x[a] < x[b]; });
    }
    goes_left_.assign(m, 0);
    scratch_.resize(m);

    std::vector<TreeNode> nodes;
    struct Pending {
      std::size_t node, begin, end, depth;
    };
    std::vector<Pending> stack;
    nodes.emplace_back();
    stack.push_back({0, 0, m, 0});
    std::vector<std::size_t> features(p);

    while (!stack.empty()) {
      const Pending job = stack.back();
      stack.pop_back();
      const std::size_t size = job.end - job.begin;

      double sum = 0.0, sumsq = 0.0;
      const auto& any_order = p > 0 ? order_[0] : identity(m);
      for (std::size_t k = job.begin; k < job.end; ++k) {
        const double v = ys_[any_order[k]];
        sum += v;
        sumsq += v * v;
      }
      nodes[job.node].value = sum / static_cast<double>(size);
      const double sse = sumsq - sum * sum / static_cast<double>(size);
      if (size <= params_.min_node_size || (params_.max_depth > 0 && job.depth >= params_.max_depth) ||
          !(sse > 0.0) || mtry == 0) {
        continue;
      }

      for (std::size_t j = 0; j < p; ++j) features[j] = j;
      for (std::size_t k = 0; k < mtry; ++k) {
        const auto pick = k + static_cast<std::size_t>(rng.below(p - k));
        std::swap(features[k], features[pick]);
      }
      std::sort(features.begin(), features.begin() + static_cast<std::ptrdiff_t>(mtry));

      double best_gain = 0.0;
      std::size_t best_feature = p;
      double best_threshold = 0.0;
      const double parent_term = sum * sum / static_cast<double>(size);
      for (std::size_t c = 0; c < mtry; ++c) {
        const auto& x = xs_[features[c]];
        const auto& ord = order_[features[c]];
        if (x[ord[job.begin]] == x[ord[job.end - 1]]) continue;

        double left_sum = 0.0;
        for (std::size_t k = job.begin; k + 1 < job.end; ++k) {
          left_sum += ys_[ord[k]];
          const double lo = x[ord[k]], hi = x[ord[k + 1]];
          if (lo == hi) continue;
          const double nl = static_cast<double>(k + 1 - job.begin);
          const double nr = static_cast<double>(size) - nl;
          const double right_sum = sum - left_sum;
          const double gain = left_sum * left_sum / nl + right_sum * right_sum / nr - parent_term;
          if (gain > best_gain) {
            best_gain = gain;
            best_feature = features[c];
            double mid = 0.5 * (lo + hi);
            if (!(mid < hi)) mid = lo;
            best_threshold = mid;
          }
        }
      }
      if (best_feature == p || !(best_gain > 1e-12 * sse)) continue;

      const auto& bx = xs_[best_feature];
      std::size_t left_count = 0;
      for (std::size_t k = job.begin; k < job.end; ++k) {
        const auto pos = order_[best_feature][k];
        goes_left_[pos] = bx[pos] <= best_threshold;
        left_count += goes_left_[pos];
      }
      for (std::size_t j = 0; j < p; ++j) {
        auto& ord = order_[j];
        std::size_t l = job.begin, r = 0;
        for (std::size_t k = job.begin; k < job.end; ++k) {
          const auto pos = ord[k];
          if (goes_left_[pos]) ord[l++] = pos;
          else scratch_[r++] = pos;
        }
        std::copy(scratch_.begin(), scratch_.begin() + static_cast<std::ptrdiff_t>(r),
                  ord.begin() + static_cast<std::ptrdiff_t>(l));
      }
      const std::size_t split = job.begin + left_count;

      const auto left = static_cast<std::int32_t>(nodes.size());
      nodes.emplace_back();
      nodes.emplace_back();
      auto& node = nodes[job.node];
      node.feature = static_cast<std::int32_t>(best_feature);
      node.threshold = best_threshold;
      node.left = left;
      node.right = left + 1;
      stack.push_back({static_cast<std::size_t>(left + 1), split, job.end, job.depth + 1});
      stack.push_back({static_cast<std::size_t>(left), job.begin, split, job.depth + 1});
    }
    return RegressionTree(std::move(nodes));
  }

 private:
  const std::vector<std::uint32_t>& identity(std::size_t m) {
    if (identity_.size() != m) {
      identity_.resize(m);
      for (std::size_t k = 0; k < m; ++k) identity_[k] = static_cast<std::uint32_t>(k);
    }
    return identity_;
  }

  const std::vector<std::vector<double>>& columns_;
  std::span<const double> target_;
  const ForestParams& params_;
  std::vector<double> ys_;
  std::vector<std::vector<double>> xs_;
  std::vector<std::vector<std::uint32_t>> order_;
  std::vector<std::uint32_t> identity_;
  std::vector<std::uint32_t> scratch_;
  std::vector<char> goes_left_;
};

}  // namespace detail

class ForestPredictor : public Predictor {
 public:
  explicit ForestPredictor(std::vector<RegressionTree> trees) : trees(std::move(trees)) {}

  std::vector<double> predict(const NumericMatrix& features) const override {
    std::vector<double> out(features.rows(), 0.0);
    const double scale = 1.0 / static_cast<double>(trees.size());
    for (const auto& tree : trees) {
      for (std::size_t i = 0; i < features.rows(); ++i) out[i] += tree.predict(features.row(i));
    }
    for (auto& v : out) v *= scale;
    return out;
  }

  std::vector<RegressionTree> trees;
};

// Random forest regression: bootstrap-aggregated CART trees, each grown from
// its own child stream so the result does not depend on thread count.
inline FittedModel fit_random_forest(const NumericMatrix& features, std::span<const double> target,
                                     const ForestParams& params, RngStream rng) {
  check_training_shape(features, target);
  const std::size_t n = features.rows();
  const std::size_t p = features.cols();
  std::vector<std::vector<double>> columns(p);
  for (std::size_t j = 0; j < p; ++j) columns[j] = features.col(j);

  const auto draws = std::max<std::size_t>(
      1, static_cast<std::size_t>(std::llround(params.sample_fraction * static_cast<double>(n))));

  std::vector<std::optional<RegressionTree>> grown(params.num_trees);
  parallel_for(params.num_trees, [&](std::size_t t) {
    RngStream tree_rng = rng.child(t);
    std::vector<std::uint32_t> sample(draws);
    if (params.replace) {
      for (auto& s : sample) s = static_cast<std::uint32_t>(tree_rng.below(n));
    } else {
      auto perm = tree_rng.permutation(n);
      for (std::size_t k = 0; k < draws; ++k) sample[k] = static_cast<std::uint32_t>(perm[k]);
    }
    detail::TreeBuilder builder(columns, target, params);
    grown[t].emplace(builder.grow(sample, tree_rng));
  });

  std::vector<RegressionTree> trees;
  trees.reserve(grown.size());
  for (auto& t : grown) trees.push_back(std::move(*t));
  return FittedModel(std::make_shared<ForestPredictor>(std::move(trees)), n, p,
                     {{"kind", "random_forest"}, {"num_trees", params.num_trees}, {"mtry", params.mtry_for(p)}});
}

}  // namespace comets
