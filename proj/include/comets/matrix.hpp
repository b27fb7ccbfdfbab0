#pragma once

#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "comets/error.hpp"

namespace comets {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

// Dense n x p table of finite values, one row per observation.
class NumericMatrix {
 public:
  NumericMatrix() = default;

  // Zero-filled matrix. Zero columns is legal (e.g. an empty conditioning block).
  NumericMatrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), values_(rows * cols, 0.0) {}

  NumericMatrix(std::size_t rows, std::size_t cols, std::vector<double> values)
      : rows_(rows), cols_(cols), values_(std::move(values)) {
    if (values_.size() != rows_ * cols_) {
      throw DimensionError("matrix: " + std::to_string(values_.size()) + " values for a " + std::to_string(rows_) +
                           "x" + std::to_string(cols_) + " shape");
    }
    check_finite();
  }

  static NumericMatrix from_rows(std::initializer_list<std::initializer_list<double>> rows) {
    std::size_t cols = rows.size() == 0 ? 0 : rows.begin()->size();
    std::vector<double> values;
    values.reserve(rows.size() * cols);
    for (const auto& r : rows) {
      if (r.size() != cols) throw DimensionError("matrix: ragged rows");
      values.insert(values.end(), r.begin(), r.end());
    }
    return NumericMatrix(rows.size(), cols, std::move(values));
  }

  // Single column matrix from a vector.
  static NumericMatrix column(std::span<const double> v) {
    return NumericMatrix(v.size(), 1, std::vector<double>(v.begin(), v.end()));
  }

  static NumericMatrix from_columns(const std::vector<std::vector<double>>& columns, std::size_t rows) {
    NumericMatrix m(rows, columns.size());
    for (std::size_t j = 0; j < columns.size(); ++j) {
      if (columns[j].size() != rows) throw DimensionError("matrix: column length mismatch");
      for (std::size_t i = 0; i < rows; ++i) m(i, j) = columns[j][i];
    }
    m.check_finite();
    return m;
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool empty() const { return values_.empty(); }

  double operator()(std::size_t i, std::size_t j) const { return values_[i * cols_ + j]; }
  double& operator()(std::size_t i, std::size_t j) { return values_[i * cols_ + j]; }

  std::span<const double> row(std::size_t i) const { return {values_.data() + i * cols_, cols_}; }
  std::span<const double> values() const { return values_; }

  std::vector<double> col(std::size_t j) const {
    std::vector<double> out(rows_);
    for (std::size_t i = 0; i < rows_; ++i) out[i] = (*this)(i, j);
    return out;
  }

  NumericMatrix select_rows(std::span<const std::size_t> idx) const {
    NumericMatrix out(idx.size(), cols_);
    for (std::size_t r = 0; r < idx.size(); ++r) {
      auto src = row(idx[r]);
      std::copy(src.begin(), src.end(), out.values_.begin() + static_cast<std::ptrdiff_t>(r * cols_));
    }
    return out;
  }

  NumericMatrix select_cols(std::span<const std::size_t> idx) const {
    NumericMatrix out(rows_, idx.size());
    for (std::size_t i = 0; i < rows_; ++i)
      for (std::size_t c = 0; c < idx.size(); ++c) out(i, c) = (*this)(i, idx[c]);
    return out;
  }

  // [a | b], row counts must agree.
  static NumericMatrix hcat(const NumericMatrix& a, const NumericMatrix& b) {
    if (a.rows() != b.rows()) throw DimensionError("hcat: row counts differ");
    NumericMatrix out(a.rows(), a.cols() + b.cols());
    for (std::size_t i = 0; i < a.rows(); ++i) {
      for (std::size_t j = 0; j < a.cols(); ++j) out(i, j) = a(i, j);
      for (std::size_t j = 0; j < b.cols(); ++j) out(i, a.cols() + j) = b(i, j);
    }
    return out;
  }

  Eigen::Map<const RowMajorMatrix> eigen() const {
    return {values_.data(), static_cast<Eigen::Index>(rows_), static_cast<Eigen::Index>(cols_)};
  }

  void check_finite() const {
    for (std::size_t k = 0; k < values_.size(); ++k) {
      if (!std::isfinite(values_[k])) {
        throw DomainError("matrix: non-finite value at row " + std::to_string(k / cols_) + ", column " +
                          std::to_string(k % cols_));
      }
    }
  }

  friend bool operator==(const NumericMatrix&, const NumericMatrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> values_;
};

inline void require_finite(std::span<const double> v, const char* what) {
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (!std::isfinite(v[i])) throw DomainError(std::string(what) + ": non-finite value at index " + std::to_string(i));
  }
}

inline double mean(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

// Pearson correlation; zero when either input has no spread.
inline double correlation(std::span<const double> a, std::span<const double> b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  if (saa <= 0 || sbb <= 0) return 0.0;
  return sab / std::sqrt(saa * sbb);
}

inline double mean_squared(std::span<const double> v) {
  double s = 0.0;
  for (double x : v) s += x * x;
  return v.empty() ? 0.0 : s / static_cast<double>(v.size());
}

}  // namespace comets
