#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>

#include <Eigen/Dense>

#include "comets/error.hpp"

namespace comets {

inline constexpr double kDefaultRankTolerance = 1e-10;

// Eigendecomposition of a symmetric matrix, eigenvalues in descending order.
struct SymmetricEigen {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenvectors;  // column k pairs with eigenvalues[k]
  std::size_t rank = 0;          // eigenvalues above rel_tol * largest
};

inline void require_symmetric(const Eigen::MatrixXd& a, double rel_tol = 1e-10) {
  if (a.rows() != a.cols()) throw ContractViolation("matrix is not square");
  const double scale = a.cwiseAbs().maxCoeff();
  const double asym = (a - a.transpose()).cwiseAbs().maxCoeff();
  if (asym > rel_tol * std::max(scale, 1e-300)) {
    throw ContractViolation("matrix is not symmetric (max asymmetry " + std::to_string(asym) + ")");
  }
}

inline SymmetricEigen sym_eigen(const Eigen::MatrixXd& a, double rel_tol = kDefaultRankTolerance) {
  require_symmetric(a);
  SymmetricEigen out;
  if (a.rows() == 0) return out;
  const Eigen::MatrixXd sym = 0.5 * (a + a.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw Error("symmetric eigendecomposition failed");
  const auto n = sym.rows();
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenvectors = solver.eigenvectors().rowwise().reverse();
  const double top = out.eigenvalues(0);
  for (Eigen::Index k = 0; k < n; ++k) {
    if (top > 0.0 && out.eigenvalues(k) > rel_tol * top) ++out.rank;
  }
  return out;
}

struct PinvSqrt {
  Eigen::MatrixXd matrix;
  std::size_t rank = 0;
};

// Pseudo-inverse square root M of a symmetric PSD matrix: M A M is the
// projection onto range(A). Eigenvalues <= rel_tol * largest count as zero.
inline PinvSqrt sym_pinv_sqrt(const Eigen::MatrixXd& a, double rel_tol = kDefaultRankTolerance) {
  if (!(rel_tol > 0.0 && rel_tol < 1.0)) throw DomainError("sym_pinv_sqrt: rel_tol must lie in (0, 1)");
  const SymmetricEigen eig = sym_eigen(a, rel_tol);
  PinvSqrt out;
  out.rank = eig.rank;
  out.matrix = Eigen::MatrixXd::Zero(a.rows(), a.cols());
  for (std::size_t k = 0; k < eig.rank; ++k) {
    const auto v = eig.eigenvectors.col(static_cast<Eigen::Index>(k));
    out.matrix += (1.0 / std::sqrt(eig.eigenvalues(static_cast<Eigen::Index>(k)))) * v * v.transpose();
  }
  return out;
}

}  // namespace comets
