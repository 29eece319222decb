#pragma once

// Dense reference computations used as test oracles.

#include "drmc/types.hpp"

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <cmath>
#include <numbers>

namespace oracle {

using drmc::Index;
using drmc::Matrix;
using drmc::Vector;

inline Matrix random_gaussian(Index rows, Index cols, drmc::Rng& rng) {
  Matrix G(rows, cols);
  for (Index j = 0; j < cols; ++j) G.col(j) = drmc::standard_normal(rows, rng);
  return G;
}

inline Vector unit(Index n, Index i) {
  Vector e = Vector::Zero(n);
  e[i] = 1.0;
  return e;
}

inline Matrix random_psd(Index n, Index rank, drmc::Rng& rng) {
  const Matrix G = random_gaussian(n, rank, rng);
  return G * G.transpose();
}

/// Symmetric matrix function f(A) by eigendecomposition.
template <class F>
Matrix sym_fn(const Matrix& A, F f) {
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (A + A.transpose()));
  Vector d = eig.eigenvalues();
  for (Index i = 0; i < d.size(); ++i) d[i] = f(d[i]);
  return eig.eigenvectors() * d.asDiagonal() * eig.eigenvectors().transpose();
}

inline Matrix sym_sqrt(const Matrix& A) {
  return sym_fn(A, [](double x) { return std::sqrt(std::max(x, 0.0)); });
}

/// log N(x; mean, cov) including the normalizing constant.
inline double log_gaussian(const Vector& x, const Vector& mean, const Matrix& cov) {
  const Eigen::LLT<Matrix> llt(cov);
  const Vector z = llt.matrixL().solve(x - mean);
  const double logdet = 2.0 * llt.matrixL().toDenseMatrix().diagonal().array().log().sum();
  return -0.5 * z.squaredNorm() - 0.5 * logdet - 0.5 * double(x.size()) * std::log(2.0 * std::numbers::pi);
}

/// Principal angles (radians) between the column spans of A and B.
inline Vector principal_angles(const Matrix& A, const Matrix& B) {
  const Eigen::HouseholderQR<Matrix> qa(A), qb(B);
  const Matrix Qa = qa.householderQ() * Matrix::Identity(A.rows(), A.cols());
  const Matrix Qb = qb.householderQ() * Matrix::Identity(B.rows(), B.cols());
  const Eigen::JacobiSVD<Matrix> svd(Qa.transpose() * Qb);
  Vector s = svd.singularValues();
  for (Index i = 0; i < s.size(); ++i) s[i] = std::acos(std::min(1.0, s[i]));
  return s;
}

/// Least-squares slope of log|y| against log x.
inline double loglog_slope(const std::vector<double>& x, const std::vector<double>& y) {
  double mx = 0, my = 0;
  const double n = double(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    mx += std::log(x[i]) / n;
    my += std::log(std::abs(y[i])) / n;
  }
  double sxy = 0, sxx = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double dx = std::log(x[i]) - mx;
    sxy += dx * (std::log(std::abs(y[i])) - my);
    sxx += dx * dx;
  }
  return sxy / sxx;
}

}  // namespace oracle
