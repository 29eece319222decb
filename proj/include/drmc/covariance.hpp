#pragma once

#include "drmc/types.hpp"

#include <cstdint>
#include <vector>

namespace drmc {

class LowRankSpectrum;

/// Dense SPD covariance with cached symmetric square root.
///
/// S is the symmetric eigendecomposition root (S = Q diag(sqrt d) Qᵀ) so
/// that C^{1/2} is self-adjoint. Immutable after construction.
class CovarianceOperator {
 public:
  /// Factorizes `C`. Throws NumericalError when C is not SPD.
  explicit CovarianceOperator(Matrix C);

  Index dim() const { return C_.rows(); }
  const Matrix& matrix() const { return C_; }
  const Matrix& sqrt_matrix() const { return S_; }
  const Matrix& inv_sqrt_matrix() const { return S_inv_; }

  /// Eigenvalues of C in descending order, with matching eigenvectors.
  const Vector& eigenvalues() const { return evals_; }
  const Matrix& eigenvectors() const { return evecs_; }

  Vector apply(const Vector& u) const { return C_ * u; }
  Vector apply_sqrt(const Vector& u) const { return S_ * u; }
  Vector apply_inv_sqrt(const Vector& u) const { return S_inv_ * u; }
  Vector apply_inv(const Vector& u) const { return S_inv_ * (S_inv_ * u); }

  /// Diagonal jitter that was needed for factorization.
  double jitter() const { return jitter_; }

  /// Leading r eigenpairs of C (orthonormal in the identity metric).
  LowRankSpectrum leading_spectrum(Index r) const;

 private:
  Matrix C_;
  Matrix S_;
  Matrix S_inv_;
  Vector evals_;
  Matrix evecs_;
  double jitter_ = 0.0;
  friend CovarianceOperator build_prior_covariance(
      const std::vector<Eigen::Vector2d>&, double, double);
};

/// Exponential-kernel prior covariance over `nodes`. A diagonal jitter of
/// 1e-10 sigma² is added and escalated by 10x up to 1e-6 sigma² while the
/// smallest eigenvalue stays non-positive.
CovarianceOperator build_prior_covariance(
    const std::vector<Eigen::Vector2d>& nodes, double sigma_u, double s0);

struct GaussianSample {
  Vector coefficients;
  std::uint64_t seed = 0;
};

/// Draws S z with z standard normal from a stream seeded with `seed`.
GaussianSample sample_prior(const CovarianceOperator& cov, std::uint64_t seed);

/// Draws S z using a caller-owned stream.
Vector sample_prior(const CovarianceOperator& cov, Rng& rng);

inline Vector whiten(const Vector& u, const CovarianceOperator& cov) {
  return cov.apply_inv_sqrt(u);
}
inline Vector unwhiten(const Vector& v, const CovarianceOperator& cov) {
  return cov.apply_sqrt(v);
}

}  // namespace drmc
