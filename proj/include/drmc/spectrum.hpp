#pragma once

#include "drmc/types.hpp"

#include <json.hpp>

#include <cstdint>
#include <optional>
#include <string>

namespace drmc {

class CovarianceOperator;

/// Deliberate defects for the mutation check of `drmc verify --mutate`.
enum class Mutation { none, dr_formula };
void set_mutation(Mutation m);
Mutation active_mutation();

/// Inner product in which a basis is orthonormal.
enum class Metric { identity, covariance };

/// r leading eigenpairs {lambda_i, V_i} of a prior-preconditioned GNH.
///
/// Eigenvalues are non-increasing and non-negative. V is orthonormal in
/// the metric recorded by `metric()` (identity: VᵀV = I, covariance:
/// Vᵀ C^{-1} V = I).
class LowRankSpectrum {
 public:
  LowRankSpectrum() = default;
  /// Empty spectrum (r = 0) on an n-dimensional space.
  explicit LowRankSpectrum(Index n);
  /// Validates ordering and sign; does not re-orthonormalize.
  LowRankSpectrum(Vector eigenvalues, Matrix basis,
                  Metric metric = Metric::identity);

  Index dim() const { return basis_.rows(); }
  Index rank() const { return eigenvalues_.size(); }
  const Vector& eigenvalues() const { return eigenvalues_; }
  const Matrix& basis() const { return basis_; }
  Metric metric() const { return metric_; }

  /// D = (I + Lambda)^{-1}, stored as a diagonal.
  Vector d() const;
  /// log|D| = sum_i log D_i.
  double log_det_d() const;

  /// Fingerprint of the state the spectrum was computed at; empty for a
  /// global spectrum that is valid everywhere.
  const std::optional<std::uint64_t>& anchor() const { return anchor_; }
  void set_anchor(std::optional<std::uint64_t> a) { anchor_ = a; }

  /// Keeps the leading `r` pairs.
  LowRankSpectrum truncated(Index r) const;
  /// Keeps pairs with lambda_i >= threshold.
  LowRankSpectrum thresholded(double threshold) const;

  /// Largest |V_iᵀ M V_j - delta_ij| for the identity metric.
  double orthonormality_error() const;

  friend bool operator==(const LowRankSpectrum& a, const LowRankSpectrum& b);

 private:
  Vector eigenvalues_;
  Matrix basis_;
  Metric metric_ = Metric::identity;
  std::optional<std::uint64_t> anchor_;
};

nlohmann::json to_json(const LowRankSpectrum& spec);
LowRankSpectrum spectrum_from_json(const nlohmann::json& j);

/// Randomized subspace iteration for a symmetric PSD action.
struct RandomizedEigOptions {
  Index oversampling = 5;
  Index power_iterations = 2;
  /// Seed of the Gaussian test matrix. A fixed seed makes the result a
  /// deterministic function of the operator.
  std::uint64_t sketch_seed = 0x5eed;
  /// Relative tolerance of the symmetry probe on the sketch.
  double symmetry_tol = 1e-8;
};

/// r leading eigenpairs of `apply_A` on R^n. Requires r + p <= n.
/// Throws std::invalid_argument when the action is detectably non-symmetric.
LowRankSpectrum randomized_eig(const LinearAction& apply_A, Index n, Index r,
                               const RandomizedEigOptions& opts = {});

/// Leading eigenpairs of H(u) u_i = lambda_i C^{-1} u_i, returned in whitened
/// coordinates v_i = C^{-1/2} u_i with an identity-metric basis.
LowRankSpectrum generalized_eig(const LinearAction& apply_H,
                                const CovarianceOperator& cov, Index r,
                                const RandomizedEigOptions& opts = {});

/// Converts a whitened identity-metric basis to original coordinates, where
/// it is orthonormal in the C^{-1} inner product.
LowRankSpectrum to_original_coordinates(const LowRankSpectrum& spec,
                                        const CovarianceOperator& cov);

/// (I + V (D - I) Vᵀ) v.
Vector apply_K_hat(const Vector& v, const LowRankSpectrum& spec);
/// (I + V (sqrt D - I) Vᵀ) v.
Vector apply_sqrtK_hat(const Vector& v, const LowRankSpectrum& spec);
/// (I + V Lambda Vᵀ) v, the inverse of apply_K_hat.
Vector apply_K_hat_inv(const Vector& v, const LowRankSpectrum& spec);

/// Low-rank covariance built from r leading prior eigenpairs:
///   K(u) = C + U Lambda^{1/2} (D - I) Lambda^{1/2} Uᵀ,
///   D = (Lambda^{1/2} Uᵀ H U Lambda^{1/2} + I)^{-1}.
class PriorBasedCovariance {
 public:
  PriorBasedCovariance(const CovarianceOperator& cov,
                       const LowRankSpectrum& prior_spec,
                       const LinearAction& apply_H);
  Vector apply(const Vector& u) const;
  const Matrix& d() const { return D_; }

 private:
  const CovarianceOperator* cov_;
  Matrix U_scaled_;  // U Lambda^{1/2}
  Matrix D_;
};

/// Förstner distance between I + V_a L_a V_aᵀ and I + V_b L_b V_bᵀ:
/// sqrt(sum ln² gamma_i) over their generalized eigenvalues.
double forstner_distance(const LowRankSpectrum& a, const LowRankSpectrum& b);

}  // namespace drmc
