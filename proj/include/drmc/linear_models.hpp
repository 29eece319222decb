#pragma once

#include "drmc/model.hpp"

#include <memory>

namespace drmc {

/// Analytic Gaussian inverse problem y = A u + eta, eta ~ N(0, Sigma),
/// with prior N(0, C). Each misfit evaluation counts as one forward
/// solve, each gradient as one adjoint solve and each GNH action as one
/// tangent plus one adjoint solve, mirroring the PDE convention.
class LinearGaussianModel final : public ForwardModel {
 public:
  LinearGaussianModel(Matrix A, Matrix noise_cov, Matrix prior_cov, Vector y);

  Index dim() const override { return A_.cols(); }
  Index num_observations() const override { return A_.rows(); }
  std::unique_ptr<ModelPoint> evaluate(const Vector& u, SolveCounter* counter) const override;

  const Matrix& A() const { return A_; }
  const Matrix& noise_cov() const { return Sigma_; }
  const Matrix& prior_cov() const { return C_; }
  const Vector& data() const { return y_; }

  double potential(const Vector& u) const;
  Vector gradient(const Vector& u) const;
  /// Aᵀ Sigma^{-1} A, independent of u.
  const Matrix& gnh() const { return H_; }

 private:
  Matrix A_, Sigma_, C_;
  Vector y_;
  Eigen::LLT<Matrix> Sigma_llt_;
  Matrix H_;
};

struct GaussianPosterior {
  Vector mean;
  Matrix covariance;
};

/// Closed-form posterior. Throws NumericalError when the precision
/// C^{-1} + Aᵀ Sigma^{-1} A cannot be factorized.
GaussianPosterior analytic_posterior(const LinearGaussianModel& model);

/// Random model: A with iid N(0,1) entries scaled by `scale`, Sigma =
/// noise_sd² I, C of exponential-kernel type on a 1D grid, y from a prior
/// draw plus noise.
LinearGaussianModel random_linear_model(Index n, Index m, std::uint64_t seed, double noise_sd = 0.5,
                                        double scale = 1.0);

/// G(u) = A (u + a sin u) with |a| < 1: non-linear, with a GNH that varies
/// with u and has rank <= m.
class WarpedLinearModel final : public ForwardModel {
 public:
  WarpedLinearModel(Matrix A, double noise_sd, Vector y, double warp = 0.5);

  Index dim() const override { return A_.cols(); }
  Index num_observations() const override { return A_.rows(); }
  std::unique_ptr<ModelPoint> evaluate(const Vector& u, SolveCounter* counter) const override;

  const Matrix& A() const { return A_; }
  double noise_sd() const { return noise_sd_; }
  double warp() const { return warp_; }
  Vector forward(const Vector& u) const;
  /// Dense J(u)ᵀ Sigma^{-1} J(u).
  Matrix gnh(const Vector& u) const;

 private:
  Matrix A_;
  double noise_sd_;
  Vector y_;
  double warp_;
};

/// Phi identically zero on R^n.
class FlatModel final : public ForwardModel {
 public:
  explicit FlatModel(Index n) : n_(n) {}
  Index dim() const override { return n_; }
  Index num_observations() const override { return 0; }
  std::unique_ptr<ModelPoint> evaluate(const Vector& u, SolveCounter* counter) const override;

 private:
  Index n_;
};

/// Exponential-kernel covariance on n equispaced points of [0,1].
Matrix line_covariance(Index n, double sigma = 1.0, double length = 0.25);

}  // namespace drmc
