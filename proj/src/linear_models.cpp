#include "drmc/linear_models.hpp"

#include <cmath>
#include <stdexcept>

namespace drmc {

namespace {

class LinearPoint final : public ModelPoint {
 public:
  LinearPoint(const LinearGaussianModel* model, Vector u, SolveCounter* counter)
      : model_(model), u_(std::move(u)), counter_(counter), phi_(model->potential(u_)) {}
  double potential() const override { return phi_; }
  const Vector& gradient() override {
    if (grad_.size() == 0) {
      grad_ = model_->gradient(u_);
      if (counter_) ++counter_->adjoint;
    }
    return grad_;
  }
  Vector gnh(const Vector& w) const override {
    if (counter_) {
      ++counter_->incremental;
      ++counter_->adjoint;
    }
    return model_->gnh() * w;
  }

 private:
  const LinearGaussianModel* model_;
  Vector u_;
  SolveCounter* counter_;
  double phi_;
  Vector grad_;
};

class WarpedPoint final : public ModelPoint {
 public:
  WarpedPoint(const WarpedLinearModel* model, const Vector& u, const Vector& y, SolveCounter* counter)
      : model_(model), counter_(counter) {
    jac_diag_ = 1.0 + model->warp() * u.array().cos();
    const double s2 = model->noise_sd() * model->noise_sd();
    residual_ = (model->forward(u) - y) / s2;
    phi_ = 0.5 * s2 * residual_.squaredNorm();
  }
  double potential() const override { return phi_; }
  const Vector& gradient() override {
    if (grad_.size() == 0) {
      grad_ = jac_diag_.cwiseProduct(model_->A().transpose() * residual_);
      if (counter_) ++counter_->adjoint;
    }
    return grad_;
  }
  Vector gnh(const Vector& w) const override {
    if (counter_) {
      ++counter_->incremental;
      ++counter_->adjoint;
    }
    const double s2 = model_->noise_sd() * model_->noise_sd();
    const Vector Jw = model_->A() * jac_diag_.cwiseProduct(w);
    return jac_diag_.cwiseProduct(model_->A().transpose() * Jw) / s2;
  }

 private:
  const WarpedLinearModel* model_;
  SolveCounter* counter_;
  Vector jac_diag_;
  Vector residual_;
  double phi_ = 0.0;
  Vector grad_;
};

class FlatPoint final : public ModelPoint {
 public:
  explicit FlatPoint(Index n) : grad_(Vector::Zero(n)) {}
  double potential() const override { return 0.0; }
  const Vector& gradient() override { return grad_; }
  Vector gnh(const Vector& w) const override { return Vector::Zero(w.size()); }

 private:
  Vector grad_;
};

}  // namespace

LinearGaussianModel::LinearGaussianModel(Matrix A, Matrix noise_cov, Matrix prior_cov, Vector y)
    : A_(std::move(A)), Sigma_(std::move(noise_cov)), C_(std::move(prior_cov)), y_(std::move(y)) {
  if (Sigma_.rows() != A_.rows() || Sigma_.cols() != A_.rows()) throw std::invalid_argument("noise covariance must be m x m");
  if (C_.rows() != A_.cols() || C_.cols() != A_.cols()) throw std::invalid_argument("prior covariance must be n x n");
  if (y_.size() != A_.rows()) throw std::invalid_argument("data must have length m");
  Sigma_llt_.compute(Sigma_);
  if (Sigma_llt_.info() != Eigen::Success) throw NumericalError("noise covariance is not SPD");
  H_ = A_.transpose() * Sigma_llt_.solve(A_);
  H_ = 0.5 * (H_ + H_.transpose());
}

double LinearGaussianModel::potential(const Vector& u) const {
  const Vector r = y_ - A_ * u;
  return 0.5 * r.dot(Sigma_llt_.solve(r));
}

Vector LinearGaussianModel::gradient(const Vector& u) const {
  return A_.transpose() * Sigma_llt_.solve(A_ * u - y_);
}

std::unique_ptr<ModelPoint> LinearGaussianModel::evaluate(const Vector& u, SolveCounter* counter) const {
  if (u.size() != dim()) throw std::invalid_argument("parameter dimension mismatch");
  if (counter) ++counter->forward;
  return std::make_unique<LinearPoint>(this, u, counter);
}

GaussianPosterior analytic_posterior(const LinearGaussianModel& model) {
  const Index n = model.dim();
  Eigen::LLT<Matrix> Cllt(model.prior_cov());
  if (Cllt.info() != Eigen::Success) throw NumericalError("prior covariance is not SPD");
  const Matrix Cinv = Cllt.solve(Matrix::Identity(n, n));
  Matrix P = Cinv + model.gnh();
  P = 0.5 * (P + P.transpose());
  Eigen::LLT<Matrix> Pllt(P);
  if (Pllt.info() != Eigen::Success) throw NumericalError("posterior precision is singular");
  GaussianPosterior post;
  post.covariance = Pllt.solve(Matrix::Identity(n, n));
  post.covariance = 0.5 * (post.covariance + post.covariance.transpose());
  post.mean = Pllt.solve(-model.gradient(Vector::Zero(n)));
  return post;
}

Matrix line_covariance(Index n, double sigma, double length) {
  Matrix C(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < n; ++j) {
      const double d = n > 1 ? std::abs(double(i - j)) / double(n - 1) : 0.0;
      C(i, j) = sigma * sigma * std::exp(-d / length);
    }
  return C;
}

LinearGaussianModel random_linear_model(Index n, Index m, std::uint64_t seed, double noise_sd, double scale) {
  Rng rng(seed);
  Matrix A(m, n);
  for (Index j = 0; j < n; ++j) A.col(j) = scale * standard_normal(m, rng);
  const Matrix C = line_covariance(n);
  Eigen::LLT<Matrix> L(C);
  const Vector u_true = L.matrixL() * standard_normal(n, rng);
  const Vector y = A * u_true + noise_sd * standard_normal(m, rng);
  return LinearGaussianModel(std::move(A), noise_sd * noise_sd * Matrix::Identity(m, m), C, y);
}

WarpedLinearModel::WarpedLinearModel(Matrix A, double noise_sd, Vector y, double warp)
    : A_(std::move(A)), noise_sd_(noise_sd), y_(std::move(y)), warp_(warp) {
  if (!(noise_sd_ > 0.0)) throw std::invalid_argument("noise sd must be positive");
  if (!(std::abs(warp_) < 1.0)) throw std::invalid_argument("warp must satisfy |a| < 1");
  if (y_.size() != A_.rows()) throw std::invalid_argument("data must have length m");
}

Vector WarpedLinearModel::forward(const Vector& u) const {
  return A_ * (u.array() + warp_ * u.array().sin()).matrix();
}

Matrix WarpedLinearModel::gnh(const Vector& u) const {
  const Vector jd = 1.0 + warp_ * u.array().cos();
  const Matrix J = A_ * jd.asDiagonal();
  return J.transpose() * J / (noise_sd_ * noise_sd_);
}

std::unique_ptr<ModelPoint> WarpedLinearModel::evaluate(const Vector& u, SolveCounter* counter) const {
  if (u.size() != dim()) throw std::invalid_argument("parameter dimension mismatch");
  if (counter) ++counter->forward;
  return std::make_unique<WarpedPoint>(this, u, y_, counter);
}

std::unique_ptr<ModelPoint> FlatModel::evaluate(const Vector& u, SolveCounter* counter) const {
  if (u.size() != n_) throw std::invalid_argument("parameter dimension mismatch");
  if (counter) ++counter->forward;
  return std::make_unique<FlatPoint>(n_);
}

}  // namespace drmc
