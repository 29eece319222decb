#include "drmc/spectrum.hpp"

#include "drmc/covariance.hpp"
#include "drmc/kernels.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/QR>
#include <Eigen/SVD>

#include <algorithm>
#include <atomic>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace drmc {

LowRankSpectrum::LowRankSpectrum(Index n) : eigenvalues_(0), basis_(n, 0) {}

LowRankSpectrum::LowRankSpectrum(Vector eigenvalues, Matrix basis, Metric metric)
    : eigenvalues_(std::move(eigenvalues)), basis_(std::move(basis)), metric_(metric) {
  if (basis_.cols() != eigenvalues_.size()) throw std::invalid_argument("basis column count must equal the number of eigenvalues");
  for (Index i = 0; i < eigenvalues_.size(); ++i) {
    if (!std::isfinite(eigenvalues_[i]) || eigenvalues_[i] < 0.0)
      throw std::invalid_argument("eigenvalues must be finite and non-negative");
    if (i > 0 && eigenvalues_[i] > eigenvalues_[i - 1])
      throw std::invalid_argument("eigenvalues must be non-increasing");
  }
}

namespace {
std::atomic<Mutation> g_mutation{Mutation::none};
}

void set_mutation(Mutation m) { g_mutation = m; }
Mutation active_mutation() { return g_mutation; }

Vector LowRankSpectrum::d() const {
  // The mutation drops the identity from I + Lambda.
  if (g_mutation.load(std::memory_order_relaxed) == Mutation::dr_formula) return eigenvalues_.array().max(1e-300).inverse();
  return (1.0 + eigenvalues_.array()).inverse();
}

double LowRankSpectrum::log_det_d() const {
  double s = 0.0;
  for (Index i = 0; i < eigenvalues_.size(); ++i) s -= std::log1p(eigenvalues_[i]);
  return s;
}

LowRankSpectrum LowRankSpectrum::truncated(Index r) const {
  r = std::clamp<Index>(r, 0, rank());
  LowRankSpectrum out(eigenvalues_.head(r), basis_.leftCols(r), metric_);
  out.anchor_ = anchor_;
  return out;
}

LowRankSpectrum LowRankSpectrum::thresholded(double threshold) const {
  Index r = 0;
  while (r < rank() && eigenvalues_[r] >= threshold) ++r;
  return truncated(r);
}

double LowRankSpectrum::orthonormality_error() const {
  if (rank() == 0) return 0.0;
  return (basis_.transpose() * basis_ - Matrix::Identity(rank(), rank())).cwiseAbs().maxCoeff();
}

bool operator==(const LowRankSpectrum& a, const LowRankSpectrum& b) {
  return a.metric_ == b.metric_ && a.anchor_ == b.anchor_ && a.eigenvalues_.size() == b.eigenvalues_.size() &&
         a.basis_.rows() == b.basis_.rows() && a.basis_.cols() == b.basis_.cols() &&
         a.eigenvalues_ == b.eigenvalues_ && a.basis_ == b.basis_;
}

nlohmann::json to_json(const LowRankSpectrum& spec) {
  nlohmann::json j;
  j["r"] = spec.rank();
  j["n"] = spec.dim();
  j["eigenvalues"] = std::vector<double>(spec.eigenvalues().data(), spec.eigenvalues().data() + spec.rank());
  std::vector<double> basis;
  basis.reserve(static_cast<std::size_t>(spec.dim() * spec.rank()));
  for (Index i = 0; i < spec.dim(); ++i)
    for (Index k = 0; k < spec.rank(); ++k) basis.push_back(spec.basis()(i, k));
  j["basis"] = basis;
  j["metric"] = spec.metric() == Metric::identity ? "identity" : "covariance";
  if (spec.anchor()) j["anchor"] = *spec.anchor();
  return j;
}

LowRankSpectrum spectrum_from_json(const nlohmann::json& j) {
  const Index r = j.at("r").get<Index>();
  const auto evals = j.at("eigenvalues").get<std::vector<double>>();
  const auto basis = j.at("basis").get<std::vector<double>>();
  if (static_cast<Index>(evals.size()) != r) throw std::invalid_argument("spectrum JSON: eigenvalue count differs from r");
  Index n = 0;
  if (j.contains("n")) {
    n = j.at("n").get<Index>();
  } else if (r > 0) {
    n = static_cast<Index>(basis.size()) / r;
  }
  if (static_cast<Index>(basis.size()) != n * r) throw std::invalid_argument("spectrum JSON: basis size differs from n*r");
  const std::string metric = j.at("metric").get<std::string>();
  if (metric != "identity" && metric != "covariance") throw std::invalid_argument("spectrum JSON: unknown metric '" + metric + "'");
  Matrix V(n, r);
  for (Index i = 0; i < n; ++i)
    for (Index k = 0; k < r; ++k) V(i, k) = basis[static_cast<std::size_t>(i * r + k)];
  LowRankSpectrum spec(Eigen::Map<const Vector>(evals.data(), r), std::move(V),
                       metric == "identity" ? Metric::identity : Metric::covariance);
  if (j.contains("anchor")) spec.set_anchor(j.at("anchor").get<std::uint64_t>());
  return spec;
}

namespace {

Matrix orthonormal_columns(const Matrix& Y) {
  Eigen::HouseholderQR<Matrix> qr(Y);
  return qr.householderQ() * Matrix::Identity(Y.rows(), Y.cols());
}

}  // namespace

LowRankSpectrum randomized_eig(const LinearAction& apply_A, Index n, Index r, const RandomizedEigOptions& opts) {
  if (r < 0 || opts.oversampling < 0 || opts.power_iterations < 0) throw std::invalid_argument("negative rank, oversampling or power count");
  const Index l = r + opts.oversampling;
  if (l > n) throw std::invalid_argument("rank plus oversampling exceeds the dimension");
  if (r == 0) return LowRankSpectrum(n);

  Rng rng(opts.sketch_seed);
  Matrix Omega(n, l);
  for (Index k = 0; k < l; ++k) Omega.col(k) = standard_normal(n, rng);

  Matrix Y = kernels::apply_columns(apply_A, Omega);
  const Matrix probe = Omega.transpose() * Y;
  const double asym = (probe - probe.transpose()).norm();
  if (asym > opts.symmetry_tol * std::max(probe.norm(), 1e-300) && asym > 1e-14 * Omega.norm() * Y.norm()) {
    std::ostringstream msg;
    msg << "operator is not symmetric: relative asymmetry " << asym / probe.norm() << " on the sketch";
    throw std::invalid_argument(msg.str());
  }

  Matrix Q = orthonormal_columns(Y);
  for (Index it = 0; it < opts.power_iterations; ++it) {
    Q = orthonormal_columns(kernels::apply_columns(apply_A, Q));
    Q = orthonormal_columns(kernels::apply_columns(apply_A, Q));
  }
  const Matrix AQ = kernels::apply_columns(apply_A, Q);
  Matrix B = Q.transpose() * AQ;
  B = 0.5 * (B + B.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(B);
  if (eig.info() != Eigen::Success) throw NumericalError("projected eigenproblem failed");

  Vector lam(r);
  Matrix W(l, r);
  for (Index k = 0; k < r; ++k) {
    lam[k] = std::max(eig.eigenvalues()[l - 1 - k], 0.0);
    W.col(k) = eig.eigenvectors().col(l - 1 - k);
  }
  for (Index k = 1; k < r; ++k) lam[k] = std::min(lam[k], lam[k - 1]);
  return LowRankSpectrum(std::move(lam), Q * W, Metric::identity);
}

LowRankSpectrum generalized_eig(const LinearAction& apply_H, const CovarianceOperator& cov, Index r,
                                const RandomizedEigOptions& opts) {
  const LinearAction whitened = [&](const Vector& w) { return cov.apply_sqrt(apply_H(cov.apply_sqrt(w))); };
  return randomized_eig(whitened, cov.dim(), r, opts);
}

LowRankSpectrum to_original_coordinates(const LowRankSpectrum& spec, const CovarianceOperator& cov) {
  if (spec.metric() != Metric::identity) throw std::invalid_argument("spectrum is already in original coordinates");
  return LowRankSpectrum(spec.eigenvalues(), cov.sqrt_matrix() * spec.basis(), Metric::covariance);
}

namespace {

void require_identity(const LowRankSpectrum& spec, const Vector& v) {
  if (spec.metric() != Metric::identity) throw std::invalid_argument("low-rank covariance requires an identity-metric basis");
  if (spec.dim() != v.size()) throw std::invalid_argument("vector and spectrum dimensions differ");
}

}  // namespace

Vector apply_K_hat(const Vector& v, const LowRankSpectrum& spec) {
  require_identity(spec, v);
  const Vector c = spec.basis().transpose() * v;
  return v + spec.basis() * ((spec.d().array() - 1.0) * c.array()).matrix();
}

Vector apply_sqrtK_hat(const Vector& v, const LowRankSpectrum& spec) {
  require_identity(spec, v);
  const Vector c = spec.basis().transpose() * v;
  return v + spec.basis() * ((spec.d().array().sqrt() - 1.0) * c.array()).matrix();
}

Vector apply_K_hat_inv(const Vector& v, const LowRankSpectrum& spec) {
  require_identity(spec, v);
  const Vector c = spec.basis().transpose() * v;
  return v + spec.basis() * (spec.eigenvalues().array() * c.array()).matrix();
}

PriorBasedCovariance::PriorBasedCovariance(const CovarianceOperator& cov, const LowRankSpectrum& prior_spec,
                                           const LinearAction& apply_H)
    : cov_(&cov) {
  if (prior_spec.dim() != cov.dim()) throw std::invalid_argument("prior spectrum dimension differs from covariance");
  const Index r = prior_spec.rank();
  U_scaled_ = prior_spec.basis() * prior_spec.eigenvalues().cwiseSqrt().asDiagonal();
  Matrix Hr = U_scaled_.transpose() * kernels::apply_columns(apply_H, U_scaled_);
  Hr = 0.5 * (Hr + Hr.transpose());
  Matrix M = Hr + Matrix::Identity(r, r);
  Eigen::LDLT<Matrix> ldlt(M);
  if (ldlt.info() != Eigen::Success || !ldlt.isPositive()) throw NumericalError("projected prior-based system is not invertible");
  D_ = ldlt.solve(Matrix::Identity(r, r));
  if (!D_.allFinite()) throw NumericalError("projected prior-based inverse is not finite");
}

Vector PriorBasedCovariance::apply(const Vector& u) const {
  const Index r = D_.rows();
  const Vector c = U_scaled_.transpose() * u;
  return cov_->apply(u) + U_scaled_ * ((D_ - Matrix::Identity(r, r)) * c);
}

double forstner_distance(const LowRankSpectrum& a, const LowRankSpectrum& b) {
  if (a.dim() != b.dim()) throw std::invalid_argument("operators live on different spaces");
  if (a.metric() != Metric::identity || b.metric() != Metric::identity) throw std::invalid_argument("Förstner distance needs identity-metric bases");
  const Index n = a.dim();
  if (a.rank() + b.rank() == 0) return 0.0;
  Matrix joint(n, a.rank() + b.rank());
  joint << a.basis(), b.basis();
  Eigen::JacobiSVD<Matrix> svd(joint, Eigen::ComputeThinU);
  const Vector& sv = svd.singularValues();
  Index k = 0;
  while (k < sv.size() && sv[k] > 1e-10 * sv[0]) ++k;
  if (k == 0) return 0.0;
  const Matrix Q = svd.matrixU().leftCols(k);
  const Matrix Pa = Q.transpose() * a.basis();
  const Matrix Pb = Q.transpose() * b.basis();
  const Matrix A = Matrix::Identity(k, k) + Pa * a.eigenvalues().asDiagonal() * Pa.transpose();
  const Matrix B = Matrix::Identity(k, k) + Pb * b.eigenvalues().asDiagonal() * Pb.transpose();
  Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> ges(A, B, Eigen::EigenvaluesOnly | Eigen::Ax_lBx);
  if (ges.info() != Eigen::Success) throw NumericalError("generalized eigenproblem for the Förstner distance failed");
  double s = 0.0;
  for (Index i = 0; i < k; ++i) {
    const double g = ges.eigenvalues()[i];
    if (!(g > 0.0)) throw NumericalError("non-positive generalized eigenvalue: operators are not SPD");
    s += std::log(g) * std::log(g);
  }
  return std::sqrt(s);
}

}  // namespace drmc
