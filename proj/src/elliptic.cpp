#include "drmc/elliptic.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <sstream>
#include <stdexcept>

namespace drmc {

Mesh2D::Mesh2D(int nx_, int ny_) : nx(nx_), ny(ny_) {
  if (nx < 2 || ny < 2) throw std::invalid_argument("mesh needs at least 2 cells per side");
}

Eigen::Vector2d Mesh2D::point(Index k) const {
  const Index i = k % (nx + 1);
  const Index j = k / (nx + 1);
  return {double(i) * hx(), double(j) * hy()};
}

std::vector<Eigen::Vector2d> Mesh2D::nodes() const {
  std::vector<Eigen::Vector2d> out;
  out.reserve(static_cast<std::size_t>(num_nodes()));
  for (Index k = 0; k < num_nodes(); ++k) out.push_back(point(k));
  return out;
}

double Mesh2D::control_area(Index k) const {
  const Index i = k % (nx + 1);
  const Index j = k / (nx + 1);
  const double wx = (i == 0 || i == nx) ? 0.5 : 1.0;
  const double wy = (j == 0 || j == ny) ? 0.5 : 1.0;
  return wx * hx() * wy * hy();
}

double forcing_value(const Eigen::Vector2d& s) {
  static const Eigen::Vector2d centers[4] = {{0.3, 0.3}, {0.7, 0.3}, {0.7, 0.7}, {0.3, 0.7}};
  static const double weights[4] = {2.0, -3.0, 3.0, -2.0};
  constexpr double sd = 0.05;
  const double norm = 1.0 / (2.0 * std::numbers::pi * sd * sd);
  double f = 0.0;
  for (int c = 0; c < 4; ++c) {
    const double r2 = (s - centers[c]).squaredNorm();
    f += weights[c] * norm * std::exp(-0.5 * r2 / (sd * sd));
  }
  return f;
}

Vector build_forcing(const Mesh2D& mesh) {
  Vector f(mesh.num_nodes());
  for (Index k = 0; k < f.size(); ++k) f[k] = forcing_value(mesh.point(k));
  return f;
}

std::vector<Eigen::Vector2d> default_sensors() {
  std::vector<Eigen::Vector2d> s;
  for (int j = 1; j <= 5; ++j)
    for (int i = 1; i <= 5; ++i) s.emplace_back(i / 6.0, j / 6.0);
  return s;
}

double true_field_value(const Eigen::Vector2d& s) {
  const double smooth = std::sin(std::numbers::pi * s[0]) * std::sin(std::numbers::pi * s[1]);
  const double bump = (s - Eigen::Vector2d(0.7, 0.3)).norm() < 0.15 ? 0.5 : 0.0;
  return smooth + bump;
}

Vector true_field(const Mesh2D& mesh) {
  Vector u(mesh.num_nodes());
  for (Index k = 0; k < u.size(); ++k) u[k] = true_field_value(mesh.point(k));
  return u;
}

EllipticProblem::EllipticProblem(Mesh2D mesh, std::vector<Eigen::Vector2d> sensors)
    : mesh_(mesh), sensors_(std::move(sensors)) {
  if (sensors_.empty()) throw std::invalid_argument("at least one sensor is required");
  const int nx = mesh_.nx, ny = mesh_.ny;
  const double hx = mesh_.hx(), hy = mesh_.hy();
  for (int j = 0; j <= ny; ++j) {
    const double ly = (j == 0 || j == ny) ? 0.5 * hy : hy;
    for (int i = 0; i < nx; ++i) faces_.push_back({mesh_.node(i, j), mesh_.node(i + 1, j), ly / hx});
  }
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i <= nx; ++i) {
      const double lx = (i == 0 || i == nx) ? 0.5 * hx : hx;
      faces_.push_back({mesh_.node(i, j), mesh_.node(i, j + 1), lx / hy});
    }
  }

  std::vector<Eigen::Triplet<double>> trip;
  for (std::size_t s = 0; s < sensors_.size(); ++s) {
    const auto& x = sensors_[s];
    if (!(x[0] >= 0.0 && x[0] <= 1.0 && x[1] >= 0.0 && x[1] <= 1.0)) {
      std::ostringstream msg;
      msg << "sensor " << s << " at (" << x[0] << ", " << x[1] << ") lies outside the unit square";
      throw std::invalid_argument(msg.str());
    }
    const int i = std::min(int(std::floor(x[0] / hx)), nx - 1);
    const int j = std::min(int(std::floor(x[1] / hy)), ny - 1);
    const double tx = x[0] / hx - i, ty = x[1] / hy - j;
    const Index r = static_cast<Index>(s);
    trip.emplace_back(r, mesh_.node(i, j), (1 - tx) * (1 - ty));
    trip.emplace_back(r, mesh_.node(i + 1, j), tx * (1 - ty));
    trip.emplace_back(r, mesh_.node(i, j + 1), (1 - tx) * ty);
    trip.emplace_back(r, mesh_.node(i + 1, j + 1), tx * ty);
  }
  O_.resize(static_cast<Index>(sensors_.size()), mesh_.num_nodes());
  O_.setFromTriplets(trip.begin(), trip.end());

  set_forcing(build_forcing(mesh_));
  y_ = Vector::Zero(O_.rows());
}

void EllipticProblem::set_forcing(Vector f) {
  if (f.size() != mesh_.num_nodes()) throw std::invalid_argument("forcing size does not match mesh");
  forcing_ = std::move(f);
  rhs_.resize(forcing_.size());
  for (Index k = 0; k < rhs_.size(); ++k) rhs_[k] = forcing_[k] * mesh_.control_area(k);
}

void EllipticProblem::set_data(Vector y, double noise_sd) {
  if (y.size() != O_.rows()) throw std::invalid_argument("data size does not match sensor count");
  if (!(noise_sd > 0.0)) throw std::invalid_argument("noise standard deviation must be positive");
  y_ = std::move(y);
  noise_sd_ = noise_sd;
}

SparseMatrix EllipticProblem::assemble(const Vector& T) const {
  const Index n = mesh_.num_nodes();
  std::vector<Eigen::Triplet<double>> trip;
  trip.reserve(faces_.size() * 4 + 2 * static_cast<std::size_t>(n));
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto& face = faces_[f];
    const double t = T[static_cast<Index>(f)];
    trip.emplace_back(face.a, face.a, t);
    trip.emplace_back(face.b, face.b, t);
    trip.emplace_back(face.a, face.b, -t);
    trip.emplace_back(face.b, face.a, -t);
  }
  for (Index k = 0; k < n; ++k) {
    trip.emplace_back(k, n, 1.0);
    trip.emplace_back(n, k, 1.0);
  }
  SparseMatrix K(n + 1, n + 1);
  K.setFromTriplets(trip.begin(), trip.end());
  return K;
}

ForwardSolveResult EllipticProblem::solve(const Vector& u) const {
  const Index n = mesh_.num_nodes();
  if (u.size() != n) throw std::invalid_argument("field size does not match mesh");
  ForwardSolveResult out;
  out.k = u.array().exp();
  for (Index i = 0; i < n; ++i) {
    if (!std::isfinite(out.k[i]) || out.k[i] <= 0.0) {
      std::ostringstream msg;
      msg << "conductivity exp(u) is not finite and positive at node " << i << " (u = " << u[i] << ")";
      throw NumericalError(msg.str());
    }
  }
  out.transmissivity.resize(num_faces());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const double ka = out.k[faces_[f].a], kb = out.k[faces_[f].b];
    out.transmissivity[static_cast<Index>(f)] = faces_[f].coeff * 2.0 * ka * kb / (ka + kb);
  }
  out.factor = std::make_shared<SparseSolver>();
  const SparseMatrix K = assemble(out.transmissivity);
  out.factor->compute(K);
  if (out.factor->info() != Eigen::Success) throw NumericalError("factorization of the constrained stiffness system failed");
  Vector rhs(n + 1);
  rhs.head(n) = rhs_;
  rhs[n] = 0.0;
  out.p = solve_with(out, rhs);
  return out;
}

Vector EllipticProblem::solve_with(const ForwardSolveResult& fwd, const Vector& rhs) const {
  const Index n = mesh_.num_nodes();
  Vector x = fwd.factor->solve(rhs);
  if (!x.allFinite()) throw NumericalError("constrained solve produced non-finite values");
  return x.head(n);
}

double EllipticProblem::residual(const ForwardSolveResult& fwd) const {
  const Index n = mesh_.num_nodes();
  const SparseMatrix K = assemble(fwd.transmissivity);
  Vector rhs(n + 1);
  rhs.head(n) = rhs_;
  rhs[n] = 0.0;
  Vector x = fwd.factor->solve(rhs);
  return (K * x - rhs).norm() / rhs.norm();
}

Vector EllipticProblem::observe(const Vector& p) const { return O_ * p; }

double EllipticProblem::potential(const ForwardSolveResult& fwd) const {
  return 0.5 * (y_ - observe(fwd.p)).squaredNorm() / (noise_sd_ * noise_sd_);
}

Vector EllipticProblem::face_chain_rule(const ForwardSolveResult& fwd, const Vector& x) const {
  Vector g = Vector::Zero(mesh_.num_nodes());
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto& face = faces_[f];
    const double ka = fwd.k[face.a], kb = fwd.k[face.b];
    const double s = ka + kb;
    const double flux = (x[face.a] - x[face.b]) * (fwd.p[face.a] - fwd.p[face.b]);
    g[face.a] -= face.coeff * 2.0 * kb * kb * ka / (s * s) * flux;
    g[face.b] -= face.coeff * 2.0 * ka * ka * kb / (s * s) * flux;
  }
  return g;
}

Vector EllipticProblem::jacobian_adjoint(const ForwardSolveResult& fwd, const Vector& z) const {
  const Index n = mesh_.num_nodes();
  Vector rhs(n + 1);
  rhs.head(n) = O_.transpose() * z;
  rhs[n] = 0.0;
  return face_chain_rule(fwd, solve_with(fwd, rhs));
}

Vector EllipticProblem::gradient(const ForwardSolveResult& fwd) const {
  const Vector z = (observe(fwd.p) - y_) / (noise_sd_ * noise_sd_);
  return jacobian_adjoint(fwd, z);
}

Vector EllipticProblem::jacobian_action(const ForwardSolveResult& fwd, const Vector& w) const {
  const Index n = mesh_.num_nodes();
  Vector rhs = Vector::Zero(n + 1);
  for (std::size_t f = 0; f < faces_.size(); ++f) {
    const auto& face = faces_[f];
    const double ka = fwd.k[face.a], kb = fwd.k[face.b];
    const double s = ka + kb;
    const double dT = face.coeff * 2.0 * (kb * kb * ka * w[face.a] + ka * ka * kb * w[face.b]) / (s * s);
    const double jump = dT * (fwd.p[face.a] - fwd.p[face.b]);
    rhs[face.a] -= jump;
    rhs[face.b] += jump;
  }
  return observe(solve_with(fwd, rhs));
}

Vector EllipticProblem::gnh_action(const ForwardSolveResult& fwd, const Vector& w) const {
  return jacobian_adjoint(fwd, jacobian_action(fwd, w) / (noise_sd_ * noise_sd_));
}

SyntheticData generate_data(const Vector& u_true, const EllipticProblem& data_problem,
                            double snr, std::uint64_t seed) {
  if (!(snr > 0.0)) throw std::invalid_argument("snr must be positive");
  const double umax = u_true.maxCoeff();
  if (!(umax > 0.0)) throw std::invalid_argument("max of the true field must be positive for the snr to be defined");
  SyntheticData out;
  out.clean = data_problem.observe(data_problem.solve(u_true).p);
  if (std::isinf(snr)) {
    out.noise_sd = 0.0;
    out.y = out.clean;
    return out;
  }
  out.noise_sd = umax / snr;
  Rng rng(seed);
  out.y = out.clean + out.noise_sd * standard_normal(out.clean.size(), rng);
  return out;
}

namespace {

class EllipticPoint final : public ModelPoint {
 public:
  EllipticPoint(const EllipticProblem* problem, ForwardSolveResult fwd, SolveCounter* counter)
      : problem_(problem), fwd_(std::move(fwd)), counter_(counter), phi_(problem->potential(fwd_)) {}

  double potential() const override { return phi_; }

  const Vector& gradient() override {
    if (grad_.size() == 0) {
      grad_ = problem_->gradient(fwd_);
      if (counter_) ++counter_->adjoint;
    }
    return grad_;
  }

  Vector gnh(const Vector& w) const override {
    if (counter_) {
      ++counter_->incremental;
      ++counter_->adjoint;
    }
    return problem_->gnh_action(fwd_, w);
  }

 private:
  const EllipticProblem* problem_;
  ForwardSolveResult fwd_;
  SolveCounter* counter_;
  double phi_;
  Vector grad_;
};

}  // namespace

EllipticModel::EllipticModel(std::shared_ptr<const EllipticProblem> problem) : problem_(std::move(problem)) {}

Index EllipticModel::dim() const { return problem_->mesh().num_nodes(); }
Index EllipticModel::num_observations() const { return problem_->observation_operator().rows(); }

std::unique_ptr<ModelPoint> EllipticModel::evaluate(const Vector& u, SolveCounter* counter) const {
  auto fwd = problem_->solve(u);
  if (counter) ++counter->forward;
  return std::make_unique<EllipticPoint>(problem_.get(), std::move(fwd), counter);
}

}  // namespace drmc
