#include "drmc/verify.hpp"

#include "drmc/acceptance.hpp"
#include "drmc/bounds.hpp"
#include "drmc/diagnostics.hpp"
#include "drmc/elliptic.hpp"
#include "drmc/linear_models.hpp"
#include "drmc/lis.hpp"
#include "drmc/sampler.hpp"

#include <Eigen/Eigenvalues>

#include <chrono>
#include <cmath>
#include <iomanip>
#include <ostream>
#include <sstream>

namespace drmc {

bool VerifyReport::passed() const {
  for (const auto& c : checks)
    if (!c.passed) return false;
  return true;
}

nlohmann::json VerifyReport::to_json() const {
  nlohmann::json checks_j = nlohmann::json::array(), failures = nlohmann::json::array();
  for (const auto& c : checks) {
    const auto safe = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(std::to_string(x)); };
    checks_j.push_back({{"suite", c.suite},
                        {"name", c.name},
                        {"passed", c.passed},
                        {"value", safe(c.value)},
                        {"tolerance", safe(c.tolerance)},
                        {"detail", c.detail}});
    if (!c.passed) failures.push_back(c.suite + "/" + c.name);
  }
  return {{"level", level == VerifyLevel::fast ? "fast" : "full"},
          {"passed", passed()},
          {"checks", checks_j},
          {"failures", failures}};
}

namespace {

struct Suite {
  VerifyReport& report;
  std::ostream& log;
  std::string name;

  void check(const std::string& what, double value, double tol, const std::string& detail = {}) {
    VerifyCheck c{name, what, value <= tol, value, tol, detail};
    log << (c.passed ? "  ok   " : "  FAIL ") << name << '/' << what << ": " << std::scientific << std::setprecision(3)
        << value << " (tolerance " << tol << ")" << std::defaultfloat << (detail.empty() ? "" : "  " + detail) << '\n';
    report.checks.push_back(std::move(c));
  }
};

Matrix random_psd(Index n, Index rank, Rng& rng) {
  Matrix G(n, rank);
  for (Index j = 0; j < rank; ++j) G.col(j) = standard_normal(n, rng);
  return G * G.transpose();
}

void suite_woodbury(Suite s, Index n) {
  Rng rng(101);
  const Matrix H = random_psd(n, n, rng);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(H);
  const LowRankSpectrum spec(eig.eigenvalues().reverse(), eig.eigenvectors().rowwise().reverse());
  const Matrix I = Matrix::Identity(n, n);
  const Matrix K = (I + H).inverse();
  const Eigen::SelfAdjointEigenSolver<Matrix> keig(K);
  const Matrix K_sqrt = keig.eigenvectors() * keig.eigenvalues().cwiseSqrt().asDiagonal() * keig.eigenvectors().transpose();
  double e_k = 0, e_sqrt = 0, e_comp = 0, e_inv = 0;
  for (int t = 0; t < 10; ++t) {
    const Vector v = standard_normal(n, rng);
    e_k = std::max(e_k, (apply_K_hat(v, spec) - K * v).norm() / (K * v).norm());
    e_sqrt = std::max(e_sqrt, (apply_sqrtK_hat(v, spec) - K_sqrt * v).norm() / (K_sqrt * v).norm());
    e_comp = std::max(e_comp, (apply_sqrtK_hat(apply_sqrtK_hat(v, spec), spec) - apply_K_hat(v, spec)).norm() / v.norm());
    e_inv = std::max(e_inv, (apply_K_hat_inv(apply_K_hat(v, spec), spec) - v).norm() / v.norm());
  }
  s.check("K_hat vs (I + H)^-1", e_k, 1e-10);
  s.check("sqrtK_hat vs dense root", e_sqrt, 1e-10);
  s.check("sqrtK_hat composed twice", e_comp, 1e-10);
  s.check("K_hat_inv after K_hat", e_inv, 1e-10);
}

double fd_error(const ForwardModel& model, const Vector& u, int directions, std::uint64_t seed) {
  Rng rng(seed);
  auto pt = model.evaluate(u, nullptr);
  const Vector g = pt->gradient();
  double worst = 0;
  for (int d = 0; d < directions; ++d) {
    Vector w = standard_normal(u.size(), rng);
    w /= w.norm();
    const double eps = 1e-5;
    const double fp = model.evaluate(u + eps * w, nullptr)->potential();
    const double fm = model.evaluate(u - eps * w, nullptr)->potential();
    const double fd = (fp - fm) / (2 * eps);
    const double ad = g.dot(w);
    worst = std::max(worst, std::abs(fd - ad) / std::max(std::abs(ad), 1e-12));
  }
  return worst;
}

std::shared_ptr<EllipticModel> elliptic_model(int n) {
  const Mesh2D data_mesh(4 * n, 4 * n);
  const EllipticProblem data_problem(data_mesh, default_sensors());
  const SyntheticData syn = generate_data(true_field(data_mesh), data_problem, 10.0, 1);
  auto problem = std::make_shared<EllipticProblem>(Mesh2D(n, n), default_sensors());
  problem->set_data(syn.y, syn.noise_sd);
  return std::make_shared<EllipticModel>(problem);
}

void suite_adjoint(Suite s, int mesh, int directions) {
  const auto model = elliptic_model(mesh);
  const Mesh2D m(mesh, mesh);
  const CovarianceOperator prior = build_prior_covariance(m.nodes(), 1.25, 0.0625);
  const Vector u = 0.5 * sample_prior(prior, 3).coefficients;
  s.check("elliptic " + std::to_string(mesh) + "x" + std::to_string(mesh), fd_error(*model, u, directions, 5), 1e-4);
  const LinearGaussianModel lin = random_linear_model(8, 4, 11);
  Rng rng(9);
  s.check("linear", fd_error(lin, standard_normal(8, rng), directions, 6), 1e-8);
}

void suite_gnh(Suite s, int mesh) {
  const auto model = elliptic_model(mesh);
  const Index n = model->dim();
  const CovarianceOperator prior = build_prior_covariance(Mesh2D(mesh, mesh).nodes(), 1.25, 0.0625);
  const Vector u = 0.5 * sample_prior(prior, 4).coefficients;
  auto pt = model->evaluate(u, nullptr);
  Matrix H(n, n);
  for (Index j = 0; j < n; ++j) H.col(j) = pt->gnh(Vector::Unit(n, j));
  const double scale = H.cwiseAbs().maxCoeff();
  s.check("symmetry", (H - H.transpose()).cwiseAbs().maxCoeff() / scale, 1e-9);
  const Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (H + H.transpose()));
  const double min_eig = eig.eigenvalues().minCoeff() / eig.eigenvalues().maxCoeff();
  s.check("positive semidefinite", std::max(0.0, -min_eig), 1e-10);
  Index rank = 0;
  for (Index i = 0; i < n; ++i) rank += eig.eigenvalues()[i] > 1e-10 * eig.eigenvalues().maxCoeff();
  s.check("numerical rank minus observations", double(std::max<Index>(0, rank - 25)), 0.0,
          "rank " + std::to_string(rank));
}

void suite_bounds(Suite s, int trials) {
  const LinearGaussianModel model = random_linear_model(30, 12, 21, 0.3);
  BoundOptions opts;
  opts.trials = trials;
  const BoundReport rep = bound_report(model, opts);
  for (BoundKind k : {BoundKind::truncation, BoundKind::empirical, BoundKind::trajectory}) {
    double worst = 0;
    int count = 0;
    for (const auto& t : rep.trials) {
      if (t.kind != k) continue;
      ++count;
      worst = std::max(worst, t.lhs - t.rhs);
    }
    s.check(to_string(k) + " (max lhs - rhs)", worst, opts.tolerance, std::to_string(count) + " trials");
  }
}

// Nonlinear model with a position-dependent GNH.
struct WarpedSetup {
  Matrix A;
  std::unique_ptr<WarpedLinearModel> model;
  CovarianceOperator prior;
  WarpedSetup(Index n, Index m, std::uint64_t seed) : prior(line_covariance(n)) {
    Rng rng(seed);
    A = Matrix(m, n);
    for (Index j = 0; j < n; ++j) A.col(j) = standard_normal(m, rng);
    const Vector y = standard_normal(m, rng);
    model = std::make_unique<WarpedLinearModel>(A, 0.5, y, 0.5);
  }
};

void suite_determinant_identity(Suite s, int trials) {
  WarpedSetup w(10, 4, 31);
  const WhitenedTarget target(*w.model, w.prior);
  Rng rng(32);
  double worst = 0, worst_frozen = 0;
  for (int t = 0; t < trials; ++t) {
    const double h = 0.1 + 3.0 * std::uniform_real_distribution<double>(0, 1)(rng);
    const bool gr = t % 2 == 0;
    const StepParams p = StepParams::from_h(h, gr, false);
    State a = target.evaluate(0.8 * standard_normal(10, rng), true);
    State b = target.evaluate(0.8 * standard_normal(10, rng), true);
    const Index r = 1 + Index(t % 4);
    // The identity holds for a common basis with position-specific eigenvalues.
    const LowRankSpectrum sa = local_spectrum(a, target, Truncation::fixed(r));
    const LowRankSpectrum sb = local_spectrum(b, target, Truncation::fixed(r));
    LowRankSpectrum sb_shared(sb.eigenvalues(), sa.basis());
    sb_shared.set_anchor(sb.anchor());
    a.spec = std::make_shared<const LowRankSpectrum>(sa);
    b.spec = std::make_shared<const LowRankSpectrum>(sb_shared);
    const double dr = dr_mmala_log_ratio(a, b, p);
    const double dili = dili_log_ratio(a.v, b.v, a.phi, b.phi, a.grad, b.grad, dili_connection(*a.spec, p),
                                       dili_connection(*b.spec, p));
    const double det = 0.5 * (a.spec->log_det_d() - b.spec->log_det_d());
    worst = std::max(worst, std::abs((dr - dili) - det));
    // A shared global subspace makes the determinant terms cancel.
    LowRankSpectrum global = *a.spec;
    global.set_anchor(std::nullopt);
    State a2 = a, b2 = b;
    a2.spec = b2.spec = std::make_shared<const LowRankSpectrum>(global);
    const DiliOperators ops = dili_connection(global, p);
    const double dr2 = dr_mmala_log_ratio(a2, b2, p);
    const double dili2 = dili_log_ratio(a.v, b.v, a.phi, b.phi, a.grad, b.grad, ops, ops);
    worst_frozen = std::max(worst_frozen, std::abs(dr2 - dili2));
  }
  s.check("position-specific difference minus determinant term", worst, 1e-10);
  s.check("shared subspace ratios", worst_frozen, 1e-12);
}

void suite_leapfrog(Suite s, int trials) {
  WarpedSetup w(10, 4, 41);
  const WhitenedTarget target(*w.model, w.prior);
  Rng rng(42);
  double worst = 0;
  for (int t = 0; t < trials; ++t) {
    const StepParams p = StepParams::from_h(0.5 + t % 3, true, t % 2 == 1, 6);
    const DriftField g = [&](const Vector& x) {
      State st = target.evaluate(x, true);
      // Full GNH rank keeps the stiff directions inside the subspace.
      const LowRankSpectrum spec = local_spectrum(st, target, Truncation::fixed(4));
      return whitened_ngrad(x, st.grad, spec, p.gamma_r, p.gamma_perp);
    };
    const Vector v0 = standard_normal(10, rng), vt0 = standard_normal(10, rng);
    Vector v = v0, vt = vt0;
    for (int i = 0; i < p.leapfrog_steps; ++i) {
      const auto r = hmc_leapfrog(v, vt, g, p.epsilon);
      v = r.v;
      vt = r.vt;
    }
    vt = -vt;
    for (int i = 0; i < p.leapfrog_steps; ++i) {
      const auto r = hmc_leapfrog(v, vt, g, p.epsilon);
      v = r.v;
      vt = r.vt;
    }
    worst = std::max({worst, (v - v0).norm() / v0.norm(), (vt + vt0).norm() / vt0.norm()});
  }
  s.check("forward then reversed trajectory", worst, 1e-9);
}

void suite_moments(Suite s, const std::vector<Algorithm>& algorithms, int iterations, double se_mean, double se_var) {
  const LinearGaussianModel model = random_linear_model(8, 4, 11);
  const CovarianceOperator prior(model.prior_cov());
  const GaussianPosterior post = analytic_posterior(model);
  for (Algorithm a : algorithms) {
    const WhitenedTarget target(model, prior);
    ChainSettings cs;
    cs.algorithm = a;
    cs.iterations = iterations + iterations / 10;
    cs.burn_in = iterations / 10;
    cs.h = a == Algorithm::pcn ? 0.5 : 1.0;
    cs.seed = 1234;
    cs.lis.n_lag = 20;
    const ChainRecord rec = run_chain(target, cs);
    double z_mean = 0, z_var = 0;
    for (Index i = 0; i < rec.samples.cols(); ++i) {
      const Vector x = rec.samples.col(i);
      const double m = x.mean();
      const Vector c = (x.array() - m).matrix();
      const double var_hat = c.squaredNorm() / double(x.size() - 1);
      const double se_m = std::sqrt(var_hat / std::max(1.0, ess(x, false)));
      const Vector c2 = c.array().square().matrix();
      const double sd2 = std::sqrt((c2.array() - c2.mean()).square().sum() / double(x.size() - 1));
      const double se_v = sd2 / std::sqrt(std::max(1.0, ess(c2, false)));
      z_mean = std::max(z_mean, std::abs(m - post.mean[i]) / se_m);
      z_var = std::max(z_var, std::abs(var_hat - post.covariance(i, i)) / se_v);
    }
    s.check(to_string(a) + " mean (max |z|)", z_mean, se_mean);
    s.check(to_string(a) + " variance (max |z|)", z_var, se_var);
  }
}

}  // namespace

VerifyReport run_verify(VerifyLevel level, std::ostream& log) {
  VerifyReport rep;
  rep.level = level;
  const bool full = level == VerifyLevel::full;
  const auto t0 = std::chrono::steady_clock::now();
  auto run = [&](const std::string& name, auto&& fn) {
    log << name << '\n';
    try {
      fn(Suite{rep, log, name});
    } catch (const std::exception& e) {
      rep.checks.push_back({name, "exception", false, std::numeric_limits<double>::infinity(), 0.0, e.what()});
      log << "  FAIL " << name << ": " << e.what() << '\n';
    }
  };
  run("woodbury", [&](Suite s) { suite_woodbury(s, 12); });
  run("adjoint-fd", [&](Suite s) { suite_adjoint(s, full ? 16 : 8, full ? 20 : 5); });
  run("gnh", [&](Suite s) { suite_gnh(s, full ? 16 : 8); });
  run("bounds", [&](Suite s) { suite_bounds(s, full ? 200 : 40); });
  run("determinant-identity", [&](Suite s) { suite_determinant_identity(s, full ? 100 : 20); });
  run("leapfrog", [&](Suite s) { suite_leapfrog(s, full ? 20 : 5); });
  // Each sampler contributes 16 z-scores, so the thresholds allow for the maximum.
  if (full) {
    run("moments", [&](Suite s) { suite_moments(s, all_algorithms(), 100000, 4.0, 6.0); });
  } else {
    run("moments", [&](Suite s) {
      suite_moments(s, {Algorithm::pcn, Algorithm::inf_mala, Algorithm::adr_inf_mmala}, 20000, 4.0, 6.0);
    });
  }
  log << "verify " << (full ? "full" : "fast") << ": " << (rep.passed() ? "passed" : "FAILED") << " in " << std::fixed
      << std::setprecision(1) << std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count() << " s\n";
  log.unsetf(std::ios::floatfield);
  return rep;
}

}  // namespace drmc
