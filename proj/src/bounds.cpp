#include "drmc/bounds.hpp"

#include "drmc/covariance.hpp"
#include "drmc/proposals.hpp"

#include <json.hpp>

#include <Eigen/Eigenvalues>
#include <Eigen/QR>

#include <cmath>
#include <stdexcept>

namespace drmc {

std::string to_string(BoundKind k) {
  switch (k) {
    case BoundKind::truncation: return "truncation";
    case BoundKind::empirical: return "empirical";
    case BoundKind::trajectory: return "trajectory";
  }
  return "unknown";
}

BoundCoefficients truncation_bound_coefficients(double lam, bool gamma_perp, const StepParams& p) {
  const double c = lam / (1.0 + lam);
  return {p.rho1 * c, p.rho1 * (gamma_perp ? c : 1.0), p.rho2 * lam / (1.0 + lam + std::sqrt(1.0 + lam))};
}

namespace {

struct DenseGeometry {
  Matrix S;        // C^{1/2}
  Matrix H;        // whitened GNH
  Vector lam;      // descending eigenvalues of H
  Matrix U;        // matching eigenvectors
  Matrix K;        // (I + H)^{-1}
  Matrix K_sqrt;   // (I + H)^{-1/2}
};

DenseGeometry dense_geometry(const LinearGaussianModel& model, const CovarianceOperator& cov) {
  DenseGeometry g;
  g.S = cov.sqrt_matrix();
  g.H = g.S * model.gnh() * g.S;
  g.H = 0.5 * (g.H + g.H.transpose());
  Eigen::SelfAdjointEigenSolver<Matrix> eig(g.H);
  g.lam = eig.eigenvalues().reverse().cwiseMax(0.0);
  g.U = eig.eigenvectors().rowwise().reverse();
  const Vector d = (1.0 + g.lam.array()).inverse();
  g.K = g.U * d.asDiagonal() * g.U.transpose();
  g.K_sqrt = g.U * d.cwiseSqrt().asDiagonal() * g.U.transpose();
  return g;
}

LowRankSpectrum exact_spectrum(const DenseGeometry& g, Index r) {
  return LowRankSpectrum(g.lam.head(r), g.U.leftCols(r));
}

Vector whitened_gradient(const LinearGaussianModel& model, const DenseGeometry& g, const Vector& v) {
  return g.S * model.gradient(g.S * v);
}

std::string serialize(const BoundTrial& t, const Vector& v, const Vector& xi) {
  nlohmann::json j;
  j["kind"] = to_string(t.kind);
  j["trial"] = t.trial;
  j["gamma_perp"] = t.gamma_perp;
  j["rank"] = t.rank;
  j["lhs"] = t.lhs;
  j["rhs"] = t.rhs;
  j["v"] = std::vector<double>(v.data(), v.data() + v.size());
  j["xi"] = std::vector<double>(xi.data(), xi.data() + xi.size());
  return j.dump();
}

Matrix random_orthogonal(Index r, Rng& rng) {
  Matrix G(r, r);
  for (Index j = 0; j < r; ++j) G.col(j) = standard_normal(r, rng);
  Eigen::HouseholderQR<Matrix> qr(G);
  return qr.householderQ() * Matrix::Identity(r, r);
}

// Stepwise bound for I leapfrog steps started from a common (v, vt):
//   d_{i+1}  <= |cos e| d_i + |sin e| (dt_i + e/2 err_i)
//   dt_{i+1} <= |sin e| d_i + |cos e| (dt_i + e/2 err_i) + e/2 err_{i+1}
// with err_i = c (|v_i| + |gradPhi(v_i)|) + L d_i along the low-rank path.
struct TrajectoryOutcome {
  double lhs = 0.0, rhs = 0.0;
};

TrajectoryOutcome trajectory_difference(const LinearGaussianModel& model, const DenseGeometry& g, Index r,
                                        bool gamma_perp, const Vector& v0, const Vector& vt0, double eps,
                                        int steps) {
  const LowRankSpectrum spec = exact_spectrum(g, r);
  const Index n = v0.size();
  const double lam = r < g.lam.size() ? g.lam[r] : 0.0;
  const double c_state = lam / (1.0 + lam);
  const double c_grad = gamma_perp ? c_state : 1.0;
  const Matrix IminusK = Matrix::Identity(n, n) - g.K;
  const Matrix jac = IminusK - g.K * g.H;
  const double L = jac.norm() > 0 ? Eigen::JacobiSVD<Matrix>(jac).singularValues()[0] : 0.0;

  const DriftField g_dr = [&](const Vector& x) {
    return whitened_ngrad(x, whitened_gradient(model, g, x), spec, true, gamma_perp);
  };
  const DriftField g_full = [&](const Vector& x) -> Vector {
    return IminusK * x - g.K * whitened_gradient(model, g, x);
  };

  Vector a = v0, at = vt0, b = v0, bt = vt0;
  double d = 0.0, dt = 0.0;
  const double cs = std::abs(std::cos(eps)), sn = std::abs(std::sin(eps));
  auto err = [&](const Vector& x, double dist) {
    return c_state * x.norm() + c_grad * whitened_gradient(model, g, x).norm() + L * dist;
  };
  for (int i = 0; i < steps; ++i) {
    const double e_i = err(a, d);
    const LeapfrogResult sa = hmc_leapfrog(a, at, g_dr, eps);
    const LeapfrogResult sb = hmc_leapfrog(b, bt, g_full, eps);
    a = sa.v;
    at = sa.vt;
    b = sb.v;
    bt = sb.vt;
    const double d_next = cs * d + sn * (dt + 0.5 * eps * e_i);
    const double dt_next = sn * d + cs * (dt + 0.5 * eps * e_i) + 0.5 * eps * err(a, d_next);
    d = d_next;
    dt = dt_next;
  }
  return {(a - b).norm(), d};
}

}  // namespace

BoundReport bound_report(const LinearGaussianModel& model, const BoundOptions& opts) {
  const Index n = model.dim();
  if (n > 64) throw std::invalid_argument("bound report needs dense reference operators (n <= 64)");
  const CovarianceOperator cov(model.prior_cov());
  const DenseGeometry g = dense_geometry(model, cov);
  Index rank_H = 0;
  while (rank_H < n && g.lam[rank_H] > 1e-12 * std::max(1.0, g.lam[0])) ++rank_H;

  Rng rng(opts.seed);
  std::uniform_int_distribution<Index> pick_rank(0, std::min(n - 1, rank_H + 1));
  std::uniform_real_distribution<double> pick_h(0.05, 4.0);
  std::uniform_real_distribution<double> pick_scale(0.1, 3.0);
  BoundReport rep;

  auto record = [&](BoundTrial t, const Vector& v, const Vector& xi) {
    if (t.violated(opts.tolerance)) {
      ++rep.violations;
      rep.failures.push_back(serialize(t, v, xi));
    }
    rep.trials.push_back(t);
  };

  for (int perp = 0; perp <= 1; ++perp) {
    const bool gamma_perp = perp == 1;
    for (int t = 0; t < opts.trials; ++t) {
      const Index r = pick_rank(rng);
      const StepParams p = StepParams::from_h(pick_h(rng), true, gamma_perp);
      const Vector v = pick_scale(rng) * standard_normal(n, rng);
      const Vector xi = standard_normal(n, rng);
      const Vector grad = whitened_gradient(model, g, v);
      const LowRankSpectrum spec = exact_spectrum(g, r);
      const double lam = r < n ? g.lam[r] : 0.0;
      const Vector v_dr = dr_mmala_propose(v, grad, spec, p, xi);

      // against the full-rank GAP Langevin proposal
      const Vector v_full =
          p.rho0 * v + p.rho1 * ((Matrix::Identity(n, n) - g.K) * v - g.K * grad) + p.rho2 * (g.K_sqrt * xi);
      BoundTrial b1;
      b1.kind = BoundKind::truncation;
      b1.trial = t;
      b1.gamma_perp = gamma_perp;
      b1.rank = r;
      b1.lambda_next = lam;
      b1.lhs = (v_dr - v_full).norm();
      const BoundCoefficients c = truncation_bound_coefficients(lam, gamma_perp, p);
      b1.rhs = c.state * v.norm() + c.gradient * grad.norm() + c.noise * xi.norm();
      record(b1, v, xi);

      // against the operator-weighted proposal with an empirical covariance
      BoundTrial b2 = b1;
      b2.kind = BoundKind::empirical;
      Vector v_emp;
      double dK = 0.0, dKs = 0.0;
      if (r > 0) {
        const Matrix W = random_orthogonal(r, rng);
        Vector k = spec.d();
        for (Index i = 0; i < r; ++i) k[i] *= std::exp(0.3 * standard_normal(1, rng)[0]);
        const Matrix Kr = W * k.asDiagonal() * W.transpose();
        const Matrix Dm = spec.d().asDiagonal();
        const Matrix diff = Matrix(Dm) - Kr;
        const Matrix sdiff = Matrix(spec.d().cwiseSqrt().asDiagonal()) - W * k.cwiseSqrt().asDiagonal() * W.transpose();
        dK = Eigen::JacobiSVD<Matrix>(diff).singularValues()[0];
        dKs = Eigen::JacobiSVD<Matrix>(sdiff).singularValues()[0];
        v_emp = dili_propose(v, grad, dili_empirical(spec, Kr, p), xi);
      } else {
        v_emp = dili_propose(v, grad, dili_connection(spec, p), xi);
      }
      if (gamma_perp) v_emp -= p.rho1 * (grad - spec.basis() * (spec.basis().transpose() * grad));
      b2.lhs = (v_dr - v_emp).norm();
      b2.rhs = p.rho1 * dK * (v.norm() + grad.norm()) + p.rho2 * dKs * xi.norm();
      record(b2, v, xi);

      // leapfrog trajectories from a common start
      BoundTrial b3 = b1;
      b3.kind = BoundKind::trajectory;
      const Vector vt0 = g.K_sqrt * xi;
      const TrajectoryOutcome out =
          trajectory_difference(model, g, r, gamma_perp, v, vt0, p.epsilon, opts.leapfrog_steps);
      b3.lhs = out.lhs;
      b3.rhs = out.rhs;
      record(b3, v, xi);
    }
  }

  // ratio to lambda_{r+1} as r grows, on one fixed draw
  const Vector v = standard_normal(n, rng);
  const Vector vt0 = g.K_sqrt * standard_normal(n, rng);
  const StepParams p = StepParams::from_h(1.0, true, true);
  for (Index r = 1; r < rank_H; ++r) {
    const TrajectoryOutcome out = trajectory_difference(model, g, r, true, v, vt0, p.epsilon, opts.leapfrog_steps);
    rep.trajectory_ratio_by_rank.push_back(out.lhs / g.lam[r]);
    rep.trajectory_bound_ratio_by_rank.push_back(out.rhs / g.lam[r]);
  }
  return rep;
}

}  // namespace drmc
