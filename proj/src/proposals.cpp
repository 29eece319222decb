#include "drmc/proposals.hpp"

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <stdexcept>

namespace drmc {

StepParams StepParams::from_h(double h, bool gamma_r, bool gamma_perp, int leapfrog_steps,
                              std::optional<double> epsilon) {
  if (!(h > 0.0) || !std::isfinite(h)) throw std::invalid_argument("step size h must be positive and finite");
  if (leapfrog_steps < 1) throw std::invalid_argument("leapfrog step count must be at least 1");
  StepParams p;
  p.h = h;
  p.rho0 = (1.0 - h / 4.0) / (1.0 + h / 4.0);
  p.rho1 = 1.0 - p.rho0;
  p.rho2 = std::sqrt(h) / (1.0 + h / 4.0);
  p.gamma_r = gamma_r;
  p.gamma_perp = gamma_perp;
  p.leapfrog_steps = leapfrog_steps;
  p.epsilon = epsilon ? *epsilon : 2.0 * std::atan(0.5 * std::sqrt(h));
  if (!(p.epsilon > 0.0)) throw std::invalid_argument("leapfrog step epsilon must be positive");
  return p;
}

DriftTerms drift_terms(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, bool gamma_r,
                       bool gamma_perp) {
  if (v.size() != spec.dim() || grad.size() != v.size()) throw std::invalid_argument("state, gradient and spectrum dimensions differ");
  if (spec.metric() != Metric::identity) throw std::invalid_argument("drift needs an identity-metric basis");
  const Matrix& V = spec.basis();
  DriftTerms t;
  t.c = V.transpose() * v;
  t.gv = V.transpose() * grad;
  t.g_r = spec.eigenvalues().cwiseProduct(t.c);
  if (gamma_r) t.g_r -= t.gv;
  t.d = spec.d();
  t.ghat = V * t.d.cwiseProduct(t.g_r);
  if (gamma_perp) {
    const Vector perp = grad - V * t.gv;
    t.perp_grad_sq = perp.squaredNorm();
    t.ghat -= perp;
  }
  return t;
}

Vector whitened_ngrad(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, bool gamma_r,
                      bool gamma_perp) {
  return drift_terms(v, grad, spec, gamma_r, gamma_perp).ghat;
}

Vector pcn_propose(const Vector& v, const StepParams& p, const Vector& xi) { return p.rho0 * v + p.rho2 * xi; }

Vector pcn_propose(const Vector& v, const StepParams& p, Rng& rng) {
  return pcn_propose(v, p, standard_normal(v.size(), rng));
}

Vector inf_mala_propose(const Vector& v, const Vector& grad, const StepParams& p, const Vector& xi) {
  return p.rho0 * v + p.rho2 * (xi - p.kick() * grad);
}

Vector inf_mala_propose(const Vector& v, const Vector& grad, const StepParams& p, Rng& rng) {
  return inf_mala_propose(v, grad, p, standard_normal(v.size(), rng));
}

Vector dr_mmala_propose(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, const StepParams& p,
                        const Vector& xi) {
  if (spec.metric() != Metric::identity) throw std::invalid_argument("proposal needs an identity-metric basis");
  const Matrix& V = spec.basis();
  const Vector dm1 = spec.d().array() - 1.0;
  // s(gamma) gradPhi = gamma_r VVᵀ grad + gamma_perp (I - VVᵀ) grad
  const Vector gv = V.transpose() * grad;
  Vector s = Vector::Zero(v.size());
  if (p.gamma_perp) s = grad - V * gv;
  if (p.gamma_r) s += V * gv;
  Vector out = p.rho0 * v - p.rho1 * (V * dm1.cwiseProduct(V.transpose() * v));
  out -= p.rho1 * (s + V * dm1.cwiseProduct(V.transpose() * s));
  out += p.rho2 * apply_sqrtK_hat(xi, spec);
  return out;
}

Vector dr_mmala_propose(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, const StepParams& p,
                        Rng& rng) {
  return dr_mmala_propose(v, grad, spec, p, standard_normal(v.size(), rng));
}

DiliOperators dili_operators(const LowRankSpectrum& spec, double h_r, double h_perp, bool gamma_r) {
  return dili_operators(spec.basis(), spec.d(), h_r, h_perp, gamma_r);
}

DiliOperators dili_operators(Matrix basis, const Vector& D, double h_r, double h_perp, bool gamma_r) {
  if (!(h_r > 0.0) || !(h_perp > 0.0)) throw std::invalid_argument("DILI step sizes must be positive");
  if (basis.cols() != D.size()) throw std::invalid_argument("basis and diagonal sizes differ");
  const double g = gamma_r ? 1.0 : 0.0;
  const Vector hD = h_r * D;
  const Vector denom = 2.0 + hD.array();
  DiliOperators ops;
  ops.basis = std::move(basis);
  ops.dA = (1.0 - hD.array()) + (1.0 - g) * hD.array().square() / denom.array();
  ops.dB = (8.0 * hD.array() * (1.0 - g) / denom.array().square() + 2.0 * hD.array() * g).sqrt();
  ops.dG = g * hD;
  ops.a_perp = (2.0 - h_perp) / (2.0 + h_perp);
  ops.b_perp = std::sqrt(8.0 * h_perp) / (2.0 + h_perp);
  return ops;
}

namespace {

DiliOperators connection_from_diag(Matrix basis, const Vector& D, const StepParams& p) {
  DiliOperators ops;
  ops.basis = std::move(basis);
  ops.dA = 1.0 - p.rho1 * D.array();
  ops.dB = p.rho2 * D.array().sqrt();
  ops.dG = (p.gamma_r ? p.rho1 : 0.0) * D;
  ops.a_perp = p.rho0;
  ops.b_perp = p.rho2;
  return ops;
}

}  // namespace

DiliOperators dili_connection(const LowRankSpectrum& spec, const StepParams& p) {
  return connection_from_diag(spec.basis(), spec.d(), p);
}

DiliOperators dili_empirical(const LowRankSpectrum& spec, const Matrix& K_r, const StepParams& p) {
  if (K_r.rows() != spec.rank() || K_r.cols() != spec.rank()) throw std::invalid_argument("empirical covariance must be r x r");
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (K_r + K_r.transpose()));
  if (eig.info() != Eigen::Success || (spec.rank() > 0 && eig.eigenvalues().minCoeff() <= 0.0))
    throw NumericalError("empirical subspace covariance is not SPD");
  return connection_from_diag(spec.basis() * eig.eigenvectors(), eig.eigenvalues(), p);
}

Vector dili_propose(const Vector& v, const Vector& grad, const DiliOperators& ops, const Vector& xi) {
  const Matrix& P = ops.basis;
  const Vector w = P.transpose() * v;
  const Vector z = P.transpose() * xi;
  Vector out = ops.a_perp * v + ops.b_perp * xi;
  out += P * ((ops.dA.array() - ops.a_perp) * w.array() + (ops.dB.array() - ops.b_perp) * z.array()).matrix();
  out -= P * ops.dG.cwiseProduct(P.transpose() * grad);
  return out;
}

Vector dili_propose(const Vector& v, const Vector& grad, const DiliOperators& ops, Rng& rng) {
  return dili_propose(v, grad, ops, standard_normal(v.size(), rng));
}

LeapfrogResult hmc_leapfrog(const Vector& v, const Vector& vt, const Vector& g_v, const DriftField& g, double eps) {
  if (!(eps > 0.0)) throw std::invalid_argument("leapfrog step must be positive");
  LeapfrogResult out;
  const Vector half = vt + 0.5 * eps * g_v;
  const double c = std::cos(eps), s = std::sin(eps);
  out.v = c * v + s * half;
  const Vector rotated = -s * v + c * half;
  if (!out.v.allFinite() || !rotated.allFinite()) {
    out.finite = false;
    return out;
  }
  out.g = g(out.v);
  out.vt = rotated + 0.5 * eps * out.g;
  out.finite = out.g.allFinite() && out.vt.allFinite();
  return out;
}

LeapfrogResult hmc_leapfrog(const Vector& v, const Vector& vt, const DriftField& g, double eps) {
  return hmc_leapfrog(v, vt, g(v), g, eps);
}

TrajectoryPoint trajectory_point(const State& s, const Vector& vt, const StepParams& p) {
  if (!s.spec) throw std::invalid_argument("trajectory state has no spectrum");
  const DriftTerms t = drift_terms(s.v, s.grad, *s.spec, p.gamma_r, p.gamma_perp);
  TrajectoryPoint pt;
  pt.v = s.v;
  pt.vt = vt;
  pt.phi = s.phi;
  pt.drift_sq = t.ghat.squaredNorm();
  pt.drift_dot_mom = t.ghat.dot(vt);
  const Vector cm = s.spec->basis().transpose() * vt;
  pt.lambda_mom_sq = s.spec->eigenvalues().dot(cm.cwiseProduct(cm));
  pt.log_det_d = s.spec->log_det_d();
  return pt;
}

HmcProposal dr_mhmc_trajectory(const State& start, const Vector& vt0, const StateEvaluator& eval,
                               const StepParams& p, double divergence) {
  if (!start.spec || !start.has_grad()) throw std::invalid_argument("trajectory start needs gradient and spectrum");
  HmcProposal out;
  out.points.push_back(trajectory_point(start, vt0, p));
  State cur = start;
  Vector vt = vt0;
  Vector g = drift_terms(cur.v, cur.grad, *cur.spec, p.gamma_r, p.gamma_perp).ghat;
  for (int i = 0; i < p.leapfrog_steps; ++i) {
    State next;
    bool failed = false;
    const DriftField field = [&](const Vector& x) -> Vector {
      if (!(x.norm() <= divergence)) {
        failed = true;
        return Vector::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
      }
      try {
        next = eval(x);
      } catch (const NumericalError&) {
        failed = true;
        return Vector::Constant(x.size(), std::numeric_limits<double>::quiet_NaN());
      }
      return drift_terms(next.v, next.grad, *next.spec, p.gamma_r, p.gamma_perp).ghat;
    };
    const LeapfrogResult step = hmc_leapfrog(cur.v, vt, g, field, p.epsilon);
    if (failed || !step.finite || !std::isfinite(next.phi)) {
      out.diverged = true;
      return out;
    }
    cur = std::move(next);
    vt = step.vt;
    g = step.g;
    out.points.push_back(trajectory_point(cur, vt, p));
  }
  out.end = std::move(cur);
  return out;
}

HmcProposal dr_mhmc_propose(const State& start, const StateEvaluator& eval, const StepParams& p, Rng& rng,
                            double divergence) {
  if (!start.spec) throw std::invalid_argument("trajectory start needs a spectrum");
  Vector xi = standard_normal(start.v.size(), rng);
  HmcProposal out = dr_mhmc_trajectory(start, apply_sqrtK_hat(xi, *start.spec), eval, p, divergence);
  out.xi = std::move(xi);
  return out;
}

}  // namespace drmc
