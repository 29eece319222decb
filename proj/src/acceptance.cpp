#include "drmc/acceptance.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace drmc {

AcceptDecision metropolis_decide(double log_ratio, Rng& rng) {
  // uniform in (0, 1]
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  AcceptDecision d;
  d.log_ratio = log_ratio;
  d.uniform_draw = 1.0 - unif(rng);
  d.accept = !std::isnan(log_ratio) && std::log(d.uniform_draw) < std::min(0.0, log_ratio);
  return d;
}

double pcn_log_ratio(double phi_old, double phi_new) { return phi_old - phi_new; }

namespace {

double mala_log_kernel(const Vector& v, const Vector& v_prime, double phi, const Vector& grad, const StepParams& p) {
  const Vector w = (v_prime - p.rho0 * v) / p.rho2;
  return -phi - p.h / 8.0 * grad.squaredNorm() - p.kick() * grad.dot(w);
}

}  // namespace

double inf_mala_log_ratio(const Vector& v, const Vector& v_prime, double phi, double phi_prime,
                          const Vector& grad, const Vector& grad_prime, const StepParams& p) {
  return mala_log_kernel(v_prime, v, phi_prime, grad_prime, p) - mala_log_kernel(v, v_prime, phi, grad, p);
}

void check_spectrum_pairing(const Vector& v, const LowRankSpectrum& spec) {
  if (spec.dim() != v.size()) throw std::invalid_argument("spectrum dimension differs from state dimension");
  if (spec.anchor() && *spec.anchor() != fingerprint(v))
    throw std::invalid_argument("position-specific spectrum paired with a different state");
}

double dr_mmala_log_kernel(const Vector& v, const Vector& v_prime, double phi, const Vector& grad,
                           const LowRankSpectrum& spec, const StepParams& p) {
  check_spectrum_pairing(v, spec);
  const Matrix& V = spec.basis();
  const Vector w = (v_prime - p.rho0 * v) / p.rho2;
  const Vector c = V.transpose() * v;
  const Vector gv = V.transpose() * grad;
  const Vector cw = V.transpose() * w;
  const Vector& lam = spec.eigenvalues();
  Vector g_r = lam.cwiseProduct(c);
  if (p.gamma_r) g_r -= gv;
  const Vector d = spec.d();
  double drift_sq = d.dot(g_r.cwiseProduct(g_r));
  double cross = g_r.dot(cw);
  if (p.gamma_perp) {
    drift_sq += grad.squaredNorm() - gv.squaredNorm();
    cross -= grad.dot(w) - gv.dot(cw);
  }
  const double quad = lam.dot(cw.cwiseProduct(cw));
  return -phi - p.h / 8.0 * drift_sq + p.kick() * cross - 0.5 * quad - 0.5 * spec.log_det_d();
}

double dr_mmala_log_ratio(const Vector& v, const Vector& v_prime, double phi, double phi_prime,
                          const Vector& grad, const Vector& grad_prime, const LowRankSpectrum& spec,
                          const LowRankSpectrum& spec_prime, const StepParams& p) {
  return dr_mmala_log_kernel(v_prime, v, phi_prime, grad_prime, spec_prime, p) -
         dr_mmala_log_kernel(v, v_prime, phi, grad, spec, p);
}

double dr_mmala_log_ratio(const State& from, const State& to, const StepParams& p) {
  if (!from.spec || !to.spec) throw std::invalid_argument("states need spectra");
  if (!from.has_grad() || !to.has_grad()) throw std::invalid_argument("states need gradients");
  return dr_mmala_log_ratio(from.v, to.v, from.phi, to.phi, from.grad, to.grad, *from.spec, *to.spec, p);
}

namespace {

double dili_log_kernel(const Vector& v, const Vector& v_prime, double phi, const Vector& grad,
                       const DiliOperators& ops) {
  const Matrix& P = ops.basis;
  const Vector w = P.transpose() * v;
  const Vector wp = P.transpose() * v_prime;
  const Vector mean = ops.dA.cwiseProduct(w) - ops.dG.cwiseProduct(P.transpose() * grad);
  const Vector z = (wp - mean).cwiseQuotient(ops.dB);
  return -phi - 0.5 * w.squaredNorm() - 0.5 * z.squaredNorm();
}

}  // namespace

double dili_log_ratio(const Vector& v, const Vector& v_prime, double phi, double phi_prime, const Vector& grad,
                      const Vector& grad_prime, const DiliOperators& ops, const DiliOperators& ops_prime) {
  return dili_log_kernel(v_prime, v, phi_prime, grad_prime, ops_prime) - dili_log_kernel(v, v_prime, phi, grad, ops);
}

double dr_mhmc_delta_E(const HmcProposal& traj, const StepParams& p) {
  if (traj.diverged) return std::numeric_limits<double>::infinity();
  if (traj.points.size() < 2) throw std::invalid_argument("trajectory has no leapfrog steps");
  const TrajectoryPoint& a = traj.points.front();
  const TrajectoryPoint& b = traj.points.back();
  const double eps = p.epsilon;
  double dE = b.phi - a.phi;
  dE += 0.5 * (b.lambda_mom_sq - a.lambda_mom_sq);
  dE += 0.5 * (b.log_det_d - a.log_det_d);
  dE -= eps * eps / 8.0 * (b.drift_sq - a.drift_sq);
  for (std::size_t i = 0; i + 1 < traj.points.size(); ++i)
    dE += 0.5 * eps * (traj.points[i].drift_dot_mom + traj.points[i + 1].drift_dot_mom);
  return std::isnan(dE) ? std::numeric_limits<double>::infinity() : dE;
}

}  // namespace drmc
