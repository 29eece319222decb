#pragma once

#include "drmc/spectrum.hpp"
#include "drmc/target.hpp"

#include <functional>
#include <optional>
#include <vector>

namespace drmc {

/// Step parameters shared by the Langevin and leapfrog kernels.
///   rho0 = (1 - h/4) / (1 + h/4),  rho1 = 1 - rho0,  rho2 = sqrt(1 - rho0²).
struct StepParams {
  double h = 1.0;
  double rho0 = 0.0, rho1 = 0.0, rho2 = 0.0;
  bool gamma_r = true;
  bool gamma_perp = false;
  int leapfrog_steps = 1;
  double epsilon = 0.0;

  /// Without an explicit epsilon the leapfrog angle is 2 atan(sqrt(h)/2),
  /// so that cos(eps) = rho0 and sin(eps) = rho2.
  static StepParams from_h(double h, bool gamma_r = true, bool gamma_perp = false, int leapfrog_steps = 1,
                           std::optional<double> epsilon = std::nullopt);
  double kick() const { return 0.5 * std::sqrt(h); }
};

/// Ambient quantities of the drift at one state: c = Vᵀv, gv = VᵀgradPhi,
/// g_r = Lambda c - gamma_r gv, ghat = V D g_r - gamma_perp (I - VVᵀ) gradPhi.
struct DriftTerms {
  Vector c, gv, g_r, d;
  Vector ghat;
  double perp_grad_sq = 0.0;  // |(I - VVᵀ) gradPhi|²
};
DriftTerms drift_terms(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, bool gamma_r,
                       bool gamma_perp);

/// ghat(v) for the low-rank GAP covariance.
Vector whitened_ngrad(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, bool gamma_r,
                      bool gamma_perp);

/// v' = rho0 v + rho2 xi.
Vector pcn_propose(const Vector& v, const StepParams& p, const Vector& xi);
Vector pcn_propose(const Vector& v, const StepParams& p, Rng& rng);

/// v' = rho0 v + rho2 (xi - sqrt(h)/2 gradPhi).
Vector inf_mala_propose(const Vector& v, const Vector& grad, const StepParams& p, const Vector& xi);
Vector inf_mala_propose(const Vector& v, const Vector& grad, const StepParams& p, Rng& rng);

/// v' = (rho0 I - rho1 V(D-I)Vᵀ) v - rho1 K s(gamma) gradPhi + rho2 K^{1/2} xi.
Vector dr_mmala_propose(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, const StepParams& p,
                        const Vector& xi);
Vector dr_mmala_propose(const Vector& v, const Vector& grad, const LowRankSpectrum& spec, const StepParams& p,
                        Rng& rng);

/// Operator-weighted proposal v' = A v - G gradPhi + B xi with
///   A = Psi (dA - a) Psiᵀ + a I,  B = Psi (dB - b) Psiᵀ + b I,  G = Psi dG Psiᵀ.
struct DiliOperators {
  Matrix basis;  // Psi, orthonormal columns
  Vector dA, dB, dG;
  double a_perp = 0.0, b_perp = 0.0;
};

/// Coefficients from the LIS step sizes (h_r, h_perp), with D = (I + Lambda)^{-1}.
DiliOperators dili_operators(const LowRankSpectrum& spec, double h_r, double h_perp, bool gamma_r);
/// Same coefficients for an arbitrary orthonormal basis and covariance
/// diagonal D (for example an empirical subspace covariance).
DiliOperators dili_operators(Matrix basis, const Vector& D, double h_r, double h_perp, bool gamma_r);
/// Coefficients that make the operator-weighted proposal coincide with the
/// low-rank Langevin proposal (gamma_perp = 0): dA = 1 - rho1 D,
/// dB = rho2 sqrt(D), dG = rho1 gamma_r D, a = rho0, b = rho2.
DiliOperators dili_connection(const LowRankSpectrum& spec, const StepParams& p);
/// Same as dili_connection with D replaced by an empirical SPD r x r
/// covariance K_r = W diag(k) Wᵀ, giving Psi = V W.
DiliOperators dili_empirical(const LowRankSpectrum& spec, const Matrix& K_r, const StepParams& p);

Vector dili_propose(const Vector& v, const Vector& grad, const DiliOperators& ops, const Vector& xi);
Vector dili_propose(const Vector& v, const Vector& grad, const DiliOperators& ops, Rng& rng);

/// ghat at a position.
using DriftField = std::function<Vector(const Vector&)>;

struct LeapfrogResult {
  Vector v, vt;
  Vector g;  // drift at the new position
  bool finite = true;
};

/// One step: vt += eps/2 g(v); rotate (v, vt) by eps; vt += eps/2 g(v_new).
LeapfrogResult hmc_leapfrog(const Vector& v, const Vector& vt, const DriftField& g, double eps);
/// Same, reusing a known drift at v.
LeapfrogResult hmc_leapfrog(const Vector& v, const Vector& vt, const Vector& g_v, const DriftField& g,
                            double eps);

/// Evaluates the chain state at v with gradient and spectrum filled in.
using StateEvaluator = std::function<State(const Vector&)>;

/// Per-point energy terms along a trajectory.
struct TrajectoryPoint {
  Vector v, vt;
  double phi = 0.0;
  double drift_sq = 0.0;         // |ghat|²
  double drift_dot_mom = 0.0;    // <ghat, vt>
  double lambda_mom_sq = 0.0;    // |Lambda^{1/2} Vᵀ vt|²
  double log_det_d = 0.0;        // log|D|
};

struct HmcProposal {
  std::vector<TrajectoryPoint> points;  // I + 1 points, v_0 first
  State end;                            // state at v_I (valid unless diverged)
  bool diverged = false;
  Vector xi;
};

/// Momentum K(v0)^{1/2} xi followed by I leapfrog steps of ghat. The
/// evaluator supplies the spectrum at every visited position (fixed for a
/// global subspace, recomputed for the position-specific variant).
HmcProposal dr_mhmc_propose(const State& start, const StateEvaluator& eval, const StepParams& p, Rng& rng,
                            double divergence = 1e6);
HmcProposal dr_mhmc_trajectory(const State& start, const Vector& vt0, const StateEvaluator& eval,
                               const StepParams& p, double divergence = 1e6);

/// Energy terms at a state for momentum vt.
TrajectoryPoint trajectory_point(const State& s, const Vector& vt, const StepParams& p);

}  // namespace drmc
