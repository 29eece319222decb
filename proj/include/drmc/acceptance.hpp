#pragma once

#include "drmc/proposals.hpp"

namespace drmc {

struct AcceptDecision {
  double log_ratio = 0.0;
  bool accept = false;
  double uniform_draw = 1.0;  // in (0, 1]
};

/// Accepts when log(u) < min(0, log_ratio); a NaN ratio is rejected.
AcceptDecision metropolis_decide(double log_ratio, Rng& rng);

double pcn_log_ratio(double phi_old, double phi_new);

/// Log ratio for the whitened Langevin proposal with identity metric.
double inf_mala_log_ratio(const Vector& v, const Vector& v_prime, double phi, double phi_prime,
                          const Vector& grad, const Vector& grad_prime, const StepParams& p);

/// log kappa(v, v') = -Phi(v) + log lambda(w*; v), w* = (v' - rho0 v) / rho2,
/// in the reduced r-dimensional form with the complement gradient terms
/// included when gamma_perp = 1.
double dr_mmala_log_kernel(const Vector& v, const Vector& v_prime, double phi, const Vector& grad,
                           const LowRankSpectrum& spec, const StepParams& p);

/// log kappa(v', v) - log kappa(v, v'). A spectrum anchored to a state must
/// be paired with that state, otherwise std::invalid_argument is thrown.
double dr_mmala_log_ratio(const Vector& v, const Vector& v_prime, double phi, double phi_prime,
                          const Vector& grad, const Vector& grad_prime, const LowRankSpectrum& spec,
                          const LowRankSpectrum& spec_prime, const StepParams& p);
double dr_mmala_log_ratio(const State& from, const State& to, const StepParams& p);

/// Gaussian transition ratio of the operator-weighted proposal. The
/// complement moves are prior-reversible and cancel against the prior.
double dili_log_ratio(const Vector& v, const Vector& v_prime, double phi, double phi_prime, const Vector& grad,
                      const Vector& grad_prime, const DiliOperators& ops, const DiliOperators& ops_prime);

/// Energy error of a leapfrog trajectory; +inf when it diverged.
double dr_mhmc_delta_E(const HmcProposal& traj, const StepParams& p);

/// Throws std::invalid_argument when a spectrum anchored to another state
/// is used at `v`.
void check_spectrum_pairing(const Vector& v, const LowRankSpectrum& spec);

}  // namespace drmc
