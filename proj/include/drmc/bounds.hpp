#pragma once

#include "drmc/linear_models.hpp"
#include "drmc/proposals.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace drmc {

/// Which proposal difference a trial measures.
enum class BoundKind {
  truncation,   // low-rank Langevin vs full-rank GAP Langevin
  empirical,    // low-rank Langevin vs operator-weighted with empirical K_r
  trajectory,   // low-rank leapfrog vs full-rank leapfrog after I steps
};
std::string to_string(BoundKind k);

struct BoundTrial {
  BoundKind kind = BoundKind::truncation;
  int trial = 0;
  bool gamma_perp = false;
  Index rank = 0;
  double lambda_next = 0.0;  // lambda_{r+1}
  double lhs = 0.0, rhs = 0.0;
  double slack() const { return rhs - lhs; }
  bool violated(double tol = 1e-9) const { return lhs > rhs + tol; }
};

struct BoundOptions {
  int trials = 200;
  std::uint64_t seed = 7;
  double tolerance = 1e-9;
  int leapfrog_steps = 4;
};

struct BoundReport {
  std::vector<BoundTrial> trials;
  int violations = 0;
  /// Serialized offending states (JSON), one per violation.
  std::vector<std::string> failures;
  /// |v_DR^I - v_full^I| / lambda_{r+1} for r = 1..rank-1 on one fixed draw.
  std::vector<double> trajectory_ratio_by_rank;
  /// The same ratio for the stepwise upper bound.
  std::vector<double> trajectory_bound_ratio_by_rank;
};

/// Coefficients of |v|, |gradPhi| and |xi| in the truncation bound for a
/// first omitted eigenvalue `lambda_next`:
///   state = rho1 lambda/(1+lambda), gradient = the same with gamma_perp and
///   rho1 otherwise, noise = rho2 lambda/(1 + lambda + sqrt(1 + lambda)).
struct BoundCoefficients {
  double state = 0.0, gradient = 0.0, noise = 0.0;
};
BoundCoefficients truncation_bound_coefficients(double lambda_next, bool gamma_perp, const StepParams& p);

/// Exact dense reference operators are used, so the model must have n <= 64.
/// Every kind is tried with gamma_perp in {0, 1} for `trials` draws each.
BoundReport bound_report(const LinearGaussianModel& model, const BoundOptions& opts = {});

}  // namespace drmc
