#pragma once

#include "drmc/lis.hpp"
#include "drmc/proposals.hpp"
#include "drmc/target.hpp"

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace drmc {

enum class Algorithm { pcn, inf_mala, inf_hmc, dr_inf_mmala, dr_inf_mhmc, dili, adr_inf_mmala, adr_inf_mhmc };

std::string to_string(Algorithm a);
/// Accepts the hyphenated names used on the command line ("adr-inf-mmala").
Algorithm parse_algorithm(const std::string& name);
const std::vector<Algorithm>& all_algorithms();

bool uses_local_spectrum(Algorithm a);
bool uses_global_lis(Algorithm a);
bool uses_leapfrog(Algorithm a);
bool uses_gradient(Algorithm a);

struct ChainSettings {
  Algorithm algorithm = Algorithm::adr_inf_mmala;
  int iterations = 2500;
  int burn_in = 500;
  std::uint64_t seed = 2026;

  double h = 1.0;
  std::optional<double> epsilon;  // leapfrog step; derived from h when unset
  int leapfrog_steps = 4;
  double h_r = 0.5, h_perp = 1.0;  // operator-weighted proposal
  bool gamma_r = true;
  bool gamma_perp = false;

  Truncation local{Truncation::Mode::fixed_rank, 5, 0.01, 0};  // position-specific kernels
  Truncation lis_local{Truncation::Mode::threshold, 0, 0.01, 0};  // local spectra fed to the LIS
  RandomizedEigOptions eig;
  LisSettings lis;
  bool empirical_lis_covariance = false;  // operator-weighted proposal only
  int n_b = 50;

  bool tune = true;  // adapt log h toward target_accept during burn-in
  double target_accept = 0.65;
  double h_max = 8.0;
  double divergence = 1e6;
  bool prior_init = false;  // start from a prior draw instead of v = 0
  bool store_samples = true;
};

/// Per-iteration history of one chain.
struct ChainRecord {
  Algorithm algorithm = Algorithm::pcn;
  Index dim = 0;
  int burn_in = 0;
  std::vector<double> potentials;
  std::vector<char> accepts;
  std::vector<double> accept_probs;
  std::vector<double> wall_times;  // seconds spent in each iteration
  std::vector<long> pde_solves;     // cumulative, including the initial state
  std::vector<double> step_sizes;
  long initial_solves = 0;
  double total_seconds = 0.0;

  Matrix samples;  // draws after burn-in in original coordinates, one per row
  Vector mean;     // posterior mean estimate in original coordinates
  double final_h = 0.0, final_h_r = 0.0, final_h_perp = 0.0;

  std::optional<LisState> lis;
  bool incomplete = false;
  std::string error;

  Index iterations_done() const { return static_cast<Index>(potentials.size()); }
};

/// Runs one chain of the configured algorithm on `target`. Solver failures
/// mid-run end the chain early with `incomplete` set.
ChainRecord run_chain(const WhitenedTarget& target, const ChainSettings& settings);

}  // namespace drmc
