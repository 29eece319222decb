#pragma once

#include "drmc/spectrum.hpp"
#include "drmc/target.hpp"

#include <functional>
#include <limits>
#include <memory>
#include <vector>

namespace drmc {

/// How a local spectrum is cut: a fixed number of pairs, or every pair
/// with lambda >= threshold out of at most max_rank computed pairs.
struct Truncation {
  enum class Mode { fixed_rank, threshold };
  Mode mode = Mode::fixed_rank;
  Index rank = 5;
  double threshold = 0.01;
  Index max_rank = 0;  // threshold mode; 0 = number of observations

  static Truncation fixed(Index r) { return {Mode::fixed_rank, r, 0.0, 0}; }
  static Truncation above(double t, Index max_rank = 0) { return {Mode::threshold, 0, t, max_rank}; }
};

/// Generalized eigenpairs of the GNH at the state, whitened, truncated.
/// The result is anchored to the state's position.
LowRankSpectrum local_spectrum(const State& state, const WhitenedTarget& target, const Truncation& trunc,
                               const RandomizedEigOptions& eig = {});

struct LisSettings {
  double rho_g = 0.01;
  double delta = 1e-5;
  int m_max = 100;
  int n_lag = 200;
};

struct LisRecord {
  int m = 0;
  Index rank = 0;
  double d_F = 0.0;
};

/// Running average of whitened GNHs kept as a truncated eigendecomposition.
struct LisState {
  LisSettings settings;
  LowRankSpectrum spectrum;  // V_m, Lambda_m after truncation at rho_g
  int m = 0;
  double d_F = std::numeric_limits<double>::infinity();
  bool frozen = false;
  std::vector<LisRecord> history;

  LisState() = default;
  LisState(Index n, LisSettings s) : settings(s), spectrum(n) {}
  Index rank() const { return spectrum.rank(); }
};

/// Absorbs one local spectrum into the running average. Throws
/// std::logic_error when frozen or full and NumericalError when the merged
/// matrix has an eigenvalue below -1e-10.
LisState merge_lis(const LisState& state, const LowRankSpectrum& local);

/// Computes the local spectrum at `state` and absorbs it.
LisState update_lis(const LisState& lis, const State& state, const WhitenedTarget& target, const Truncation& trunc,
                    const RandomizedEigOptions& eig = {});

/// Decides whether iteration n triggers an update, and freezes the state
/// once the cap or the tolerance is reached. `local` is only called when
/// an update fires. Returns true when the spectrum changed.
bool adaptation_step(int n, LisState& lis, const std::function<LowRankSpectrum()>& local);

}  // namespace drmc
