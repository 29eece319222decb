#pragma once

#include "drmc/sampler.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

namespace drmc {

enum class ModelKind { elliptic, linear_gaussian, flat };
std::string to_string(ModelKind m);

/// Everything needed to reproduce one run. Defaults follow the SNR = 10
/// elliptic study on a 20 x 20 mesh.
struct RunConfig {
  ModelKind model = ModelKind::elliptic;

  int nx = 20, ny = 20;
  int data_mesh = 80;  // cells per side of the mesh that generates y
  double snr = 10.0;   // +inf gives noiseless data
  double noiseless_sd = 1.0;  // likelihood sd when snr is infinite
  std::uint64_t data_seed = 1;
  std::vector<Eigen::Vector2d> sensors = {};  // empty = 5 x 5 default grid

  double sigma_u = 1.25;
  double s0 = 0.0625;

  int linear_n = 8, linear_m = 4;
  double linear_noise_sd = 0.5;
  std::uint64_t linear_seed = 11;

  ChainSettings chain;
  bool h_auto = true;        // pick h from the algorithm's reference value

  int chains = 1;
  bool baseline = true;  // also run pcn so the summary carries a speed-up
  std::string output;  // empty = $DRMC_OUTPUT_ROOT/<algorithm>-<seed>

  /// Throws ConfigError on inconsistent settings.
  void validate() const;
  /// Resolves h when left on auto.
  ChainSettings resolved_chain() const;
  /// Canonical "key: value" listing, one line per field, in schema order.
  std::string canonical() const;
  std::uint64_t hash() const;
};

/// Reference step size per algorithm: 0.5, 2.0, 1.3, 6.0, 4.0, 0.5, 3.0, 1.5.
double default_step(Algorithm a);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Parses YAML text over the defaults. Unknown keys and malformed values
/// are reported with their line number.
RunConfig parse_config(const std::string& yaml_text, const std::string& source = "<config>");
RunConfig load_config(const std::string& path);
/// Applies one "section.key=value" override.
void apply_override(RunConfig& cfg, const std::string& assignment);

struct ConfigKey {
  std::string path;
  std::string type;
  std::string description;
};
/// The published schema: every accepted key, its type and meaning.
const std::vector<ConfigKey>& config_schema();
/// Current value of a key as text.
std::string config_value(const RunConfig& cfg, const std::string& path);

/// YAML rendering of `cfg` with every key present.
std::string to_yaml(const RunConfig& cfg);

}  // namespace drmc
