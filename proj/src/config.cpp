#include "drmc/config.hpp"

#include <yaml-cpp/yaml.h>

#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>

namespace drmc {

std::string to_string(ModelKind m) {
  switch (m) {
    case ModelKind::elliptic: return "elliptic";
    case ModelKind::linear_gaussian: return "linear-gaussian";
    case ModelKind::flat: return "flat";
  }
  return "unknown";
}

double default_step(Algorithm a) {
  switch (a) {
    case Algorithm::pcn: return 0.5;
    case Algorithm::inf_mala: return 2.0;
    case Algorithm::inf_hmc: return 1.3;
    case Algorithm::dr_inf_mmala: return 6.0;
    case Algorithm::dr_inf_mhmc: return 4.0;
    case Algorithm::dili: return 0.5;
    case Algorithm::adr_inf_mmala: return 3.0;
    case Algorithm::adr_inf_mhmc: return 1.5;
  }
  return 1.0;
}

namespace {

std::string fmt_double(double x) {
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  // Shortest form that round-trips.
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof buf, x);
  return std::string(buf, res.ptr);
}

double parse_double(const std::string& s) {
  if (s == "inf" || s == ".inf" || s == "infinity") return std::numeric_limits<double>::infinity();
  std::size_t pos = 0;
  double x = 0;
  try {
    x = std::stod(s, &pos);
  } catch (const std::exception&) {
    throw ConfigError("expected a number, got '" + s + "'");
  }
  if (pos != s.size()) throw ConfigError("expected a number, got '" + s + "'");
  return x;
}

long long parse_int(const std::string& s) {
  long long x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size()) throw ConfigError("expected an integer, got '" + s + "'");
  return x;
}

std::uint64_t parse_uint(const std::string& s) {
  std::uint64_t x = 0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), x);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size())
    throw ConfigError("expected a non-negative integer, got '" + s + "'");
  return x;
}

bool parse_bool(const std::string& s) {
  if (s == "true" || s == "yes" || s == "on" || s == "1") return true;
  if (s == "false" || s == "no" || s == "off" || s == "0") return false;
  throw ConfigError("expected true or false, got '" + s + "'");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

std::string fmt_sensors(const std::vector<Eigen::Vector2d>& s) {
  if (s.empty()) return "grid5";
  std::ostringstream out;
  out << std::setprecision(17);
  for (std::size_t i = 0; i < s.size(); ++i) out << (i ? ";" : "") << s[i][0] << "," << s[i][1];
  return out.str();
}

std::vector<Eigen::Vector2d> parse_sensors(const std::string& text) {
  if (text == "grid5" || text.empty()) return {};
  std::vector<Eigen::Vector2d> out;
  std::stringstream ss(text);
  std::string item;
  while (std::getline(ss, item, ';')) {
    const auto comma = item.find(',');
    if (comma == std::string::npos) throw ConfigError("sensor '" + item + "' must be written as x,y");
    out.emplace_back(parse_double(item.substr(0, comma)), parse_double(item.substr(comma + 1)));
  }
  return out;
}

struct Field {
  ConfigKey key;
  std::function<std::string(const RunConfig&)> get;
  std::function<void(RunConfig&, const std::string&)> set;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> f = [] {
    std::vector<Field> v;
    auto add = [&](std::string path, std::string type, std::string desc, std::function<std::string(const RunConfig&)> get,
                   std::function<void(RunConfig&, const std::string&)> set) {
      v.push_back({{std::move(path), std::move(type), std::move(desc)}, std::move(get), std::move(set)});
    };
    auto dbl = [&](std::string path, std::string desc, std::function<double&(RunConfig&)> ref) {
      add(path, "number", desc, [ref](const RunConfig& c) { return fmt_double(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& s) { ref(c) = parse_double(s); });
    };
    auto integer = [&](std::string path, std::string desc, std::function<int&(RunConfig&)> ref) {
      add(path, "integer", desc, [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& s) { ref(c) = static_cast<int>(parse_int(s)); });
    };
    auto index = [&](std::string path, std::string desc, std::function<Index&(RunConfig&)> ref) {
      add(path, "integer", desc, [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& s) { ref(c) = static_cast<Index>(parse_int(s)); });
    };
    auto uint = [&](std::string path, std::string desc, std::function<std::uint64_t&(RunConfig&)> ref) {
      add(path, "integer", desc, [ref](const RunConfig& c) { return std::to_string(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& s) { ref(c) = parse_uint(s); });
    };
    auto boolean = [&](std::string path, std::string desc, std::function<bool&(RunConfig&)> ref) {
      add(path, "boolean", desc, [ref](const RunConfig& c) { return fmt_bool(ref(const_cast<RunConfig&>(c))); },
          [ref](RunConfig& c, const std::string& s) { ref(c) = parse_bool(s); });
    };

    add("model", "elliptic | linear-gaussian | flat", "forward model",
        [](const RunConfig& c) { return to_string(c.model); },
        [](RunConfig& c, const std::string& s) {
          if (s == "elliptic") c.model = ModelKind::elliptic;
          else if (s == "linear-gaussian") c.model = ModelKind::linear_gaussian;
          else if (s == "flat") c.model = ModelKind::flat;
          else throw ConfigError("unknown model '" + s + "'");
        });
    integer("mesh.nx", "cells along x of the inference mesh", [](RunConfig& c) -> int& { return c.nx; });
    integer("mesh.ny", "cells along y of the inference mesh", [](RunConfig& c) -> int& { return c.ny; });
    integer("data.mesh", "cells per side of the mesh that generates the data", [](RunConfig& c) -> int& { return c.data_mesh; });
    dbl("data.snr", "max(u_true) / noise sd; inf for noiseless data", [](RunConfig& c) -> double& { return c.snr; });
    dbl("data.noiseless_sd", "likelihood noise sd used when data.snr is inf", [](RunConfig& c) -> double& { return c.noiseless_sd; });
    uint("data.seed", "seed of the observation noise", [](RunConfig& c) -> std::uint64_t& { return c.data_seed; });
    add("data.sensors", "grid5 | x,y;x,y;...", "observation points",
        [](const RunConfig& c) { return fmt_sensors(c.sensors); },
        [](RunConfig& c, const std::string& s) { c.sensors = parse_sensors(s); });
    dbl("prior.sigma_u", "prior standard deviation", [](RunConfig& c) -> double& { return c.sigma_u; });
    dbl("prior.s0", "prior correlation length", [](RunConfig& c) -> double& { return c.s0; });
    integer("linear.n", "parameter dimension of the linear-Gaussian model", [](RunConfig& c) -> int& { return c.linear_n; });
    integer("linear.m", "observation count of the linear-Gaussian model", [](RunConfig& c) -> int& { return c.linear_m; });
    dbl("linear.noise_sd", "noise sd of the linear-Gaussian model", [](RunConfig& c) -> double& { return c.linear_noise_sd; });
    uint("linear.seed", "seed of the random linear-Gaussian model", [](RunConfig& c) -> std::uint64_t& { return c.linear_seed; });

    add("sampler.algorithm", "pcn | inf-mala | inf-hmc | dr-inf-mmala | dr-inf-mhmc | dili | adr-inf-mmala | adr-inf-mhmc",
        "MCMC kernel", [](const RunConfig& c) { return to_string(c.chain.algorithm); },
        [](RunConfig& c, const std::string& s) {
          try {
            c.chain.algorithm = parse_algorithm(s);
          } catch (const std::invalid_argument& e) {
            throw ConfigError(e.what());
          }
        });
    add("sampler.h", "number | auto", "step size (auto = reference value of the algorithm)",
        [](const RunConfig& c) { return c.h_auto ? std::string("auto") : fmt_double(c.chain.h); },
        [](RunConfig& c, const std::string& s) {
          if (s == "auto") {
            c.h_auto = true;
          } else {
            c.h_auto = false;
            c.chain.h = parse_double(s);
          }
        });
    add("sampler.epsilon", "number | auto", "leapfrog step (auto = 2 atan(sqrt(h)/2))",
        [](const RunConfig& c) { return c.chain.epsilon ? fmt_double(*c.chain.epsilon) : std::string("auto"); },
        [](RunConfig& c, const std::string& s) {
          if (s == "auto") c.chain.epsilon.reset();
          else c.chain.epsilon = parse_double(s);
        });
    integer("sampler.leapfrog_steps", "leapfrog steps per HMC proposal", [](RunConfig& c) -> int& { return c.chain.leapfrog_steps; });
    dbl("sampler.h_r", "operator-weighted proposal: step inside the subspace", [](RunConfig& c) -> double& { return c.chain.h_r; });
    dbl("sampler.h_perp", "operator-weighted proposal: step on the complement", [](RunConfig& c) -> double& { return c.chain.h_perp; });
    boolean("sampler.gamma_r", "use the gradient inside the subspace", [](RunConfig& c) -> bool& { return c.chain.gamma_r; });
    boolean("sampler.gamma_perp", "use the gradient on the complement", [](RunConfig& c) -> bool& { return c.chain.gamma_perp; });
    integer("sampler.iterations", "total iterations including burn-in", [](RunConfig& c) -> int& { return c.chain.iterations; });
    integer("sampler.burn_in", "iterations discarded before inference", [](RunConfig& c) -> int& { return c.chain.burn_in; });
    uint("sampler.seed", "seed of the chain's random stream", [](RunConfig& c) -> std::uint64_t& { return c.chain.seed; });
    boolean("sampler.tune", "adapt the step size toward sampler.target_accept during burn-in", [](RunConfig& c) -> bool& { return c.chain.tune; });
    dbl("sampler.target_accept", "acceptance probability targeted by tuning", [](RunConfig& c) -> double& { return c.chain.target_accept; });
    dbl("sampler.h_max", "upper clamp of tuned step sizes", [](RunConfig& c) -> double& { return c.chain.h_max; });
    dbl("sampler.divergence", "trajectories leaving |v| <= this are rejected", [](RunConfig& c) -> double& { return c.chain.divergence; });
    add("sampler.init", "zero | prior", "initial state",
        [](const RunConfig& c) { return std::string(c.chain.prior_init ? "prior" : "zero"); },
        [](RunConfig& c, const std::string& s) {
          if (s == "zero") c.chain.prior_init = false;
          else if (s == "prior") c.chain.prior_init = true;
          else throw ConfigError("sampler.init must be zero or prior");
        });

    add("spectrum.local_mode", "fixed-rank | threshold", "truncation of position-specific spectra",
        [](const RunConfig& c) {
          return std::string(c.chain.local.mode == Truncation::Mode::fixed_rank ? "fixed-rank" : "threshold");
        },
        [](RunConfig& c, const std::string& s) {
          if (s == "fixed-rank") c.chain.local.mode = Truncation::Mode::fixed_rank;
          else if (s == "threshold") c.chain.local.mode = Truncation::Mode::threshold;
          else throw ConfigError("spectrum.local_mode must be fixed-rank or threshold");
        });
    index("spectrum.local_rank", "rank of position-specific spectra", [](RunConfig& c) -> Index& { return c.chain.local.rank; });
    dbl("spectrum.local_threshold", "eigenvalue cutoff of position-specific spectra in threshold mode",
        [](RunConfig& c) -> double& { return c.chain.local.threshold; });
    dbl("spectrum.lis_threshold", "eigenvalue cutoff of local spectra fed to the subspace average",
        [](RunConfig& c) -> double& { return c.chain.lis_local.threshold; });
    index("spectrum.max_rank", "pairs computed in threshold mode (0 = number of observations)", [](RunConfig& c) -> Index& {
      return c.chain.lis_local.max_rank;
    });
    index("spectrum.oversampling", "randomized eigensolver oversampling", [](RunConfig& c) -> Index& { return c.chain.eig.oversampling; });
    index("spectrum.power_iterations", "randomized eigensolver power iterations",
          [](RunConfig& c) -> Index& { return c.chain.eig.power_iterations; });
    uint("spectrum.sketch_seed", "seed of the fixed randomized test matrix", [](RunConfig& c) -> std::uint64_t& {
      return c.chain.eig.sketch_seed;
    });

    integer("adaptation.n_lag", "iterations between subspace updates", [](RunConfig& c) -> int& { return c.chain.lis.n_lag; });
    integer("adaptation.m_max", "maximum number of absorbed local spectra", [](RunConfig& c) -> int& { return c.chain.lis.m_max; });
    dbl("adaptation.delta_lis", "Förstner distance below which the subspace freezes",
        [](RunConfig& c) -> double& { return c.chain.lis.delta; });
    dbl("adaptation.rho_g", "eigenvalue cutoff of the global subspace", [](RunConfig& c) -> double& { return c.chain.lis.rho_g; });
    integer("adaptation.n_b", "iterations between empirical covariance refreshes", [](RunConfig& c) -> int& { return c.chain.n_b; });
    boolean("adaptation.empirical_covariance", "operator-weighted proposal uses the empirical subspace covariance",
            [](RunConfig& c) -> bool& { return c.chain.empirical_lis_covariance; });

    integer("run.chains", "independent chains, one thread each", [](RunConfig& c) -> int& { return c.chains; });
    boolean("run.baseline", "also run a pcn chain on the same problem and report the speed-up",
            [](RunConfig& c) -> bool& { return c.baseline; });
    add("run.output", "path", "run directory (empty = $DRMC_OUTPUT_ROOT/<algorithm>-<seed>)",
        [](const RunConfig& c) { return c.output; }, [](RunConfig& c, const std::string& s) { c.output = s; });
    return v;
  }();
  return f;
}

const Field& find_field(const std::string& path) {
  for (const auto& f : fields())
    if (f.key.path == path) return f;
  throw ConfigError("unknown key '" + path + "'");
}

void walk(const YAML::Node& node, const std::string& prefix, RunConfig& cfg, const std::string& source) {
  auto where = [&](const YAML::Node& n) {
    return source + ":" + std::to_string(n.Mark().line + 1) + ": ";
  };
  for (const auto& kv : node) {
    const std::string key = kv.first.as<std::string>();
    const std::string path = prefix.empty() ? key : prefix + "." + key;
    const YAML::Node& val = kv.second;
    if (path == "data.sensors" && val.IsSequence()) {
      std::vector<Eigen::Vector2d> pts;
      for (const auto& p : val) {
        if (!p.IsSequence() || p.size() != 2) throw ConfigError(where(p) + "each sensor must be a pair [x, y]");
        try {
          pts.emplace_back(parse_double(p[0].Scalar()), parse_double(p[1].Scalar()));
        } catch (const ConfigError& e) {
          throw ConfigError(where(p) + e.what());
        }
      }
      cfg.sensors = pts;
      continue;
    }
    if (val.IsMap()) {
      walk(val, path, cfg, source);
      continue;
    }
    if (!val.IsScalar()) throw ConfigError(where(kv.first) + "key '" + path + "' needs a scalar value");
    try {
      find_field(path).set(cfg, val.Scalar());
    } catch (const ConfigError& e) {
      throw ConfigError(where(kv.first) + e.what());
    }
  }
}

}  // namespace

void RunConfig::validate() const {
  auto fail = [](const std::string& m) { throw ConfigError(m); };
  if (nx < 2 || ny < 2) fail("mesh.nx and mesh.ny must be at least 2");
  if (data_mesh < 2) fail("data.mesh must be at least 2");
  if (!(snr > 0.0)) fail("data.snr must be positive");
  if (!(noiseless_sd > 0.0)) fail("data.noiseless_sd must be positive");
  if (!(sigma_u > 0.0) || !(s0 > 0.0)) fail("prior.sigma_u and prior.s0 must be positive");
  if (linear_n < 1 || linear_m < 1) fail("linear.n and linear.m must be positive");
  if (!(linear_noise_sd > 0.0)) fail("linear.noise_sd must be positive");
  for (const auto& s : sensors)
    if (!(s[0] > 0.0 && s[0] < 1.0 && s[1] > 0.0 && s[1] < 1.0)) fail("sensors must lie strictly inside the unit square");
  const ChainSettings& c = chain;
  if (c.iterations <= c.burn_in || c.burn_in < 0) fail("sampler.iterations must exceed sampler.burn_in >= 0");
  if (!h_auto && !(c.h > 0.0)) fail("sampler.h must be positive");
  if (c.epsilon && !(*c.epsilon > 0.0)) fail("sampler.epsilon must be positive");
  if (c.leapfrog_steps < 1) fail("sampler.leapfrog_steps must be at least 1");
  if (!(c.h_r > 0.0) || !(c.h_perp > 0.0)) fail("sampler.h_r and sampler.h_perp must be positive");
  if (!(c.target_accept > 0.0 && c.target_accept < 1.0)) fail("sampler.target_accept must lie in (0, 1)");
  if (!(c.h_max > 0.0)) fail("sampler.h_max must be positive");
  if (!(c.divergence > 0.0)) fail("sampler.divergence must be positive");
  if (c.local.rank < 0 || c.lis_local.max_rank < 0) fail("spectrum ranks must be non-negative");
  if (c.eig.oversampling < 0 || c.eig.power_iterations < 0) fail("spectrum.oversampling and power_iterations must be non-negative");
  if (c.lis.n_lag < 1 || c.lis.m_max < 1 || c.n_b < 1) fail("adaptation.n_lag, m_max and n_b must be positive");
  if (!(c.lis.delta >= 0.0) || !(c.lis.rho_g >= 0.0)) fail("adaptation.delta_lis and rho_g must be non-negative");
  if (chains < 1) fail("run.chains must be at least 1");
}

ChainSettings RunConfig::resolved_chain() const {
  ChainSettings c = chain;
  if (h_auto) c.h = default_step(c.algorithm);
  c.lis_local.mode = Truncation::Mode::threshold;
  return c;
}

std::string RunConfig::canonical() const {
  std::ostringstream out;
  for (const auto& f : fields()) out << f.key.path << ": " << f.get(*this) << '\n';
  return out.str();
}

std::uint64_t RunConfig::hash() const {
  const std::string text = canonical();
  return fnv1a(text.data(), text.size());
}

RunConfig parse_config(const std::string& yaml_text, const std::string& source) {
  RunConfig cfg;
  YAML::Node root;
  try {
    root = YAML::Load(yaml_text);
  } catch (const YAML::Exception& e) {
    throw ConfigError(source + ":" + std::to_string(e.mark.line + 1) + ": " + e.msg);
  }
  if (root.IsNull()) return cfg;
  if (!root.IsMap()) throw ConfigError(source + ": top level must be a mapping");
  walk(root, "", cfg, source);
  cfg.validate();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str(), path);
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must look like key=value");
  find_field(assignment.substr(0, eq)).set(cfg, assignment.substr(eq + 1));
}

const std::vector<ConfigKey>& config_schema() {
  static const std::vector<ConfigKey> keys = [] {
    std::vector<ConfigKey> k;
    for (const auto& f : fields()) k.push_back(f.key);
    return k;
  }();
  return keys;
}

std::string config_value(const RunConfig& cfg, const std::string& path) { return find_field(path).get(cfg); }

std::string to_yaml(const RunConfig& cfg) {
  std::ostringstream out;
  std::string section;
  for (const auto& f : fields()) {
    const auto dot = f.key.path.find('.');
    std::string value = f.get(cfg);
    if (value.empty() || value.find_first_of(":;,#") != std::string::npos) value = "\"" + value + "\"";
    if (dot == std::string::npos) {
      section.clear();
      out << f.key.path << ": " << value << '\n';
      continue;
    }
    const std::string sec = f.key.path.substr(0, dot);
    if (sec != section) {
      out << sec << ":\n";
      section = sec;
    }
    out << "  " << f.key.path.substr(dot + 1) << ": " << value << '\n';
  }
  return out.str();
}

}  // namespace drmc
