#include "drmc/config.hpp"
#include "drmc/runner.hpp"
#include "drmc/spectrum.hpp"
#include "drmc/verify.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <string>

namespace {

std::string flag_name(const std::string& path) {
  std::string f = path;
  for (char& c : f)
    if (c == '.' || c == '_') c = '-';
  return "--" + f;
}

// Every schema key becomes a --section-key flag applied after the config file.
struct ConfigFlags {
  std::map<std::string, std::string> values;
  std::vector<std::string> sets;
  std::string file;

  void attach(CLI::App* app) {
    app->add_option("-c,--config", file, "YAML configuration file")->check(CLI::ExistingFile);
    app->add_option("--set", sets, "override as section.key=value (repeatable)");
    for (const auto& key : drmc::config_schema()) {
      std::string names = flag_name(key.path);
      if (key.path == "sampler.algorithm") names = "-a,--algorithm," + names;
      if (key.path == "sampler.seed") names = "--seed," + names;
      if (key.path == "sampler.iterations") names = "--iterations," + names;
      if (key.path == "run.output") names = "-o,--output," + names;
      app->add_option(names, values[key.path], key.description + " [" + key.type + "]");
    }
  }

  drmc::RunConfig resolve() const {
    drmc::RunConfig cfg = file.empty() ? drmc::RunConfig{} : drmc::load_config(file);
    for (const auto& key : drmc::config_schema()) {
      const auto it = values.find(key.path);
      if (it != values.end() && !it->second.empty()) drmc::apply_override(cfg, key.path + "=" + it->second);
    }
    for (const auto& s : sets) drmc::apply_override(cfg, s);
    cfg.validate();
    return cfg;
  }
};

// Pipes inside a cell would split the Markdown table.
std::string escape_cell(const std::string& s) {
  std::string out;
  for (char c : s) {
    if (c == '|') out += '\\';
    out += c;
  }
  return out;
}

void print_schema(std::ostream& out) {
  const drmc::RunConfig defaults;
  out << "| key | type | default | meaning |\n|---|---|---|---|\n";
  for (const auto& k : drmc::config_schema())
    out << "| `" << k.path << "` | " << escape_cell(k.type) << " | `" << drmc::config_value(defaults, k.path) << "` | " << escape_cell(k.description)
        << " |\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dimension-reduced geometric MCMC for PDE-constrained inverse problems"};
  app.require_subcommand(1);
  app.set_version_flag("--version", drmc::git_describe());

  ConfigFlags run_flags;
  auto* run = app.add_subcommand("run", "run one experiment and write its outputs");
  run_flags.attach(run);
  bool dump = false;
  run->add_flag("--dump-config", dump, "print the resolved configuration and exit");

  std::vector<std::string> runs;
  std::string table_dir = "compare";
  auto* compare = app.add_subcommand("compare", "efficiency table over finished runs (one must be pcn)");
  compare->add_option("runs", runs, "run directories")->required()->check(CLI::ExistingDirectory);
  compare->add_option("-o,--output", table_dir, "directory for table.csv, table.txt and acf.csv");

  std::string level = "fast", report_path, mutate = "none";
  auto* verify = app.add_subcommand("verify", "run the property suites");
  verify->add_option("--level", level, "fast or full")->check(CLI::IsMember({"fast", "full"}));
  verify->add_option("--report", report_path, "write the JSON check list here (default: stdout on failure)");
  verify->add_option("--mutate", mutate, "inject a deliberate defect")->check(CLI::IsMember({"none", "dr-formula"}));

  std::string lis_dir;
  bool lis_json = false;
  auto* lis = app.add_subcommand("lis-inspect", "print the subspace eigenvalues and d_F history of a run");
  lis->add_option("run", lis_dir, "run directory")->required()->check(CLI::ExistingDirectory);
  lis->add_flag("--json", lis_json, "print JSON instead of a table");

  auto* schema = app.add_subcommand("schema", "print the configuration schema as a Markdown table");
  bool yaml = false;
  schema->add_flag("--yaml", yaml, "print a YAML file with every key at its default instead");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) {
      const drmc::RunConfig cfg = run_flags.resolve();
      if (dump) {
        std::cout << drmc::to_yaml(cfg);
        return 0;
      }
      const auto res = drmc::cmd_run(cfg, std::cerr);
      std::cout << res.dir.string() << '\n';
      return res.summary.incomplete ? 3 : 0;
    }
    if (*compare) {
      std::vector<std::filesystem::path> dirs(runs.begin(), runs.end());
      const auto rows = drmc::cmd_compare(dirs, table_dir);
      drmc::write_table_text(std::cout, rows);
      return 0;
    }
    if (*verify) {
      if (mutate == "dr-formula") drmc::set_mutation(drmc::Mutation::dr_formula);
      const auto rep = drmc::run_verify(level == "full" ? drmc::VerifyLevel::full : drmc::VerifyLevel::fast, std::cerr);
      const auto j = rep.to_json();
      if (!report_path.empty()) {
        std::ofstream out(report_path);
        out << std::setw(2) << j << '\n';
      } else if (!rep.passed()) {
        std::cout << std::setw(2) << j["failures"] << '\n';
      }
      return rep.passed() ? 0 : 1;
    }
    if (*lis) {
      drmc::cmd_lis_inspect(lis_dir, std::cout, lis_json);
      return 0;
    }
    if (*schema) {
      if (yaml) std::cout << drmc::to_yaml(drmc::RunConfig{});
      else print_schema(std::cout);
      return 0;
    }
  } catch (const drmc::ConfigError& e) {
    std::cerr << "configuration error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
