#pragma once

#include "drmc/config.hpp"
#include "drmc/covariance.hpp"
#include "drmc/elliptic.hpp"
#include "drmc/io.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>
#include <optional>
#include <vector>

namespace drmc {

/// The forward model, prior and data a configuration describes.
struct Experiment {
  RunConfig config;
  std::shared_ptr<const ForwardModel> model;
  std::shared_ptr<const CovarianceOperator> prior;
  std::optional<Mesh2D> mesh;  // elliptic only
  std::vector<DataRow> data;
  double noise_sd = 0.0;
  /// Shape of mean.csv.
  Index grid_rows() const;
  Index grid_cols() const;
};
Experiment build_experiment(const RunConfig& cfg);

/// $DRMC_OUTPUT_ROOT, or "runs" when unset.
std::filesystem::path output_root();
/// cfg.output, or <output_root>/<algorithm>-<seed>.
std::filesystem::path resolve_output(const RunConfig& cfg);

/// Seed of chain k: the configured seed for k = 0, a mixed stream otherwise.
std::uint64_t chain_seed(std::uint64_t seed, int k);

/// Runs `chains` independent chains, one thread each.
std::vector<ChainRecord> run_chains(const Experiment& exp, const ChainSettings& settings, int chains);

struct RunResult {
  std::filesystem::path dir;
  std::vector<ChainRecord> chains;
  RunSummaryFile summary;  // chain 0
  std::optional<ChainRecord> baseline;
};

/// Writes config.yaml, data.csv, trace.csv, timing.csv, samples.bin,
/// mean.csv, summary.json, lis.csv/lis.json when a subspace was built, and
/// manifest.json last. With several chains each gets a chain-<k>/ folder.
RunResult cmd_run(const RunConfig& cfg, std::ostream& log);

/// Writes the outputs of one finished chain to `dir`.
RunManifest write_run(const std::filesystem::path& dir, const Experiment& exp, const ChainRecord& record,
                      const RunSummaryFile& summary, const std::string& started);

/// Reads summary.json and trace.csv of each run directory and writes
/// table.csv, table.txt and acf.csv (misfit autocorrelation after burn-in)
/// to `out_dir`. Throws std::invalid_argument without a pcn run.
std::vector<RunSummary> cmd_compare(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out_dir,
                                    int max_lag = 100);

/// Prints the LIS update history and final eigenvalues stored in a run.
void cmd_lis_inspect(const std::filesystem::path& run_dir, std::ostream& out, bool as_json = false);

/// Build version string baked in at configure time.
std::string git_describe();

}  // namespace drmc
