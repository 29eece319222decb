#pragma once

#include "drmc/diagnostics.hpp"
#include "drmc/lis.hpp"
#include "drmc/sampler.hpp"

#include <json.hpp>

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace drmc {

class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One trace.csv row. Wall time goes to timing.csv so that the trace is
/// bit-reproducible.
struct TraceRow {
  long iteration = 0;
  double phi = 0.0;
  int accept = 0;
  double accept_prob = 0.0;
  double step = 0.0;
  long pde_solves = 0;
  bool operator==(const TraceRow&) const = default;
};
std::vector<TraceRow> trace_rows(const ChainRecord& record);
void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows);
std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path);

/// Columns: iteration, seconds.
void write_timing_csv(const std::filesystem::path& path, const std::vector<double>& seconds);
std::vector<double> read_timing_csv(const std::filesystem::path& path);

/// samples.bin: 8 bytes "DRMCSMP1", uint64 n, uint64 count, then count
/// draws of n float64 values each. All integers and floats little-endian.
inline constexpr char kSamplesMagic[9] = "DRMCSMP1";
void write_samples(const std::filesystem::path& path, const Matrix& samples);
Matrix read_samples(const std::filesystem::path& path);

/// Values laid out as `rows` lines of `cols` comma-separated numbers.
void write_grid_csv(const std::filesystem::path& path, const Vector& values, Index rows, Index cols);
Matrix read_grid_csv(const std::filesystem::path& path);

struct RunSummaryFile {
  RunSummary row;
  std::optional<double> baseline_min_ess_per_second;
  double final_h = 0.0, final_h_r = 0.0, final_h_perp = 0.0;
  long iterations = 0;
  int burn_in = 0;
  std::optional<Index> lis_rank;
  std::optional<int> lis_m;
  bool incomplete = false;
  std::string error;
};
nlohmann::json to_json(const RunSummaryFile& s);
RunSummaryFile summary_from_json(const nlohmann::json& j);

struct FileEntry {
  std::string name;
  std::uint64_t bytes = 0;
  std::string fnv1a;  // 16 hex digits
  bool operator==(const FileEntry&) const = default;
};
struct RunManifest {
  std::string config_hash;  // 16 hex digits
  std::uint64_t seed = 0;
  std::string git_describe;
  std::string started, finished;  // ISO 8601 UTC
  bool incomplete = false;
  std::vector<FileEntry> files;
};
nlohmann::json to_json(const RunManifest& m);
RunManifest manifest_from_json(const nlohmann::json& j);
FileEntry describe_file(const std::filesystem::path& path);

/// lis.csv: update, m, rank, d_F.
void write_lis_csv(const std::filesystem::path& path, const std::vector<LisRecord>& history);
std::vector<LisRecord> read_lis_csv(const std::filesystem::path& path);
nlohmann::json to_json(const LisState& lis);
LisState lis_from_json(const nlohmann::json& j);

/// data.csv: x, y, observation, noise-free value.
struct DataRow {
  double x = 0.0, y = 0.0, observation = 0.0, clean = 0.0;
  bool operator==(const DataRow&) const = default;
};
void write_data_csv(const std::filesystem::path& path, const std::vector<DataRow>& rows);
std::vector<DataRow> read_data_csv(const std::filesystem::path& path);

void write_json(const std::filesystem::path& path, const nlohmann::json& j);
nlohmann::json read_json(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, const std::string& text);
std::string read_text(const std::filesystem::path& path);

std::string hex64(std::uint64_t x);
std::string utc_now();

}  // namespace drmc
