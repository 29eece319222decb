#include "drmc/io.hpp"

#include <array>
#include <bit>
#include <chrono>
#include <cstring>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>

namespace drmc {

static_assert(std::endian::native == std::endian::little, "samples.bin is written in native little-endian order");

namespace {

std::ofstream open_out(const std::filesystem::path& path, std::ios::openmode mode = std::ios::out) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path, mode | std::ios::trunc);
  if (!out) throw IoError("cannot write '" + path.string() + "'");
  return out;
}

std::ifstream open_in(const std::filesystem::path& path, std::ios::openmode mode = std::ios::in) {
  std::ifstream in(path, mode);
  if (!in) throw IoError("cannot read '" + path.string() + "'");
  return in;
}

// Shortest text that parses back to the same double.
std::string num(double x) {
  if (std::isnan(x)) return "nan";
  if (std::isinf(x)) return x > 0 ? "inf" : "-inf";
  std::ostringstream s;
  s << std::setprecision(17) << x;
  return s.str();
}

double to_double(const std::string& s) {
  if (s == "nan") return std::numeric_limits<double>::quiet_NaN();
  if (s == "inf") return std::numeric_limits<double>::infinity();
  if (s == "-inf") return -std::numeric_limits<double>::infinity();
  return std::stod(s);
}

std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path, bool header) {
  auto in = open_in(path);
  std::vector<std::vector<std::string>> rows;
  std::string line;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && header) {
      first = false;
      continue;
    }
    first = false;
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(std::move(cells));
  }
  return rows;
}

void expect_cols(const std::vector<std::string>& row, std::size_t n, const std::filesystem::path& path) {
  if (row.size() != n) throw IoError("'" + path.string() + "': expected " + std::to_string(n) + " columns");
}

// JSON cannot hold inf or nan, so they are stored as strings.
nlohmann::json jnum(double x) {
  if (std::isfinite(x)) return x;
  return num(x);
}
double from_jnum(const nlohmann::json& j) { return j.is_string() ? to_double(j.get<std::string>()) : j.get<double>(); }

}  // namespace

std::vector<TraceRow> trace_rows(const ChainRecord& r) {
  std::vector<TraceRow> rows(r.potentials.size());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    rows[i] = {static_cast<long>(i + 1), r.potentials[i], r.accepts[i] ? 1 : 0, r.accept_probs[i], r.step_sizes[i],
               r.pde_solves[i]};
  }
  return rows;
}

void write_trace_csv(const std::filesystem::path& path, const std::vector<TraceRow>& rows) {
  auto out = open_out(path);
  out << "iteration,phi,accept,accept_prob,step,pde_solves\n";
  for (const auto& r : rows)
    out << r.iteration << ',' << num(r.phi) << ',' << r.accept << ',' << num(r.accept_prob) << ',' << num(r.step) << ','
        << r.pde_solves << '\n';
}

std::vector<TraceRow> read_trace_csv(const std::filesystem::path& path) {
  std::vector<TraceRow> rows;
  for (const auto& c : read_csv(path, true)) {
    expect_cols(c, 6, path);
    rows.push_back({std::stol(c[0]), to_double(c[1]), std::stoi(c[2]), to_double(c[3]), to_double(c[4]), std::stol(c[5])});
  }
  return rows;
}

void write_timing_csv(const std::filesystem::path& path, const std::vector<double>& seconds) {
  auto out = open_out(path);
  out << "iteration,seconds\n";
  for (std::size_t i = 0; i < seconds.size(); ++i) out << i + 1 << ',' << num(seconds[i]) << '\n';
}

std::vector<double> read_timing_csv(const std::filesystem::path& path) {
  std::vector<double> s;
  for (const auto& c : read_csv(path, true)) {
    expect_cols(c, 2, path);
    s.push_back(to_double(c[1]));
  }
  return s;
}

void write_samples(const std::filesystem::path& path, const Matrix& samples) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out.write(kSamplesMagic, 8);
  const std::uint64_t n = static_cast<std::uint64_t>(samples.cols());
  const std::uint64_t count = static_cast<std::uint64_t>(samples.rows());
  out.write(reinterpret_cast<const char*>(&n), 8);
  out.write(reinterpret_cast<const char*>(&count), 8);
  const Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm = samples;
  out.write(reinterpret_cast<const char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!out) throw IoError("short write to '" + path.string() + "'");
}

Matrix read_samples(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::array<char, 8> magic{};
  std::uint64_t n = 0, count = 0;
  in.read(magic.data(), 8);
  if (!in || std::memcmp(magic.data(), kSamplesMagic, 8) != 0) throw IoError("'" + path.string() + "' is not a samples file");
  in.read(reinterpret_cast<char*>(&n), 8);
  in.read(reinterpret_cast<char*>(&count), 8);
  if (!in) throw IoError("truncated header in '" + path.string() + "'");
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> rm(static_cast<Index>(count), static_cast<Index>(n));
  in.read(reinterpret_cast<char*>(rm.data()), static_cast<std::streamsize>(rm.size() * sizeof(double)));
  if (!in) throw IoError("truncated payload in '" + path.string() + "'");
  return rm;
}

void write_grid_csv(const std::filesystem::path& path, const Vector& values, Index rows, Index cols) {
  if (rows * cols != values.size()) throw std::invalid_argument("grid shape does not match the value count");
  auto out = open_out(path);
  for (Index r = 0; r < rows; ++r) {
    for (Index c = 0; c < cols; ++c) out << (c ? "," : "") << num(values[r * cols + c]);
    out << '\n';
  }
}

Matrix read_grid_csv(const std::filesystem::path& path) {
  const auto cells = read_csv(path, false);
  if (cells.empty()) return Matrix(0, 0);
  Matrix m(static_cast<Index>(cells.size()), static_cast<Index>(cells[0].size()));
  for (std::size_t r = 0; r < cells.size(); ++r) {
    expect_cols(cells[r], cells[0].size(), path);
    for (std::size_t c = 0; c < cells[r].size(); ++c) m(Index(r), Index(c)) = to_double(cells[r][c]);
  }
  return m;
}

nlohmann::json to_json(const RunSummaryFile& s) {
  nlohmann::json j;
  j["algorithm"] = s.row.algorithm;
  j["h"] = s.row.step;
  j["acceptance"] = jnum(s.row.acceptance);
  j["seconds_per_iteration"] = jnum(s.row.seconds_per_iteration);
  j["ess"] = {{"min", jnum(s.row.ess.min)}, {"median", jnum(s.row.ess.median)}, {"max", jnum(s.row.ess.max)}};
  j["min_ess_per_second"] = jnum(s.row.min_ess_per_second);
  j["pde_solves"] = s.row.pde_solves;
  if (s.baseline_min_ess_per_second) {
    j["baseline_min_ess_per_second"] = jnum(*s.baseline_min_ess_per_second);
    j["spdup"] = jnum(s.row.speedup);
  }
  j["final_h"] = jnum(s.final_h);
  j["final_h_r"] = jnum(s.final_h_r);
  j["final_h_perp"] = jnum(s.final_h_perp);
  j["iterations"] = s.iterations;
  j["burn_in"] = s.burn_in;
  if (s.lis_rank) j["lis_rank"] = *s.lis_rank;
  if (s.lis_m) j["lis_m"] = *s.lis_m;
  j["incomplete"] = s.incomplete;
  if (!s.error.empty()) j["error"] = s.error;
  return j;
}

RunSummaryFile summary_from_json(const nlohmann::json& j) {
  RunSummaryFile s;
  s.row.algorithm = j.at("algorithm").get<std::string>();
  s.row.step = j.at("h").get<std::string>();
  s.row.acceptance = from_jnum(j.at("acceptance"));
  s.row.seconds_per_iteration = from_jnum(j.at("seconds_per_iteration"));
  s.row.ess = {from_jnum(j.at("ess").at("min")), from_jnum(j.at("ess").at("median")), from_jnum(j.at("ess").at("max"))};
  s.row.min_ess_per_second = from_jnum(j.at("min_ess_per_second"));
  s.row.pde_solves = j.at("pde_solves").get<long>();
  if (j.contains("spdup")) {
    s.baseline_min_ess_per_second = from_jnum(j.at("baseline_min_ess_per_second"));
    s.row.speedup = from_jnum(j.at("spdup"));
  }
  s.final_h = from_jnum(j.at("final_h"));
  s.final_h_r = from_jnum(j.at("final_h_r"));
  s.final_h_perp = from_jnum(j.at("final_h_perp"));
  s.iterations = j.at("iterations").get<long>();
  s.burn_in = j.at("burn_in").get<int>();
  if (j.contains("lis_rank")) s.lis_rank = j.at("lis_rank").get<Index>();
  if (j.contains("lis_m")) s.lis_m = j.at("lis_m").get<int>();
  s.incomplete = j.at("incomplete").get<bool>();
  if (j.contains("error")) s.error = j.at("error").get<std::string>();
  return s;
}

nlohmann::json to_json(const RunManifest& m) {
  nlohmann::json files = nlohmann::json::array();
  for (const auto& f : m.files) files.push_back({{"name", f.name}, {"bytes", f.bytes}, {"fnv1a", f.fnv1a}});
  return {{"config_hash", m.config_hash}, {"seed", m.seed},         {"git_describe", m.git_describe},
          {"started", m.started},         {"finished", m.finished}, {"incomplete", m.incomplete},
          {"files", files}};
}

RunManifest manifest_from_json(const nlohmann::json& j) {
  RunManifest m;
  m.config_hash = j.at("config_hash").get<std::string>();
  m.seed = j.at("seed").get<std::uint64_t>();
  m.git_describe = j.at("git_describe").get<std::string>();
  m.started = j.at("started").get<std::string>();
  m.finished = j.at("finished").get<std::string>();
  m.incomplete = j.at("incomplete").get<bool>();
  for (const auto& f : j.at("files"))
    m.files.push_back({f.at("name").get<std::string>(), f.at("bytes").get<std::uint64_t>(), f.at("fnv1a").get<std::string>()});
  return m;
}

FileEntry describe_file(const std::filesystem::path& path) {
  const std::string bytes = read_text(path);
  return {path.filename().string(), bytes.size(), hex64(fnv1a(bytes.data(), bytes.size()))};
}

void write_lis_csv(const std::filesystem::path& path, const std::vector<LisRecord>& history) {
  auto out = open_out(path);
  out << "update,m,rank,d_F\n";
  for (std::size_t i = 0; i < history.size(); ++i)
    out << i + 1 << ',' << history[i].m << ',' << history[i].rank << ',' << num(history[i].d_F) << '\n';
}

std::vector<LisRecord> read_lis_csv(const std::filesystem::path& path) {
  std::vector<LisRecord> h;
  for (const auto& c : read_csv(path, true)) {
    expect_cols(c, 4, path);
    h.push_back({std::stoi(c[1]), static_cast<Index>(std::stol(c[2])), to_double(c[3])});
  }
  return h;
}

nlohmann::json to_json(const LisState& lis) {
  nlohmann::json hist = nlohmann::json::array();
  for (const auto& r : lis.history) hist.push_back({{"m", r.m}, {"rank", r.rank}, {"d_F", jnum(r.d_F)}});
  return {{"settings",
           {{"rho_g", lis.settings.rho_g},
            {"delta", lis.settings.delta},
            {"m_max", lis.settings.m_max},
            {"n_lag", lis.settings.n_lag}}},
          {"spectrum", to_json(lis.spectrum)},
          {"m", lis.m},
          {"d_F", jnum(lis.d_F)},
          {"frozen", lis.frozen},
          {"history", hist}};
}

LisState lis_from_json(const nlohmann::json& j) {
  LisState lis;
  const auto& s = j.at("settings");
  lis.settings = {s.at("rho_g").get<double>(), s.at("delta").get<double>(), s.at("m_max").get<int>(), s.at("n_lag").get<int>()};
  lis.spectrum = spectrum_from_json(j.at("spectrum"));
  lis.m = j.at("m").get<int>();
  lis.d_F = from_jnum(j.at("d_F"));
  lis.frozen = j.at("frozen").get<bool>();
  for (const auto& r : j.at("history")) lis.history.push_back({r.at("m").get<int>(), r.at("rank").get<Index>(), from_jnum(r.at("d_F"))});
  return lis;
}

void write_data_csv(const std::filesystem::path& path, const std::vector<DataRow>& rows) {
  auto out = open_out(path);
  out << "x,y,observation,clean\n";
  for (const auto& r : rows) out << num(r.x) << ',' << num(r.y) << ',' << num(r.observation) << ',' << num(r.clean) << '\n';
}

std::vector<DataRow> read_data_csv(const std::filesystem::path& path) {
  std::vector<DataRow> rows;
  for (const auto& c : read_csv(path, true)) {
    expect_cols(c, 4, path);
    rows.push_back({to_double(c[0]), to_double(c[1]), to_double(c[2]), to_double(c[3])});
  }
  return rows;
}

void write_json(const std::filesystem::path& path, const nlohmann::json& j) {
  auto out = open_out(path);
  out << std::setw(2) << j << '\n';
}

nlohmann::json read_json(const std::filesystem::path& path) {
  auto in = open_in(path);
  try {
    return nlohmann::json::parse(in);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("'" + path.string() + "': " + e.what());
  }
}

void write_text(const std::filesystem::path& path, const std::string& text) {
  auto out = open_out(path, std::ios::out | std::ios::binary);
  out << text;
}

std::string read_text(const std::filesystem::path& path) {
  auto in = open_in(path, std::ios::in | std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::string hex64(std::uint64_t x) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << x;
  return s.str();
}

std::string utc_now() {
  const std::time_t t = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&t, &tm);
  std::ostringstream s;
  s << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return s.str();
}

}  // namespace drmc
