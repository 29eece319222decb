#include "drmc/runner.hpp"

#include "drmc/diagnostics.hpp"
#include "drmc/linear_models.hpp"

#include <cstdlib>
#include <iomanip>
#include <fstream>
#include <iostream>
#include <thread>

#ifndef DRMC_GIT_DESCRIBE
#define DRMC_GIT_DESCRIBE "unknown"
#endif

namespace drmc {

std::string git_describe() { return DRMC_GIT_DESCRIBE; }

Index Experiment::grid_rows() const { return mesh ? mesh->ny + 1 : 1; }
Index Experiment::grid_cols() const { return mesh ? mesh->nx + 1 : model->dim(); }

Experiment build_experiment(const RunConfig& cfg) {
  cfg.validate();
  Experiment exp;
  exp.config = cfg;
  switch (cfg.model) {
    case ModelKind::elliptic: {
      const auto sensors = cfg.sensors.empty() ? default_sensors() : cfg.sensors;
      const EllipticProblem data_problem(Mesh2D(cfg.data_mesh, cfg.data_mesh), sensors);
      const Vector u_true = true_field(data_problem.mesh());
      const SyntheticData syn = generate_data(u_true, data_problem, cfg.snr, cfg.data_seed);
      exp.noise_sd = syn.noise_sd > 0.0 ? syn.noise_sd : cfg.noiseless_sd;
      auto problem = std::make_shared<EllipticProblem>(Mesh2D(cfg.nx, cfg.ny), sensors);
      problem->set_data(syn.y, exp.noise_sd);
      exp.mesh = problem->mesh();
      exp.prior = std::make_shared<CovarianceOperator>(build_prior_covariance(exp.mesh->nodes(), cfg.sigma_u, cfg.s0));
      exp.model = std::make_shared<EllipticModel>(problem);
      for (std::size_t i = 0; i < sensors.size(); ++i)
        exp.data.push_back({sensors[i][0], sensors[i][1], syn.y[Index(i)], syn.clean[Index(i)]});
      break;
    }
    case ModelKind::linear_gaussian: {
      auto model = std::make_shared<LinearGaussianModel>(
          random_linear_model(cfg.linear_n, cfg.linear_m, cfg.linear_seed, cfg.linear_noise_sd));
      exp.prior = std::make_shared<CovarianceOperator>(model->prior_cov());
      exp.noise_sd = cfg.linear_noise_sd;
      for (Index i = 0; i < model->num_observations(); ++i)
        exp.data.push_back({double(i), 0.0, model->data()[i], std::numeric_limits<double>::quiet_NaN()});
      exp.model = model;
      break;
    }
    case ModelKind::flat: {
      exp.model = std::make_shared<FlatModel>(cfg.linear_n);
      exp.prior = std::make_shared<CovarianceOperator>(line_covariance(cfg.linear_n));
      break;
    }
  }
  return exp;
}

std::filesystem::path output_root() {
  const char* env = std::getenv("DRMC_OUTPUT_ROOT");
  return env && *env ? std::filesystem::path(env) : std::filesystem::path("runs");
}

std::filesystem::path resolve_output(const RunConfig& cfg) {
  if (!cfg.output.empty()) return cfg.output;
  return output_root() / (to_string(cfg.chain.algorithm) + "-" + std::to_string(cfg.chain.seed));
}

std::uint64_t chain_seed(std::uint64_t seed, int k) {
  if (k == 0) return seed;
  std::uint64_t z = seed + 0x9e3779b97f4a7c15ULL * static_cast<std::uint64_t>(k);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

std::vector<ChainRecord> run_chains(const Experiment& exp, const ChainSettings& settings, int chains) {
  std::vector<ChainRecord> out(static_cast<std::size_t>(chains));
  auto one = [&](int k) {
    SolveCounter counter;
    const WhitenedTarget target(*exp.model, *exp.prior, &counter);
    ChainSettings s = settings;
    s.seed = chain_seed(settings.seed, k);
    out[std::size_t(k)] = run_chain(target, s);
  };
  if (chains == 1) {
    one(0);
    return out;
  }
  std::vector<std::thread> threads;
  std::vector<std::exception_ptr> errors(static_cast<std::size_t>(chains));
  for (int k = 0; k < chains; ++k)
    threads.emplace_back([&, k] {
      try {
        one(k);
      } catch (...) {
        errors[std::size_t(k)] = std::current_exception();
      }
    });
  for (auto& t : threads) t.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
  return out;
}

namespace {

RunSummaryFile make_summary(const ChainRecord& r, const std::optional<ChainRecord>& baseline) {
  RunSummaryFile s;
  s.row = summarize(r);
  if (baseline) {
    const RunSummary b = summarize(*baseline);
    s.baseline_min_ess_per_second = b.min_ess_per_second;
    s.row.speedup = b.min_ess_per_second > 0.0 ? s.row.min_ess_per_second / b.min_ess_per_second
                                                : std::numeric_limits<double>::quiet_NaN();
  } else if (r.algorithm == Algorithm::pcn) {
    s.baseline_min_ess_per_second = s.row.min_ess_per_second;
    s.row.speedup = 1.0;
  }
  s.final_h = r.final_h;
  s.final_h_r = r.final_h_r;
  s.final_h_perp = r.final_h_perp;
  s.iterations = static_cast<long>(r.iterations_done());
  s.burn_in = r.burn_in;
  if (r.lis) {
    s.lis_rank = r.lis->rank();
    s.lis_m = r.lis->m;
  }
  s.incomplete = r.incomplete;
  s.error = r.error;
  return s;
}

}  // namespace

RunManifest write_run(const std::filesystem::path& dir, const Experiment& exp, const ChainRecord& record,
                      const RunSummaryFile& summary, const std::string& started) {
  std::filesystem::create_directories(dir);
  std::vector<std::string> files = {"config.yaml", "data.csv", "trace.csv", "timing.csv", "samples.bin", "mean.csv",
                                    "summary.json"};
  write_text(dir / "config.yaml", to_yaml(exp.config));
  write_data_csv(dir / "data.csv", exp.data);
  write_trace_csv(dir / "trace.csv", trace_rows(record));
  write_timing_csv(dir / "timing.csv", record.wall_times);
  write_samples(dir / "samples.bin", record.samples);
  const Vector mean = record.mean.size() == exp.model->dim() ? record.mean : Vector::Zero(exp.model->dim());
  write_grid_csv(dir / "mean.csv", mean, exp.grid_rows(), exp.grid_cols());
  write_json(dir / "summary.json", to_json(summary));
  if (record.lis) {
    write_lis_csv(dir / "lis.csv", record.lis->history);
    write_json(dir / "lis.json", to_json(*record.lis));
    files.push_back("lis.csv");
    files.push_back("lis.json");
  }
  RunManifest m;
  m.config_hash = hex64(exp.config.hash());
  m.seed = exp.config.chain.seed;
  m.git_describe = git_describe();
  m.started = started;
  m.finished = utc_now();
  m.incomplete = record.incomplete;
  for (const auto& f : files) m.files.push_back(describe_file(dir / f));
  write_json(dir / "manifest.json", to_json(m));
  return m;
}

RunResult cmd_run(const RunConfig& cfg, std::ostream& log) {
  const std::string started = utc_now();
  const Experiment exp = build_experiment(cfg);
  const ChainSettings settings = cfg.resolved_chain();
  RunResult res;
  res.dir = resolve_output(cfg);
  log << "running " << to_string(settings.algorithm) << " (n = " << exp.model->dim() << ", h = " << settings.h
      << ", " << settings.iterations << " iterations, " << cfg.chains << " chain(s)) -> " << res.dir.string() << '\n';
  res.chains = run_chains(exp, settings, cfg.chains);

  if (cfg.baseline && settings.algorithm != Algorithm::pcn) {
    RunConfig bcfg = cfg;
    bcfg.chain.algorithm = Algorithm::pcn;
    bcfg.h_auto = true;
    bcfg.output = (res.dir / "baseline").string();
    ChainSettings bs = bcfg.resolved_chain();
    log << "running pcn baseline (h = " << bs.h << ")\n";
    res.baseline = run_chains(exp, bs, 1).front();
    Experiment bexp = exp;
    bexp.config = bcfg;
    write_run(res.dir / "baseline", bexp, *res.baseline, make_summary(*res.baseline, std::nullopt), started);
  }

  for (std::size_t k = 0; k < res.chains.size(); ++k) {
    const auto& rec = res.chains[k];
    const RunSummaryFile s = make_summary(rec, res.baseline);
    if (k == 0) res.summary = s;
    Experiment cexp = exp;
    cexp.config.chain.seed = chain_seed(cfg.chain.seed, int(k));
    const auto dir = res.chains.size() == 1 ? res.dir : res.dir / ("chain-" + std::to_string(k));
    write_run(dir, cexp, rec, s, started);
    log << std::fixed << std::setprecision(3) << "chain " << k << ": acceptance " << s.row.acceptance << ", min ESS "
        << s.row.ess.min << ", minESS/s " << s.row.min_ess_per_second;
    if (s.baseline_min_ess_per_second) log << ", spdup " << s.row.speedup;
    log << ", PDE solves " << s.row.pde_solves << (s.incomplete ? " (incomplete: " + s.error + ")" : std::string()) << '\n';
    log.unsetf(std::ios::floatfield);
  }
  return res;
}

std::vector<RunSummary> cmd_compare(const std::vector<std::filesystem::path>& runs, const std::filesystem::path& out_dir,
                                    int max_lag) {
  if (runs.size() < 2) throw std::invalid_argument("compare needs at least two runs including pcn");
  std::vector<RunSummary> rows;
  std::vector<std::string> names;
  std::vector<Vector> acfs;
  for (const auto& dir : runs) {
    const RunSummaryFile s = summary_from_json(read_json(dir / "summary.json"));
    rows.push_back(s.row);
    const auto trace = read_trace_csv(dir / "trace.csv");
    const long start = std::min<long>(s.burn_in, static_cast<long>(trace.size()));
    Vector phi(static_cast<Index>(trace.size()) - start);
    for (Index i = 0; i < phi.size(); ++i) phi[i] = trace[std::size_t(start + i)].phi;
    names.push_back(s.row.algorithm);
    acfs.push_back(phi.size() > 1 ? autocorrelation(phi, std::min<Index>(max_lag, phi.size() - 1)) : Vector::Ones(1));
  }
  rows = summary_table(rows);
  std::filesystem::create_directories(out_dir);
  {
    std::ofstream csv(out_dir / "table.csv");
    write_table_csv(csv, rows);
    std::ofstream txt(out_dir / "table.txt");
    write_table_text(txt, rows);
    Index lags = 0;
    for (const auto& a : acfs) lags = std::max(lags, a.size());
    for (auto& a : acfs) {
      const Index old = a.size();
      a.conservativeResize(lags);
      for (Index i = old; i < lags; ++i) a[i] = std::numeric_limits<double>::quiet_NaN();
    }
    std::ofstream acf(out_dir / "acf.csv");
    write_acf_csv(acf, names, acfs);
    if (!csv || !txt || !acf) throw IoError("cannot write tables to '" + out_dir.string() + "'");
  }
  return rows;
}

void cmd_lis_inspect(const std::filesystem::path& run_dir, std::ostream& out, bool as_json) {
  const auto path = run_dir / "lis.json";
  if (!std::filesystem::exists(path)) throw IoError("'" + run_dir.string() + "' holds no subspace (lis.json missing)");
  const nlohmann::json j = read_json(path);
  if (as_json) {
    nlohmann::json slim = j;
    slim["spectrum"].erase("basis");
    out << std::setw(2) << slim << '\n';
    return;
  }
  const LisState lis = lis_from_json(j);
  out << "update  m  rank  d_F\n";
  for (std::size_t i = 0; i < lis.history.size(); ++i)
    out << std::setw(6) << i + 1 << ' ' << std::setw(3) << lis.history[i].m << ' ' << std::setw(5) << lis.history[i].rank
        << "  " << std::setprecision(6) << lis.history[i].d_F << '\n';
  out << "frozen: " << (lis.frozen ? "yes" : "no") << ", m = " << lis.m << ", rank = " << lis.rank() << '\n';
  out << "eigenvalues:";
  for (Index i = 0; i < lis.spectrum.eigenvalues().size(); ++i) out << ' ' << std::setprecision(8) << lis.spectrum.eigenvalues()[i];
  out << '\n';
}

}  // namespace drmc
