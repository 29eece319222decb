#include "drmc/io.hpp"
#include "drmc/runner.hpp"

#include <gtest/gtest.h>

#include <sstream>

using namespace drmc;
namespace fs = std::filesystem;

namespace {

fs::path fresh(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / "drmc-runner-tests" / name;
  fs::remove_all(p);
  return p;
}

RunConfig linear_config(const std::string& alg, const fs::path& out) {
  RunConfig c;
  apply_override(c, "model=linear-gaussian");
  apply_override(c, "sampler.algorithm=" + alg);
  apply_override(c, "sampler.iterations=400");
  apply_override(c, "sampler.burn_in=100");
  apply_override(c, "adaptation.n_lag=20");
  c.output = out.string();
  return c;
}

}  // namespace

TEST(Runner, IdenticalConfigGivesIdenticalTrace) {
  std::ostringstream log;
  const RunResult a = cmd_run(linear_config("adr-inf-mmala", fresh("a")), log);
  const RunResult b = cmd_run(linear_config("adr-inf-mmala", fresh("b")), log);
  EXPECT_EQ(read_text(a.dir / "trace.csv"), read_text(b.dir / "trace.csv"));
  EXPECT_EQ(read_text(a.dir / "samples.bin"), read_text(b.dir / "samples.bin"));
  EXPECT_EQ(read_text(a.dir / "lis.csv"), read_text(b.dir / "lis.csv"));
}

TEST(Runner, WritesOutputsWithInventory) {
  std::ostringstream log;
  const RunResult r = cmd_run(linear_config("inf-mala", fresh("inventory")), log);
  for (const char* f : {"config.yaml", "data.csv", "trace.csv", "timing.csv", "samples.bin", "mean.csv",
                        "summary.json", "manifest.json"})
    EXPECT_TRUE(fs::exists(r.dir / f)) << f;
  const RunManifest m = manifest_from_json(read_json(r.dir / "manifest.json"));
  EXPECT_EQ(m.seed, r.chains[0].potentials.empty() ? 0u : 2026u);
  EXPECT_FALSE(m.incomplete);
  for (const FileEntry& e : m.files) EXPECT_EQ(describe_file(r.dir / e.name), e) << e.name;
  EXPECT_EQ(read_samples(r.dir / "samples.bin").rows(), 300);
  EXPECT_EQ(read_trace_csv(r.dir / "trace.csv").size(), 400u);
  const RunSummaryFile s = summary_from_json(read_json(r.dir / "summary.json"));
  EXPECT_EQ(s.row.pde_solves, 802);
  ASSERT_TRUE(s.baseline_min_ess_per_second.has_value());
  EXPECT_GT(s.row.speedup, 0.0);
  const RunConfig back = load_config((r.dir / "config.yaml").string());
  EXPECT_EQ(hex64(back.hash()), m.config_hash);
}

TEST(Runner, FlatPcnAcceptsEverything) {
  RunConfig c = linear_config("pcn", fresh("flat"));
  apply_override(c, "model=flat");
  apply_override(c, "sampler.iterations=1000");
  std::ostringstream log;
  const RunResult r = cmd_run(c, log);
  EXPECT_EQ(r.summary.row.acceptance, 1.0);
  for (const TraceRow& t : read_trace_csv(r.dir / "trace.csv")) EXPECT_EQ(t.accept, 1);
}

TEST(Runner, MultipleChainsMatchSequentialRuns) {
  RunConfig c = linear_config("pcn", fresh("multi"));
  c.chains = 3;
  std::ostringstream log;
  const RunResult r = cmd_run(c, log);
  ASSERT_EQ(r.chains.size(), 3u);
  for (int k = 0; k < 3; ++k) EXPECT_TRUE(fs::exists(r.dir / ("chain-" + std::to_string(k)) / "trace.csv"));
  const Experiment exp = build_experiment(c);
  ChainSettings s = c.resolved_chain();
  s.seed = chain_seed(c.chain.seed, 2);
  const auto seq = run_chains(exp, s, 1);
  EXPECT_EQ(seq[0].potentials, r.chains[2].potentials);
  EXPECT_EQ(chain_seed(7, 0), 7u);
  EXPECT_NE(chain_seed(7, 1), chain_seed(7, 2));
}

TEST(Runner, CompareWritesTables) {
  std::ostringstream log;
  RunConfig c = linear_config("dili", fresh("cmp-dili"));
  c.baseline = false;
  const RunResult d = cmd_run(c, log);
  const RunResult p = cmd_run(linear_config("pcn", fresh("cmp-pcn")), log);
  const fs::path out = fresh("cmp-out");
  const auto rows = cmd_compare({p.dir, d.dir}, out, 20);
  ASSERT_EQ(rows.size(), 2u);
  EXPECT_DOUBLE_EQ(rows[0].speedup, 1.0);
  for (const char* f : {"table.csv", "table.txt", "acf.csv"}) EXPECT_TRUE(fs::exists(out / f)) << f;
  EXPECT_THROW(cmd_compare({d.dir, d.dir}, out), std::invalid_argument);
  EXPECT_THROW(cmd_compare({p.dir}, out), std::invalid_argument);
}

TEST(Runner, LisInspect) {
  std::ostringstream log, out;
  const RunResult r = cmd_run(linear_config("adr-inf-mhmc", fresh("inspect")), log);
  cmd_lis_inspect(r.dir, out, true);
  const nlohmann::json j = nlohmann::json::parse(out.str());
  EXPECT_TRUE(j.contains("history"));
}

TEST(Runner, OutputRootFromEnvironment) {
  ::setenv("DRMC_OUTPUT_ROOT", "/tmp/drmc-root", 1);
  RunConfig c;
  EXPECT_EQ(resolve_output(c), fs::path("/tmp/drmc-root") / "adr-inf-mmala-2026");
  ::unsetenv("DRMC_OUTPUT_ROOT");
  EXPECT_EQ(output_root(), fs::path("runs"));
}
