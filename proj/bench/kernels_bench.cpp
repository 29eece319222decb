#include "drmc/elliptic.hpp"
#include "drmc/kernels.hpp"

#include <benchmark/benchmark.h>

namespace {

std::vector<Eigen::Vector2d> nodes(int n) { return drmc::Mesh2D(n, n).nodes(); }

void BM_ExponentialKernel(benchmark::State& state, bool parallel) {
  const auto pts = nodes(static_cast<int>(state.range(0)));
  for (auto _ : state) {
    auto K = parallel ? drmc::kernels::exponential_kernel(pts, 1.25, 0.0625)
                      : drmc::kernels::serial::exponential_kernel(pts, 1.25, 0.0625);
    benchmark::DoNotOptimize(K.data());
  }
  state.counters["threads"] = parallel ? drmc::kernels::max_threads() : 1;
}

void BM_ApplyColumns(benchmark::State& state, bool parallel) {
  const int mesh = static_cast<int>(state.range(0));
  auto problem = std::make_shared<drmc::EllipticProblem>(drmc::Mesh2D(mesh, mesh), drmc::default_sensors());
  problem->set_data(drmc::Vector::Zero(25), 0.1);
  const drmc::Vector u = drmc::true_field(problem->mesh());
  const auto fwd = problem->solve(u);
  const drmc::LinearAction op = [&](const drmc::Vector& w) { return problem->gnh_action(fwd, w); };
  drmc::Rng rng(1);
  drmc::Matrix X(problem->mesh().num_nodes(), 15);
  for (drmc::Index j = 0; j < X.cols(); ++j) X.col(j) = drmc::standard_normal(X.rows(), rng);
  for (auto _ : state) {
    auto Y = parallel ? drmc::kernels::apply_columns(op, X) : drmc::kernels::serial::apply_columns(op, X);
    benchmark::DoNotOptimize(Y.data());
  }
}

void BM_ColumnEss(benchmark::State& state, bool parallel) {
  drmc::Rng rng(2);
  drmc::Matrix S(2000, state.range(0));
  for (drmc::Index j = 0; j < S.cols(); ++j) S.col(j) = drmc::standard_normal(S.rows(), rng);
  for (auto _ : state) {
    auto e = parallel ? drmc::kernels::column_ess(S) : drmc::kernels::serial::column_ess(S);
    benchmark::DoNotOptimize(e.data());
  }
}

}  // namespace

BENCHMARK_CAPTURE(BM_ExponentialKernel, serial, false)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_ExponentialKernel, openmp, true)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_ApplyColumns, serial, false)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_ApplyColumns, openmp, true)->Arg(20)->Arg(40);
BENCHMARK_CAPTURE(BM_ColumnEss, serial, false)->Arg(441);
BENCHMARK_CAPTURE(BM_ColumnEss, openmp, true)->Arg(441);

BENCHMARK_MAIN();
