#include "drmc/elliptic.hpp"
#include "drmc/linear_models.hpp"
#include "drmc/sampler.hpp"

#include <gtest/gtest.h>

using namespace drmc;

namespace {

// Fails every evaluation after the first `good` ones.
class FailingModel final : public ForwardModel {
 public:
  explicit FailingModel(int good) : inner_(4), good_(good) {}
  Index dim() const override { return 4; }
  Index num_observations() const override { return 0; }
  std::unique_ptr<ModelPoint> evaluate(const Vector& u, SolveCounter* c) const override {
    if (calls_++ >= good_) throw NumericalError("solver diverged");
    return inner_.evaluate(u, c);
  }

 private:
  FlatModel inner_;
  int good_;
  mutable int calls_ = 0;
};

ChainSettings settings(Algorithm a, int iterations, int burn_in, std::uint64_t seed = 5) {
  ChainSettings s;
  s.algorithm = a;
  s.iterations = iterations;
  s.burn_in = burn_in;
  s.seed = seed;
  s.h = 0.5;
  return s;
}

std::shared_ptr<EllipticProblem> small_elliptic() {
  auto p = std::make_shared<EllipticProblem>(Mesh2D(8, 8), default_sensors());
  const EllipticProblem data(Mesh2D(16, 16), default_sensors());
  const SyntheticData d = generate_data(true_field(data.mesh()), data, 10.0, 1);
  p->set_data(d.y, d.noise_sd);
  return p;
}

}  // namespace

TEST(Algorithms, NamesRoundTrip) {
  ASSERT_EQ(all_algorithms().size(), 8u);
  for (Algorithm a : all_algorithms()) EXPECT_EQ(parse_algorithm(to_string(a)), a);
  EXPECT_EQ(to_string(Algorithm::adr_inf_mmala), "adr-inf-mmala");
  EXPECT_THROW(parse_algorithm("mala"), std::invalid_argument);
}

TEST(Chain, PcnOnFlatTargetAlwaysAccepts) {
  const FlatModel m(10);
  const CovarianceOperator C(line_covariance(10));
  const WhitenedTarget t(m, C);
  ChainSettings s = settings(Algorithm::pcn, 1000, 100);
  s.tune = false;
  const ChainRecord r = run_chain(t, s);
  ASSERT_EQ(r.iterations_done(), 1000);
  for (char a : r.accepts) EXPECT_EQ(a, 1);
  for (double p : r.accept_probs) EXPECT_EQ(p, 1.0);
}

TEST(Chain, DeterministicForFixedSeed) {
  const LinearGaussianModel m = random_linear_model(8, 4, 2);
  const CovarianceOperator C(m.prior_cov());
  const WhitenedTarget t(m, C);
  for (Algorithm a : all_algorithms()) {
    const ChainSettings s = settings(a, 300, 100);
    const ChainRecord x = run_chain(t, s), y = run_chain(t, s);
    EXPECT_EQ(x.potentials, y.potentials) << to_string(a);
    EXPECT_EQ(x.accepts, y.accepts) << to_string(a);
    EXPECT_EQ(x.samples, y.samples) << to_string(a);
    EXPECT_EQ(x.step_sizes, y.step_sizes) << to_string(a);
    const ChainRecord z = run_chain(t, settings(a, 300, 100, 6));
    EXPECT_NE(x.potentials, z.potentials) << to_string(a);
  }
}

TEST(Chain, RecordInvariants) {
  const LinearGaussianModel m = random_linear_model(8, 4, 3);
  const CovarianceOperator C(m.prior_cov());
  SolveCounter counter;
  const WhitenedTarget t(m, C, &counter);
  for (Algorithm a : all_algorithms()) {
    counter.reset();
    const ChainRecord r = run_chain(t, settings(a, 200, 50));
    const std::size_t n = r.potentials.size();
    EXPECT_EQ(n, 200u);
    EXPECT_EQ(r.accepts.size(), n);
    EXPECT_EQ(r.wall_times.size(), n);
    EXPECT_EQ(r.pde_solves.size(), n);
    EXPECT_EQ(r.samples.rows(), 150);
    for (std::size_t k = 1; k < n; ++k) EXPECT_GE(r.pde_solves[k], r.pde_solves[k - 1]);
    EXPECT_LE((r.mean - r.samples.colwise().mean().transpose()).norm(), 1e-12);
    EXPECT_FALSE(r.incomplete);
  }
}

TEST(Chain, SolveCountsFollowTableConvention) {
  auto p = small_elliptic();
  const EllipticModel m(p);
  const CovarianceOperator C = build_prior_covariance(p->mesh().nodes(), 1.25, 0.0625);
  SolveCounter counter;
  const WhitenedTarget t(m, C, &counter);
  ChainRecord r = run_chain(t, settings(Algorithm::pcn, 2500, 500));
  EXPECT_EQ(r.pde_solves.back(), 2501);
  EXPECT_EQ(counter.forward.load(), 2501);
  counter.reset();
  r = run_chain(t, settings(Algorithm::inf_mala, 2500, 500));
  EXPECT_EQ(r.pde_solves.back(), 5002);
  EXPECT_EQ(counter.adjoint.load(), 2501);
}

TEST(Chain, SolverFailureEndsChainIncomplete) {
  const FailingModel m(50);
  const CovarianceOperator C(line_covariance(4));
  const WhitenedTarget t(m, C);
  const ChainRecord r = run_chain(t, settings(Algorithm::pcn, 200, 20));
  EXPECT_TRUE(r.incomplete);
  EXPECT_EQ(r.iterations_done(), 49);
  EXPECT_EQ(r.samples.rows(), 29);
  EXPECT_NE(r.error.find("solver diverged"), std::string::npos);
}

TEST(Chain, TuningOnlyDuringBurnIn) {
  const LinearGaussianModel m = random_linear_model(8, 4, 4);
  const CovarianceOperator C(m.prior_cov());
  const WhitenedTarget t(m, C);
  ChainSettings s = settings(Algorithm::inf_mala, 3000, 1500);
  s.h = 3.9;
  const ChainRecord r = run_chain(t, s);
  EXPECT_NE(r.step_sizes.front(), r.step_sizes[1499]);
  for (int k = 1500; k < 3000; ++k) EXPECT_EQ(r.step_sizes[k], r.final_h);
  double acc = 0;
  for (int k = 1500; k < 3000; ++k) acc += r.accepts[k];
  EXPECT_NEAR(acc / 1500.0, 0.65, 0.15);
  s.tune = false;
  const ChainRecord fixed = run_chain(t, s);
  for (double h : fixed.step_sizes) EXPECT_EQ(h, 3.9);
}

TEST(Chain, LisFrozenAfterBurnIn) {
  auto p = small_elliptic();
  const EllipticModel m(p);
  const CovarianceOperator C = build_prior_covariance(p->mesh().nodes(), 1.25, 0.0625);
  const WhitenedTarget t(m, C);
  ChainSettings s = settings(Algorithm::adr_inf_mmala, 600, 400);
  s.lis.n_lag = 50;
  const ChainRecord r = run_chain(t, s);
  ASSERT_TRUE(r.lis.has_value());
  EXPECT_TRUE(r.lis->frozen);
  EXPECT_GE(r.lis->m, 2);
  EXPECT_LE(r.lis->m, 9);
  EXPECT_GT(r.lis->rank(), 0);
  EXPECT_LE(r.lis->spectrum.orthonormality_error(), 1e-8);
}

TEST(Chain, RejectsInvalidSettings) {
  const FlatModel m(3);
  const CovarianceOperator C(line_covariance(3));
  const WhitenedTarget t(m, C);
  EXPECT_THROW(run_chain(t, settings(Algorithm::pcn, 10, 10)), std::invalid_argument);
  ChainSettings s = settings(Algorithm::pcn, 10, 2);
  s.h = -1;
  EXPECT_THROW(run_chain(t, s), std::invalid_argument);
  s = settings(Algorithm::dili, 10, 2);
  s.h_perp = 0;
  EXPECT_THROW(run_chain(t, s), std::invalid_argument);
}
