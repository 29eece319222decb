#include "drmc/diagnostics.hpp"
#include "drmc/linear_models.hpp"
#include "drmc/sampler.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

using namespace drmc;

TEST(LinearGaussian, NoInformationGivesPrior) {
  const Matrix C = line_covariance(6);
  const LinearGaussianModel m(Matrix::Zero(3, 6), Matrix::Identity(3, 3), C, Vector::Ones(3));
  const GaussianPosterior post = analytic_posterior(m);
  EXPECT_LE(post.mean.norm(), 1e-12);
  EXPECT_LE((post.covariance - C).norm(), 1e-10 * C.norm());
}

TEST(LinearGaussian, ConjugateIdentityCase) {
  const Vector y = (Vector(3) << 1.0, -2.0, 0.5).finished();
  const Matrix I = Matrix::Identity(3, 3);
  const GaussianPosterior post = analytic_posterior(LinearGaussianModel(I, I, I, y));
  EXPECT_LE((post.mean - 0.5 * y).norm(), 1e-14);
  EXPECT_LE((post.covariance - 0.5 * I).norm(), 1e-14);
}

TEST(LinearGaussian, PosteriorFormula) {
  const LinearGaussianModel m = random_linear_model(8, 5, 3);
  const GaussianPosterior post = analytic_posterior(m);
  const Matrix P = m.prior_cov().inverse() + m.A().transpose() * m.noise_cov().inverse() * m.A();
  const Matrix K = P.inverse();
  EXPECT_LE((post.covariance - K).norm(), 1e-10 * K.norm());
  const Vector mu = K * m.A().transpose() * m.noise_cov().inverse() * m.data();
  EXPECT_LE((post.mean - mu).norm(), 1e-10 * mu.norm());
  const Eigen::SelfAdjointEigenSolver<Matrix> es(post.covariance);
  EXPECT_GT(es.eigenvalues().minCoeff(), 0.0);
}

TEST(LinearGaussian, LogPosteriorGradientVanishesAtMean) {
  const LinearGaussianModel m = random_linear_model(16, 4, 5);
  const GaussianPosterior post = analytic_posterior(m);
  const Vector full = m.gradient(post.mean) + m.prior_cov().ldlt().solve(post.mean);
  EXPECT_LE(full.norm(), 1e-8 * std::max(1.0, m.gradient(post.mean).norm()));
}

TEST(LinearGaussian, ZeroDataAtOrigin) {
  const LinearGaussianModel base = random_linear_model(8, 4, 7);
  const LinearGaussianModel m(base.A(), base.noise_cov(), base.prior_cov(), Vector::Zero(4));
  EXPECT_EQ(m.potential(Vector::Zero(8)), 0.0);
  EXPECT_EQ(m.gradient(Vector::Zero(8)), Vector::Zero(8));
}

TEST(LinearGaussian, CallbacksMatchFormulasAndDifferences) {
  const LinearGaussianModel m = random_linear_model(8, 5, 9);
  Rng rng(1);
  const Vector u = standard_normal(8, rng);
  const Matrix Si = m.noise_cov().inverse();
  const Vector r = m.A() * u - m.data();
  EXPECT_NEAR(m.potential(u), 0.5 * r.dot(Si * r), 1e-12 * std::max(1.0, m.potential(u)));
  EXPECT_LE((m.gradient(u) - m.A().transpose() * Si * r).norm(), 1e-10);
  EXPECT_LE((m.gnh() - m.A().transpose() * Si * m.A()).norm(), 1e-10);
  for (int d = 0; d < 10; ++d) {
    const Vector w = standard_normal(8, rng).normalized();
    const double eps = 1e-4;
    const double fd = (m.potential(u + eps * w) - m.potential(u - eps * w)) / (2 * eps);
    EXPECT_NEAR(fd, m.gradient(u).dot(w), 1e-8 * std::max(1.0, std::abs(fd)));
  }
  SolveCounter c;
  auto pt = m.evaluate(u, &c);
  EXPECT_LE((pt->gnh(oracle::unit(8, 2)) - m.gnh().col(2)).norm(), 1e-12);
  EXPECT_EQ(c.forward.load(), 1);
  EXPECT_EQ(c.incremental.load(), 1);
}

TEST(LinearGaussian, PcnChainMatchesPosteriorMoments) {
  const LinearGaussianModel m = random_linear_model(8, 5, 13);
  const GaussianPosterior post = analytic_posterior(m);
  const CovarianceOperator C(m.prior_cov());
  const WhitenedTarget target(m, C);
  ChainSettings s;
  s.algorithm = Algorithm::pcn;
  s.iterations = 60000;
  s.burn_in = 5000;
  s.seed = 17;
  s.h = 0.3;
  s.tune = true;
  const ChainRecord rec = run_chain(target, s);
  for (Index i = 0; i < 8; ++i) {
    const Vector x = rec.samples.col(i);
    const double se = std::sqrt(post.covariance(i, i) / ess(x));
    EXPECT_LE(std::abs(rec.mean[i] - post.mean[i]), 3.5 * se) << "coordinate " << i;
  }
}

TEST(WarpedModel, GnhMatchesJacobian) {
  Rng rng(3);
  const Matrix A = oracle::random_gaussian(4, 6, rng);
  const WarpedLinearModel m(A, 0.2, Vector::Zero(4), 0.5);
  const Vector u = standard_normal(6, rng);
  Matrix J(4, 6);
  for (Index j = 0; j < 6; ++j) {
    const double eps = 1e-6;
    const Vector e = oracle::unit(6, j);
    J.col(j) = (m.forward(u + eps * e) - m.forward(u - eps * e)) / (2 * eps);
  }
  EXPECT_LE((m.gnh(u) - J.transpose() * J / 0.04).norm(), 1e-6 * m.gnh(u).norm());
  EXPECT_GT((m.gnh(u) - m.gnh(Vector::Zero(6))).norm(), 1e-3);
  auto pt = m.evaluate(u, nullptr);
  EXPECT_LE((pt->gnh(oracle::unit(6, 1)) - m.gnh(u).col(1)).norm(), 1e-10);
}

TEST(FlatModel, IsIdenticallyZero) {
  const FlatModel f(5);
  auto pt = f.evaluate(Vector::Ones(5), nullptr);
  EXPECT_EQ(pt->potential(), 0.0);
  EXPECT_EQ(pt->gradient(), Vector::Zero(5));
  EXPECT_EQ(pt->gnh(Vector::Ones(5)), Vector::Zero(5));
}
