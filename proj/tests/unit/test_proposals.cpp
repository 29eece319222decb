#include "drmc/bounds.hpp"
#include "drmc/linear_models.hpp"
#include "drmc/proposals.hpp"

#include "oracles.hpp"

#include <gtest/gtest.h>

#include <numbers>

using namespace drmc;

namespace {

// Leading r eigenpairs of a dense symmetric PSD matrix, descending.
LowRankSpectrum dense_spectrum(const Matrix& H, Index r) {
  const Eigen::SelfAdjointEigenSolver<Matrix> es(0.5 * (H + H.transpose()));
  const Index n = H.rows();
  Vector lam(r);
  Matrix V(n, r);
  for (Index i = 0; i < r; ++i) {
    lam[i] = std::max(0.0, es.eigenvalues()[n - 1 - i]);
    V.col(i) = es.eigenvectors().col(n - 1 - i);
  }
  return LowRankSpectrum(lam, V);
}

LowRankSpectrum random_spectrum(Index n, Index r, Rng& rng) {
  const Matrix Q = Eigen::HouseholderQR<Matrix>(oracle::random_gaussian(n, n, rng)).householderQ();
  Vector lam(r);
  for (Index i = 0; i < r; ++i) lam[i] = 5.0 * std::exp(-0.7 * double(i)) + 0.01 * double(r - i);
  return LowRankSpectrum(lam, Q.leftCols(r));
}

struct DenseGap {
  Matrix K, sqrtK;
};

// Full-rank Gaussian approximation to the whitened posterior, K = (I + H)^{-1}.
DenseGap dense_gap(const Matrix& H) {
  const Matrix I = Matrix::Identity(H.rows(), H.cols());
  DenseGap g;
  g.K = (I + H).inverse();
  g.sqrtK = oracle::sym_sqrt(g.K);
  return g;
}

}  // namespace

TEST(StepParams, Identities) {
  for (double h : {1e-6, 0.1, 0.5, 1.0, 2.0, 3.999, 4.0, 6.0, 50.0}) {
    const StepParams p = StepParams::from_h(h);
    EXPECT_NEAR(p.rho0 * p.rho0 + p.rho2 * p.rho2, 1.0, 1e-12) << h;
    EXPECT_DOUBLE_EQ(p.rho1, 1.0 - p.rho0);
    EXPECT_NEAR(std::cos(p.epsilon), p.rho0, 1e-12);
    EXPECT_NEAR(std::sin(p.epsilon), p.rho2, 1e-12);
    if (h <= 4.0) {
      EXPECT_GE(p.rho0, 0.0);
      EXPECT_LT(p.rho0, 1.0);
    }
  }
  EXPECT_EQ(StepParams::from_h(4.0).rho0, 0.0);
  EXPECT_THROW(StepParams::from_h(0.0), std::invalid_argument);
  EXPECT_THROW(StepParams::from_h(-1.0), std::invalid_argument);
  EXPECT_THROW(StepParams::from_h(1.0, true, false, 0), std::invalid_argument);
  EXPECT_DOUBLE_EQ(StepParams::from_h(1.0, true, false, 3, 0.25).epsilon, 0.25);
}

TEST(Pcn, Limits) {
  Rng rng(1);
  const Vector v = standard_normal(6, rng), xi = standard_normal(6, rng);
  EXPECT_LE((pcn_propose(v, StepParams::from_h(1e-14), xi) - v).norm(), 1e-6);
  EXPECT_EQ(pcn_propose(v, StepParams::from_h(4.0), xi), xi);
}

TEST(Pcn, VarianceMatchesAutoregression) {
  Rng rng(2);
  const StepParams p = StepParams::from_h(1.0);
  const double var_v = 2.5;
  double s2 = 0;
  const int N = 10000;
  for (int k = 0; k < N; ++k) {
    Vector v(1);
    v[0] = std::sqrt(var_v) * standard_normal(1, rng)[0];
    const double x = pcn_propose(v, p, rng)[0];
    s2 += x * x;
  }
  const double expected = p.rho0 * p.rho0 * var_v + 1.0 - p.rho0 * p.rho0;
  EXPECT_NEAR(s2 / N, expected, 0.05 * expected);
}

TEST(InfMala, Limits) {
  Rng rng(3);
  const Vector v = standard_normal(5, rng), xi = standard_normal(5, rng), g = standard_normal(5, rng);
  const StepParams p = StepParams::from_h(0.7);
  EXPECT_EQ(inf_mala_propose(v, Vector::Zero(5), p, xi), pcn_propose(v, p, xi));
  EXPECT_LE((inf_mala_propose(v, g, StepParams::from_h(4.0), xi) - (xi - g)).norm(), 1e-15);
}

TEST(InfMala, DriftMovesTowardPosteriorMean) {
  const LinearGaussianModel m = random_linear_model(8, 5, 4, 0.2);
  const CovarianceOperator C(m.prior_cov());
  const GaussianPosterior post = analytic_posterior(m);
  const Vector mu_w = C.apply_inv_sqrt(post.mean);
  const Matrix Hw = C.sqrt_matrix() * m.gnh() * C.sqrt_matrix();
  const double lam_max = Eigen::SelfAdjointEigenSolver<Matrix>(Hw).eigenvalues().maxCoeff();
  // A kick small against the largest curvature keeps the drift from overshooting.
  const StepParams p = StepParams::from_h(1.0 / lam_max);
  Rng rng(5);
  double d_pcn = 0, d_mala = 0;
  for (int k = 0; k < 2000; ++k) {
    const Vector v = standard_normal(8, rng), xi = standard_normal(8, rng);
    const Vector grad = C.apply_sqrt(m.gradient(C.apply_sqrt(v)));
    d_pcn += (pcn_propose(v, p, xi) - mu_w).norm();
    d_mala += (inf_mala_propose(v, grad, p, xi) - mu_w).norm();
  }
  EXPECT_LT(d_mala, d_pcn);
}

TEST(WhitenedNgrad, Examples) {
  Rng rng(6);
  const Index n = 7, r = 3;
  const LowRankSpectrum base = random_spectrum(n, r, rng);
  const Matrix& V = base.basis();
  const Vector v = standard_normal(n, rng), g = standard_normal(n, rng);
  const LowRankSpectrum zero(Vector::Zero(r), V);
  EXPECT_LE((whitened_ngrad(v, g, zero, true, false) + V * V.transpose() * g).norm(), 1e-14);
  const Vector vin = V * standard_normal(r, rng);
  const Vector expect = V * base.d().cwiseProduct(base.eigenvalues().cwiseProduct(V.transpose() * vin));
  EXPECT_LE((whitened_ngrad(vin, Vector::Zero(n), base, true, false) - expect).norm(), 1e-14);
  const Vector with_perp = whitened_ngrad(v, g, base, true, true);
  const Vector perp = g - V * (V.transpose() * g);
  EXPECT_LE((with_perp - whitened_ngrad(v, g, base, true, false) + perp).norm(), 1e-13);
}

TEST(WhitenedNgrad, FullRankMatchesDense) {
  Rng rng(7);
  const Index n = 6;
  const Matrix H = oracle::random_psd(n, n, rng);
  const LowRankSpectrum s = dense_spectrum(H, n);
  const DenseGap gap = dense_gap(H);
  const Matrix I = Matrix::Identity(n, n);
  for (bool gamma_r : {false, true}) {
    const Vector v = standard_normal(n, rng), g = standard_normal(n, rng);
    const Vector dense = (I - gap.K) * v - gap.K * (gamma_r ? g : Vector::Zero(n));
    EXPECT_LE((whitened_ngrad(v, g, s, gamma_r, false) - dense).norm(), 1e-9);
  }
}

TEST(DrMmala, UninformedSubspaceIsPcn) {
  Rng rng(8);
  const LowRankSpectrum s(Vector::Zero(3), random_spectrum(6, 3, rng).basis());
  const StepParams p = StepParams::from_h(0.9, false, false);
  const Vector v = standard_normal(6, rng), g = standard_normal(6, rng), xi = standard_normal(6, rng);
  EXPECT_LE((dr_mmala_propose(v, g, s, p, xi) - pcn_propose(v, p, xi)).norm(), 1e-14);
}

TEST(DrMmala, StepFourSubstitution) {
  Rng rng(9);
  const LowRankSpectrum s = random_spectrum(6, 3, rng);
  const StepParams p = StepParams::from_h(4.0, true, true);
  const Vector v = standard_normal(6, rng), g = standard_normal(6, rng), xi = standard_normal(6, rng);
  const Matrix& V = s.basis();
  const Vector dm1 = s.d().array() - 1.0;
  const Vector expect = -V * dm1.cwiseProduct(V.transpose() * v) - apply_K_hat(g, s) + apply_sqrtK_hat(xi, s);
  EXPECT_LE((dr_mmala_propose(v, g, s, p, xi) - expect).norm(), 1e-13);
}

TEST(DrMmala, FullRankMatchesDense) {
  Rng rng(10);
  const Index n = 8;
  const Matrix H = oracle::random_psd(n, n, rng);
  const LowRankSpectrum s = dense_spectrum(H, n);
  const DenseGap gap = dense_gap(H);
  const Matrix I = Matrix::Identity(n, n);
  for (double h : {0.3, 1.5, 4.0}) {
    const StepParams p = StepParams::from_h(h, true, false);
    const Vector v = standard_normal(n, rng), g = standard_normal(n, rng), xi = standard_normal(n, rng);
    const Vector drift = (I - gap.K) * v - gap.K * g;
    const Vector dense = p.rho0 * v + p.rho1 * drift + p.rho2 * gap.sqrtK * xi;
    EXPECT_LE((dr_mmala_propose(v, g, s, p, xi) - dense).norm(), 1e-9) << h;
  }
}

TEST(Dili, ComplementRefresh) {
  Rng rng(11);
  const DiliOperators ops = dili_operators(random_spectrum(5, 2, rng), 1.0, 2.0, false);
  EXPECT_EQ(ops.a_perp, 0.0);
  EXPECT_DOUBLE_EQ(ops.b_perp, 1.0);
  EXPECT_THROW(dili_operators(random_spectrum(5, 2, rng), 0.0, 1.0, false), std::invalid_argument);
  EXPECT_THROW(dili_operators(random_spectrum(5, 2, rng), 1.0, -1.0, false), std::invalid_argument);
}

TEST(Dili, HandEvaluatedCoefficients) {
  Matrix V = Matrix::Zero(3, 1);
  V(0, 0) = 1.0;
  const DiliOperators ops = dili_operators(LowRankSpectrum(Vector::Ones(1), V), 1.0, 1.0, false);
  EXPECT_NEAR(ops.dA[0], 0.6, 1e-15);
  EXPECT_NEAR(ops.dB[0], 0.8, 1e-15);
  EXPECT_EQ(ops.dG[0], 0.0);
  // Without the gradient term the subspace move is an exact rotation, dA² + dB² = 1.
  for (double lam : {0.0, 0.3, 3.0, 40.0})
    for (double h : {0.1, 0.7, 2.0, 9.0}) {
      const DiliOperators o = dili_operators(LowRankSpectrum(Vector::Constant(1, lam), V), h, 1.0, false);
      EXPECT_NEAR(o.dA[0] * o.dA[0] + o.dB[0] * o.dB[0], 1.0, 1e-14);
      const DiliOperators g = dili_operators(LowRankSpectrum(Vector::Constant(1, lam), V), h, 1.0, true);
      EXPECT_NEAR(g.dG[0], h / (1.0 + lam), 1e-14);
    }
}

TEST(Dili, ConnectionReproducesLowRankLangevin) {
  Rng rng(12);
  for (int t = 0; t < 100; ++t) {
    const Index n = 4 + t % 7, r = 1 + t % 3;
    const LowRankSpectrum s = random_spectrum(n, r, rng);
    const StepParams p = StepParams::from_h(0.1 + 0.05 * t, t % 2 == 0, false);
    const Vector v = standard_normal(n, rng), g = standard_normal(n, rng), xi = standard_normal(n, rng);
    const Vector a = dili_propose(v, g, dili_connection(s, p), xi);
    const Vector b = dr_mmala_propose(v, g, s, p, xi);
    EXPECT_LE((a - b).norm(), 1e-10) << "trial " << t;
  }
}

TEST(Dili, EmpiricalWithPosteriorDiagonalIsConnection) {
  Rng rng(13);
  const LowRankSpectrum s = random_spectrum(6, 3, rng);
  const StepParams p = StepParams::from_h(0.8);
  const Vector v = standard_normal(6, rng), g = standard_normal(6, rng), xi = standard_normal(6, rng);
  const Matrix K_r = s.d().asDiagonal();
  EXPECT_LE((dili_propose(v, g, dili_empirical(s, K_r, p), xi) - dr_mmala_propose(v, g, s, p, xi)).norm(), 1e-12);
  EXPECT_THROW(dili_empirical(s, -Matrix::Identity(3, 3), p), NumericalError);
}

TEST(Leapfrog, PureRotationIsIsometry) {
  Rng rng(14);
  const DriftField zero = [](const Vector& x) { return Vector::Zero(x.size()); };
  const Vector v = standard_normal(9, rng), vt = standard_normal(9, rng);
  for (double eps : {0.1, 0.7, 1.9}) {
    const LeapfrogResult r = hmc_leapfrog(v, vt, zero, eps);
    EXPECT_NEAR(r.v.squaredNorm() + r.vt.squaredNorm(), v.squaredNorm() + vt.squaredNorm(), 1e-12);
  }
  const LeapfrogResult full = hmc_leapfrog(v, vt, zero, 2.0 * std::numbers::pi);
  EXPECT_LE((full.v - v).norm(), 1e-12);
  EXPECT_LE((full.vt - vt).norm(), 1e-12);
  EXPECT_THROW(hmc_leapfrog(v, vt, zero, 0.0), std::invalid_argument);
}

TEST(Leapfrog, ReversibleUnderMomentumFlip) {
  Rng rng(15);
  const Index n = 6;
  const Matrix H = oracle::random_psd(n, 3, rng);
  const LowRankSpectrum s = dense_spectrum(H, 3);
  const Vector b = standard_normal(n, rng);
  const DriftField g = [&](const Vector& x) { return whitened_ngrad(x, H * x - b, s, true, true); };
  const Vector v = standard_normal(n, rng), vt = standard_normal(n, rng);
  const LeapfrogResult fwd = hmc_leapfrog(v, vt, g, 0.4);
  const LeapfrogResult back = hmc_leapfrog(fwd.v, -fwd.vt, g, 0.4);
  EXPECT_LE((back.v - v).norm(), 1e-9);
  EXPECT_LE((-back.vt - vt).norm(), 1e-9);
}

TEST(Leapfrog, NonFiniteAborts) {
  const DriftField bad = [](const Vector& x) {
    return Vector::Constant(x.size(), std::numeric_limits<double>::infinity());
  };
  EXPECT_FALSE(hmc_leapfrog(Vector::Ones(3), Vector::Ones(3), Vector::Zero(3), bad, 0.5).finite);
}

namespace {

struct LinearFixture {
  LinearGaussianModel model = random_linear_model(6, 6, 19, 0.5);
  CovarianceOperator cov{model.prior_cov()};
  WhitenedTarget target{model, cov};
  Matrix Hw = cov.sqrt_matrix() * model.gnh() * cov.sqrt_matrix();
  std::shared_ptr<const LowRankSpectrum> spec = std::make_shared<LowRankSpectrum>(dense_spectrum(Hw, 6));

  State eval(const Vector& v) const {
    State s = target.evaluate(v, true);
    s.spec = spec;
    return s;
  }
};

}  // namespace

TEST(Hmc, FullRankTrajectoryMatchesDenseFlow) {
  const LinearFixture f;
  const Index n = 6;
  const DenseGap gap = dense_gap(f.Hw);
  const Matrix I = Matrix::Identity(n, n);
  Rng rng(20);
  const StepParams p = StepParams::from_h(0.5, true, false, 5);
  const State start = f.eval(standard_normal(n, rng));
  const Vector xi = standard_normal(n, rng);
  const HmcProposal traj =
      dr_mhmc_trajectory(start, gap.sqrtK * xi, [&](const Vector& v) { return f.eval(v); }, p);
  ASSERT_FALSE(traj.diverged);
  ASSERT_EQ(traj.points.size(), 6u);
  const auto dense_g = [&](const Vector& v) {
    const Vector grad = f.cov.apply_sqrt(f.model.gradient(f.cov.apply_sqrt(v)));
    return Vector((I - gap.K) * v - gap.K * grad);
  };
  Vector v = start.v, vt = gap.sqrtK * xi;
  const double c = std::cos(p.epsilon), s = std::sin(p.epsilon);
  for (int i = 1; i <= 5; ++i) {
    const Vector half = vt + 0.5 * p.epsilon * dense_g(v);
    const Vector vn = c * v + s * half;
    vt = -s * v + c * half + 0.5 * p.epsilon * dense_g(vn);
    v = vn;
    EXPECT_LE((traj.points[i].v - v).norm(), 1e-8) << "step " << i;
    EXPECT_LE((traj.points[i].vt - vt).norm(), 1e-8) << "step " << i;
  }
}

TEST(Hmc, SingleStepMatchesLangevinToSecondOrder) {
  const LinearFixture f;
  Rng rng(21);
  for (double h : {0.01, 0.04, 0.16}) {
    const StepParams p = StepParams::from_h(h, true, false, 1);
    const State start = f.eval(standard_normal(6, rng));
    const Vector xi = standard_normal(6, rng);
    const HmcProposal traj =
        dr_mhmc_trajectory(start, apply_sqrtK_hat(xi, *f.spec), [&](const Vector& v) { return f.eval(v); }, p);
    const Vector lang = dr_mmala_propose(start.v, start.grad, *f.spec, p, xi);
    EXPECT_LE((traj.end.v - lang).norm(), 10.0 * p.epsilon * p.epsilon) << h;
  }
}

TEST(Hmc, DivergenceIsFlagged) {
  const LinearFixture f;
  const StepParams p = StepParams::from_h(1.0, true, false, 2);
  const State start = f.eval(Vector::Ones(6));
  const HmcProposal traj =
      dr_mhmc_trajectory(start, Vector::Constant(6, 1e9), [&](const Vector& v) { return f.eval(v); }, p, 1e6);
  EXPECT_TRUE(traj.diverged);
}

TEST(Bounds, TruncationBoundHoldsOnRandomDraws) {
  const LinearGaussianModel m = random_linear_model(20, 8, 23, 0.3);
  BoundOptions o;
  o.trials = 200;
  const BoundReport rep = bound_report(m, o);
  EXPECT_EQ(rep.violations, 0);
  int truncation = 0, empirical = 0;
  for (const BoundTrial& t : rep.trials) {
    truncation += t.kind == BoundKind::truncation;
    empirical += t.kind == BoundKind::empirical;
  }
  EXPECT_EQ(truncation, 400);
  EXPECT_EQ(empirical, 400);
}

TEST(Bounds, TrajectoryRatioStaysBounded) {
  const LinearGaussianModel m = random_linear_model(20, 8, 29, 0.3);
  BoundOptions o;
  o.trials = 5;
  const BoundReport rep = bound_report(m, o);
  ASSERT_FALSE(rep.trajectory_ratio_by_rank.empty());
  const double first = rep.trajectory_ratio_by_rank.front();
  for (double r : rep.trajectory_ratio_by_rank) EXPECT_LE(r, 10.0 * std::max(first, 1.0));
}

TEST(Bounds, ZeroTruncationAtFullRank) {
  const BoundCoefficients c = truncation_bound_coefficients(0.0, true, StepParams::from_h(1.0));
  EXPECT_EQ(c.state, 0.0);
  EXPECT_EQ(c.gradient, 0.0);
  EXPECT_EQ(c.noise, 0.0);
  EXPECT_GT(truncation_bound_coefficients(0.0, false, StepParams::from_h(1.0)).gradient, 0.0);
}
