#include "drmc/elliptic.hpp"
#include "drmc/kernels.hpp"

#include <gtest/gtest.h>

#include <omp.h>

#include <cstring>

using namespace drmc;

namespace {

struct Threads {
  int saved = omp_get_max_threads();
  explicit Threads(int n) { omp_set_num_threads(n); }
  ~Threads() { omp_set_num_threads(saved); }
};

}  // namespace

TEST(Kernels, ExponentialKernelBitwiseEqualToSerial) {
  Threads t(4);
  const auto nodes = Mesh2D(12, 9).nodes();
  const Matrix a = kernels::exponential_kernel(nodes, 1.25, 0.0625);
  const Matrix b = kernels::serial::exponential_kernel(nodes, 1.25, 0.0625);
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
}

TEST(Kernels, ApplyColumnsBitwiseEqualToSerial) {
  Threads t(3);
  Rng rng(1);
  Matrix A(20, 20), X(20, 11);
  for (Index j = 0; j < 20; ++j) A.col(j) = standard_normal(20, rng);
  for (Index j = 0; j < 11; ++j) X.col(j) = standard_normal(20, rng);
  const LinearAction op = [&](const Vector& x) { return Vector((A * x).array().sin()); };
  const Matrix a = kernels::apply_columns(op, X), b = kernels::serial::apply_columns(op, X);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
}

TEST(Kernels, ApplyColumnsPropagatesExceptions) {
  Threads t(2);
  const LinearAction op = [](const Vector& x) -> Vector {
    if (x[0] > 0.5) throw NumericalError("boom");
    return x;
  };
  Matrix X = Matrix::Zero(3, 4);
  X(0, 2) = 1.0;
  EXPECT_THROW(kernels::apply_columns(op, X), NumericalError);
  EXPECT_THROW(kernels::serial::apply_columns(op, X), NumericalError);
}

TEST(Kernels, ColumnEssBitwiseEqualToSerial) {
  Threads t(4);
  Rng rng(2);
  Matrix S(500, 9);
  for (Index j = 0; j < 9; ++j) S.col(j) = standard_normal(500, rng);
  for (Index i = 1; i < 500; ++i) S.row(i) += 0.5 * S.row(i - 1);
  const Vector a = kernels::column_ess(S), b = kernels::serial::column_ess(S);
  EXPECT_EQ(std::memcmp(a.data(), b.data(), sizeof(double) * a.size()), 0);
}

TEST(Kernels, ReportsThreadCount) { EXPECT_GE(kernels::max_threads(), 1); }
