#include "drmc/kernels.hpp"

#include "drmc/diagnostics.hpp"

#include <omp.h>

#include <exception>
#include <mutex>

namespace drmc::kernels {

namespace {

inline double kernel_entry(const Eigen::Vector2d& a, const Eigen::Vector2d& b, double var, double inv_len) {
  return var * std::exp(-(a - b).norm() * inv_len);
}

}  // namespace

int max_threads() { return omp_get_max_threads(); }

Matrix serial::exponential_kernel(const std::vector<Eigen::Vector2d>& nodes, double sigma, double s0) {
  const Index n = static_cast<Index>(nodes.size());
  const double var = sigma * sigma, inv_len = 1.0 / (2.0 * s0);
  Matrix C(n, n);
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) C(i, j) = kernel_entry(nodes[i], nodes[j], var, inv_len);
  return C;
}

Matrix exponential_kernel(const std::vector<Eigen::Vector2d>& nodes, double sigma, double s0) {
  const Index n = static_cast<Index>(nodes.size());
  const double var = sigma * sigma, inv_len = 1.0 / (2.0 * s0);
  Matrix C(n, n);
#pragma omp parallel for schedule(static)
  for (Index j = 0; j < n; ++j)
    for (Index i = 0; i < n; ++i) C(i, j) = kernel_entry(nodes[i], nodes[j], var, inv_len);
  return C;
}

Matrix serial::apply_columns(const LinearAction& op, const Matrix& X) {
  Matrix Y(X.rows(), X.cols());
  for (Index j = 0; j < X.cols(); ++j) Y.col(j) = op(X.col(j));
  return Y;
}

Matrix apply_columns(const LinearAction& op, const Matrix& X) {
  Matrix Y(X.rows(), X.cols());
  std::exception_ptr failure;
  std::mutex guard;
#pragma omp parallel for schedule(dynamic)
  for (Index j = 0; j < X.cols(); ++j) {
    try {
      Vector y = op(X.col(j));
      Y.col(j) = y;
    } catch (...) {
      std::lock_guard<std::mutex> lock(guard);
      if (!failure) failure = std::current_exception();
    }
  }
  if (failure) std::rethrow_exception(failure);
  return Y;
}

Vector serial::column_ess(const Matrix& samples) {
  Vector out(samples.cols());
  for (Index j = 0; j < samples.cols(); ++j) out[j] = ess(samples.col(j), /*warn=*/false);
  return out;
}

Vector column_ess(const Matrix& samples) {
  Vector out(samples.cols());
#pragma omp parallel for schedule(dynamic, 8)
  for (Index j = 0; j < samples.cols(); ++j) out[j] = ess(samples.col(j), /*warn=*/false);
  return out;
}

}  // namespace drmc::kernels
