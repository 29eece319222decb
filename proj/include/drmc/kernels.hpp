#pragma once

// Data-parallel kernels. Each OpenMP kernel has a serial twin in
// drmc::kernels::serial that produces bitwise identical output; the
// parallel versions only partition independent outputs across threads.

#include "drmc/types.hpp"

#include <atomic>
#include <vector>

namespace drmc::kernels {

/// Dense exponential kernel matrix sigma² exp(-|s_i - s_j| / (2 s0)).
Matrix exponential_kernel(const std::vector<Eigen::Vector2d>& nodes,
                          double sigma, double s0);

/// Applies `op` to every column of X. `op` must be safe to call
/// concurrently from several threads.
Matrix apply_columns(const LinearAction& op, const Matrix& X);

/// Effective sample size of every column of `samples` (rows = draws).
Vector column_ess(const Matrix& samples);

namespace serial {
Matrix exponential_kernel(const std::vector<Eigen::Vector2d>& nodes,
                          double sigma, double s0);
Matrix apply_columns(const LinearAction& op, const Matrix& X);
Vector column_ess(const Matrix& samples);
}  // namespace serial

/// Number of threads the parallel kernels will use.
int max_threads();

}  // namespace drmc::kernels
