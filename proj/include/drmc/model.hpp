#pragma once

#include "drmc/types.hpp"

#include <atomic>
#include <memory>

namespace drmc {

/// Number of linear solves performed, by kind. Safe to bump concurrently.
struct SolveCounter {
  std::atomic<long> forward{0};
  std::atomic<long> adjoint{0};
  std::atomic<long> incremental{0};

  long total() const { return forward + adjoint + incremental; }
  void reset() { forward = 0; adjoint = 0; incremental = 0; }
};

/// Forward model evaluated at one parameter u (original coordinates).
///
/// Holds whatever the model needs to produce the gradient and GNH actions
/// at the same u without repeating the forward solve.
class ModelPoint {
 public:
  virtual ~ModelPoint() = default;
  /// Data misfit 1/2 |y - G(u)|²_Sigma.
  virtual double potential() const = 0;
  /// Gradient of the misfit; cached after the first call.
  virtual const Vector& gradient() = 0;
  /// GNH action J(u)ᵀ Sigma^{-1} J(u) w. Safe to call concurrently.
  virtual Vector gnh(const Vector& w) const = 0;
};

/// Misfit functional Phi(u) with adjoint derivatives.
class ForwardModel {
 public:
  virtual ~ForwardModel() = default;
  virtual Index dim() const = 0;
  virtual Index num_observations() const = 0;
  /// Evaluates the model at u. Solves are tallied into `counter` if given.
  virtual std::unique_ptr<ModelPoint> evaluate(
      const Vector& u, SolveCounter* counter = nullptr) const = 0;
};

}  // namespace drmc
