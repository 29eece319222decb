#pragma once

#include "drmc/covariance.hpp"
#include "drmc/model.hpp"
#include "drmc/spectrum.hpp"

#include <memory>

namespace drmc {

/// State of a chain in whitened coordinates, with the model point that
/// produced it so gradients and GNH actions reuse the forward solve.
struct State {
  Vector v;
  double phi = 0.0;
  Vector grad;  // gradient in v; empty until requested
  std::shared_ptr<ModelPoint> point;
  std::shared_ptr<const LowRankSpectrum> spec;  // set by geometric kernels

  bool has_grad() const { return grad.size() == v.size(); }
};

/// The misfit viewed in whitened coordinates, Phi(v) = Phi(S v).
class WhitenedTarget {
 public:
  WhitenedTarget(const ForwardModel& model, const CovarianceOperator& cov,
                 SolveCounter* counter = nullptr);

  Index dim() const { return cov_->dim(); }
  const CovarianceOperator& covariance() const { return *cov_; }
  const ForwardModel& model() const { return *model_; }
  SolveCounter* counter() const { return counter_; }

  /// Forward solve at u = S v. With `with_grad` also the adjoint solve.
  State evaluate(const Vector& v, bool with_grad) const;
  /// Fills state.grad = S grad_u Phi when missing.
  void ensure_gradient(State& state) const;
  /// Whitened GNH action w -> S H(u) S w at the state's point.
  LinearAction whitened_gnh(const State& state) const;

 private:
  const ForwardModel* model_;
  const CovarianceOperator* cov_;
  SolveCounter* counter_;
};

}  // namespace drmc
