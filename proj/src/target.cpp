#include "drmc/target.hpp"

#include <stdexcept>

namespace drmc {

WhitenedTarget::WhitenedTarget(const ForwardModel& model, const CovarianceOperator& cov, SolveCounter* counter)
    : model_(&model), cov_(&cov), counter_(counter) {
  if (model.dim() != cov.dim()) throw std::invalid_argument("model and prior dimensions differ");
}

State WhitenedTarget::evaluate(const Vector& v, bool with_grad) const {
  State s;
  s.v = v;
  s.point = std::shared_ptr<ModelPoint>(model_->evaluate(cov_->apply_sqrt(v), counter_));
  s.phi = s.point->potential();
  if (with_grad) ensure_gradient(s);
  return s;
}

void WhitenedTarget::ensure_gradient(State& state) const {
  if (state.has_grad()) return;
  state.grad = cov_->apply_sqrt(state.point->gradient());
}

LinearAction WhitenedTarget::whitened_gnh(const State& state) const {
  auto point = state.point;
  const CovarianceOperator* cov = cov_;
  return [point, cov](const Vector& w) { return cov->apply_sqrt(point->gnh(cov->apply_sqrt(w))); };
}

}  // namespace drmc
