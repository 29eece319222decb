#include "drmc/sampler.hpp"

#include "drmc/acceptance.hpp"

#include <Eigen/Eigenvalues>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <memory>
#include <stdexcept>

namespace drmc {

namespace {

struct AlgorithmName {
  Algorithm algorithm;
  const char* name;
};

constexpr AlgorithmName kNames[] = {
    {Algorithm::pcn, "pcn"},
    {Algorithm::inf_mala, "inf-mala"},
    {Algorithm::inf_hmc, "inf-hmc"},
    {Algorithm::dr_inf_mmala, "dr-inf-mmala"},
    {Algorithm::dr_inf_mhmc, "dr-inf-mhmc"},
    {Algorithm::dili, "dili"},
    {Algorithm::adr_inf_mmala, "adr-inf-mmala"},
    {Algorithm::adr_inf_mhmc, "adr-inf-mhmc"},
};

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

}  // namespace

std::string to_string(Algorithm a) {
  for (const auto& n : kNames)
    if (n.algorithm == a) return n.name;
  return "unknown";
}

Algorithm parse_algorithm(const std::string& name) {
  for (const auto& n : kNames)
    if (name == n.name) return n.algorithm;
  throw std::invalid_argument("unknown algorithm '" + name + "'");
}

const std::vector<Algorithm>& all_algorithms() {
  static const std::vector<Algorithm> all = [] {
    std::vector<Algorithm> v;
    for (const auto& n : kNames) v.push_back(n.algorithm);
    return v;
  }();
  return all;
}

bool uses_local_spectrum(Algorithm a) { return a == Algorithm::dr_inf_mmala || a == Algorithm::dr_inf_mhmc; }
bool uses_global_lis(Algorithm a) {
  return a == Algorithm::dili || a == Algorithm::adr_inf_mmala || a == Algorithm::adr_inf_mhmc;
}
bool uses_leapfrog(Algorithm a) {
  return a == Algorithm::inf_hmc || a == Algorithm::dr_inf_mhmc || a == Algorithm::adr_inf_mhmc;
}
bool uses_gradient(Algorithm a) { return a != Algorithm::pcn; }

namespace {

class ChainRunner {
 public:
  ChainRunner(const WhitenedTarget& target, const ChainSettings& cfg)
      : target_(target), cfg_(cfg), rng_(cfg.seed), empty_(std::make_shared<const LowRankSpectrum>(target.dim())) {
    if (cfg.iterations <= cfg.burn_in || cfg.burn_in < 0) throw std::invalid_argument("iterations must exceed burn-in >= 0");
    if (cfg.lis.n_lag < 1 || cfg.lis.m_max < 1) throw std::invalid_argument("n_lag and m_max must be positive");
    h_ = cfg.h;
    h_r_ = cfg.h_r;
    h_perp_ = cfg.h_perp;
    StepParams::from_h(h_, cfg.gamma_r, cfg.gamma_perp, cfg.leapfrog_steps, cfg.epsilon);
    if (cfg.algorithm == Algorithm::dili) dili_operators(LowRankSpectrum(target.dim()), h_r_, h_perp_, cfg.gamma_r);
  }

  ChainRecord run() {
    const auto t0 = Clock::now();
    const Algorithm a = cfg_.algorithm;
    const Index n = target_.dim();
    rec_.algorithm = a;
    rec_.dim = n;
    rec_.burn_in = cfg_.burn_in;
    const int kept = cfg_.iterations - cfg_.burn_in;
    if (cfg_.store_samples) rec_.samples.resize(kept, n);
    Vector sum = Vector::Zero(n);

    try {
      const Vector v0 = cfg_.prior_init ? standard_normal(n, rng_) : Vector::Zero(n);
      cur_ = target_.evaluate(v0, uses_gradient(a));
      attach_spectrum(cur_);
      if (uses_global_lis(a)) {
        lis_ = LisState(n, cfg_.lis);
        *lis_ = merge_lis(*lis_, local_spectrum(cur_, target_, cfg_.lis_local, cfg_.eig));
        if (cfg_.burn_in == 0) lis_->frozen = true;
        refresh_global();
      }
    } catch (const std::exception& e) {
      rec_.incomplete = true;
      rec_.error = std::string("initial state: ") + e.what();
      rec_.total_seconds = seconds_since(t0);
      return std::move(rec_);
    }
    rec_.initial_solves = solves();

    for (int it = 0; it < cfg_.iterations; ++it) {
      const auto ti = Clock::now();
      double log_ratio = 0.0;
      AcceptDecision d;
      try {
        State prop;
        log_ratio = propose(prop);
        d = metropolis_decide(log_ratio, rng_);
        if (d.accept) cur_ = std::move(prop);
        if (it < cfg_.burn_in) adapt(it, log_ratio);
      } catch (const NumericalError& e) {
        rec_.incomplete = true;
        rec_.error = "iteration " + std::to_string(it) + ": " + e.what();
        break;
      }
      const double alpha = std::isnan(log_ratio) ? 0.0 : std::min(1.0, std::exp(std::min(0.0, log_ratio)));
      rec_.potentials.push_back(cur_.phi);
      rec_.accepts.push_back(d.accept ? 1 : 0);
      rec_.accept_probs.push_back(alpha);
      rec_.step_sizes.push_back(cfg_.algorithm == Algorithm::dili ? h_r_ : h_);
      rec_.pde_solves.push_back(solves());
      if (it >= cfg_.burn_in) {
        const Vector u = target_.covariance().apply_sqrt(cur_.v);
        sum += u;
        if (cfg_.store_samples) rec_.samples.row(it - cfg_.burn_in) = u.transpose();
      }
      rec_.wall_times.push_back(seconds_since(ti));
    }

    const Index done = std::max<Index>(0, rec_.iterations_done() - cfg_.burn_in);
    if (cfg_.store_samples && done < kept) rec_.samples.conservativeResize(done, n);
    rec_.mean = done > 0 ? Vector(sum / double(done)) : Vector::Zero(n);
    rec_.final_h = h_;
    rec_.final_h_r = h_r_;
    rec_.final_h_perp = h_perp_;
    rec_.lis = lis_;
    rec_.total_seconds = seconds_since(t0);
    return std::move(rec_);
  }

 private:
  long solves() const { return target_.counter() ? target_.counter()->total() : 0; }

  StepParams params() const {
    const Algorithm a = cfg_.algorithm;
    const bool perp = a == Algorithm::inf_hmc ? true : cfg_.gamma_perp;
    return StepParams::from_h(h_, cfg_.gamma_r, perp, uses_leapfrog(a) ? cfg_.leapfrog_steps : 1, cfg_.epsilon);
  }

  void attach_spectrum(State& s) {
    const Algorithm a = cfg_.algorithm;
    if (uses_local_spectrum(a)) {
      s.spec = std::make_shared<const LowRankSpectrum>(local_spectrum(s, target_, cfg_.local, cfg_.eig));
    } else if (uses_global_lis(a)) {
      s.spec = global_;
    } else {
      s.spec = empty_;
    }
  }

  void refresh_global() {
    global_ = std::make_shared<const LowRankSpectrum>(lis_->spectrum);
    cur_.spec = global_;
    dili_ops_.reset();
    emp_cov_.reset();
    emp_count_ = 0;
    emp_sum_ = Vector::Zero(global_->rank());
    emp_outer_ = Matrix::Zero(global_->rank(), global_->rank());
  }

  const DiliOperators& dili_ops() {
    if (!dili_ops_) {
      if (emp_cov_) {
        const Eigen::SelfAdjointEigenSolver<Matrix> eig(*emp_cov_);
        dili_ops_ = dili_operators(global_->basis() * eig.eigenvectors(), eig.eigenvalues(), h_r_, h_perp_,
                                   cfg_.gamma_r);
      } else {
        dili_ops_ = dili_operators(*global_, h_r_, h_perp_, cfg_.gamma_r);
      }
    }
    return *dili_ops_;
  }

  double propose(State& prop) {
    const Algorithm a = cfg_.algorithm;
    const StepParams p = params();
    switch (a) {
      case Algorithm::pcn: {
        prop = target_.evaluate(pcn_propose(cur_.v, p, rng_), false);
        prop.spec = empty_;
        return pcn_log_ratio(cur_.phi, prop.phi);
      }
      case Algorithm::inf_mala: {
        prop = target_.evaluate(inf_mala_propose(cur_.v, cur_.grad, p, rng_), true);
        prop.spec = empty_;
        return inf_mala_log_ratio(cur_.v, prop.v, cur_.phi, prop.phi, cur_.grad, prop.grad, p);
      }
      case Algorithm::dr_inf_mmala:
      case Algorithm::adr_inf_mmala: {
        prop = target_.evaluate(dr_mmala_propose(cur_.v, cur_.grad, *cur_.spec, p, rng_), true);
        attach_spectrum(prop);
        return dr_mmala_log_ratio(cur_, prop, p);
      }
      case Algorithm::dili: {
        const DiliOperators& ops = dili_ops();
        prop = target_.evaluate(dili_propose(cur_.v, cur_.grad, ops, rng_), true);
        attach_spectrum(prop);
        return dili_log_ratio(cur_.v, prop.v, cur_.phi, prop.phi, cur_.grad, prop.grad, ops, ops);
      }
      case Algorithm::inf_hmc:
      case Algorithm::dr_inf_mhmc:
      case Algorithm::adr_inf_mhmc: {
        const StateEvaluator eval = [&](const Vector& x) {
          State s = target_.evaluate(x, true);
          attach_spectrum(s);
          return s;
        };
        HmcProposal traj = dr_mhmc_propose(cur_, eval, p, rng_, cfg_.divergence);
        const double dE = dr_mhmc_delta_E(traj, p);
        if (traj.diverged) {
          prop = cur_;
          return -std::numeric_limits<double>::infinity();
        }
        prop = std::move(traj.end);
        return -dE;
      }
    }
    throw std::logic_error("unhandled algorithm");
  }

  void adapt(int it, double log_ratio) {
    if (cfg_.tune) {
      const double alpha = std::isnan(log_ratio) ? 0.0 : std::exp(std::min(0.0, log_ratio));
      const double step = (alpha - cfg_.target_accept) / std::pow(double(it + 1), 0.6);
      if (cfg_.algorithm == Algorithm::dili) {
        const double f = std::exp(step);
        h_r_ = std::clamp(h_r_ * f, 1e-8, cfg_.h_max);
        h_perp_ = std::clamp(h_perp_ * f, 1e-8, cfg_.h_max);
        dili_ops_.reset();
      } else {
        h_ = std::clamp(h_ * std::exp(step), 1e-8, cfg_.h_max);
      }
    }
    if (lis_ && !lis_->frozen) {
      const bool changed =
          adaptation_step(it, *lis_, [&] { return local_spectrum(cur_, target_, cfg_.lis_local, cfg_.eig); });
      if (it == cfg_.burn_in - 1) lis_->frozen = true;
      if (changed) refresh_global();
    }
    if (cfg_.empirical_lis_covariance && cfg_.algorithm == Algorithm::dili && global_->rank() > 0) {
      const Vector w = global_->basis().transpose() * cur_.v;
      emp_sum_ += w;
      emp_outer_ += w * w.transpose();
      ++emp_count_;
      const Index r = global_->rank();
      if ((it + 1) % cfg_.n_b == 0 && emp_count_ > r + 1) {
        const Vector mean = emp_sum_ / double(emp_count_);
        Matrix cov = (emp_outer_ - double(emp_count_) * mean * mean.transpose()) / double(emp_count_ - 1);
        cov = 0.5 * (cov + cov.transpose());
        cov.diagonal().array() += 1e-8;
        emp_cov_ = cov;
        dili_ops_.reset();
      }
    }
  }

  const WhitenedTarget& target_;
  const ChainSettings& cfg_;
  Rng rng_;
  std::shared_ptr<const LowRankSpectrum> empty_;
  std::shared_ptr<const LowRankSpectrum> global_;
  std::optional<LisState> lis_;
  std::optional<DiliOperators> dili_ops_;
  std::optional<Matrix> emp_cov_;
  Vector emp_sum_;
  Matrix emp_outer_;
  Index emp_count_ = 0;
  State cur_;
  double h_ = 1.0, h_r_ = 0.5, h_perp_ = 1.0;
  ChainRecord rec_;
};

}  // namespace

ChainRecord run_chain(const WhitenedTarget& target, const ChainSettings& settings) {
  return ChainRunner(target, settings).run();
}

}  // namespace drmc
