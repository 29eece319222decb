#include "drmc/diagnostics.hpp"

#include "drmc/kernels.hpp"
#include "drmc/sampler.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <limits>
#include <iostream>
#include <sstream>
#include <stdexcept>

namespace drmc {

namespace {

double autocov(const Eigen::Ref<const Vector>& x, double mean, Index lag) {
  const Index n = x.size();
  double s = 0.0;
  for (Index t = 0; t + lag < n; ++t) s += (x[t] - mean) * (x[t + lag] - mean);
  return s / double(n);
}

}  // namespace

double ess(const Eigen::Ref<const Vector>& x, bool warn) {
  const Index n = x.size();
  if (n < 10) throw std::invalid_argument("ESS needs at least 10 draws");
  const double mean = x.mean();
  const double g0 = autocov(x, mean, 0);
  if (!(g0 > 1e-300) || (x.array() == x[0]).all()) {
    if (warn) std::cerr << "warning: constant series, ESS set to 0\n";
    return 0.0;
  }
  double sum = 0.0;
  double prev = std::numeric_limits<double>::infinity();
  for (Index m = 0; 2 * m + 1 < n; ++m) {
    double pair = autocov(x, mean, 2 * m) + autocov(x, mean, 2 * m + 1);
    if (pair <= 0.0) break;
    pair = std::min(pair, prev);
    prev = pair;
    sum += pair;
  }
  const double tau = (-g0 + 2.0 * sum) / g0;
  if (!(tau > 1.0)) return double(n);
  return std::min(double(n), double(n) / tau);
}

Vector autocorrelation(const Eigen::Ref<const Vector>& x, Index max_lag) {
  const Index n = x.size();
  max_lag = std::min(max_lag, n - 1);
  const double mean = x.mean();
  const double g0 = autocov(x, mean, 0);
  Vector acf(max_lag + 1);
  for (Index k = 0; k <= max_lag; ++k) acf[k] = g0 > 0.0 ? autocov(x, mean, k) / g0 : (k == 0 ? 1.0 : 0.0);
  return acf;
}

EssSummary ess_summary(const Matrix& samples) {
  EssSummary s;
  if (samples.cols() == 0) return s;
  Vector e = kernels::column_ess(samples);
  std::sort(e.data(), e.data() + e.size());
  s.min = e[0];
  s.max = e[e.size() - 1];
  const Index k = e.size();
  s.median = k % 2 ? e[k / 2] : 0.5 * (e[k / 2 - 1] + e[k / 2]);
  return s;
}

RunSummary summarize(const ChainRecord& rec) {
  RunSummary s;
  s.algorithm = to_string(rec.algorithm);
  std::ostringstream step;
  step << std::fixed << std::setprecision(2);
  if (rec.algorithm == Algorithm::dili) {
    step << "(" << rec.final_h_r << "," << rec.final_h_perp << ")";
  } else {
    step << rec.final_h;
  }
  s.step = step.str();
  const Index n_iter = static_cast<Index>(rec.accepts.size());
  Index kept = 0, acc = 0;
  for (Index i = rec.burn_in; i < n_iter; ++i, ++kept) acc += rec.accepts[static_cast<std::size_t>(i)];
  s.acceptance = kept ? double(acc) / double(kept) : 0.0;
  s.seconds_per_iteration = n_iter ? rec.total_seconds / double(n_iter) : 0.0;
  s.ess = ess_summary(rec.samples);
  s.min_ess_per_second = rec.total_seconds > 0 ? s.ess.min / rec.total_seconds : 0.0;
  s.pde_solves = rec.pde_solves.empty() ? rec.initial_solves : rec.pde_solves.back();
  return s;
}

std::vector<RunSummary> summary_table(std::vector<RunSummary> rows) {
  auto base = std::find_if(rows.begin(), rows.end(), [](const RunSummary& r) { return r.algorithm == "pcn"; });
  if (base == rows.end()) throw std::invalid_argument("summary table needs a pcn baseline run");
  const double ref = base->min_ess_per_second;
  for (auto& r : rows) r.speedup = ref > 0.0 ? r.min_ess_per_second / ref : 0.0;
  return rows;
}

std::vector<RunSummary> summary_table(const std::vector<const ChainRecord*>& records) {
  std::vector<RunSummary> rows;
  for (const auto* r : records) rows.push_back(summarize(*r));
  return summary_table(std::move(rows));
}

void write_table_csv(std::ostream& out, const std::vector<RunSummary>& rows) {
  out << "method,h,AP,s_per_iter,ESS_min,ESS_med,ESS_max,minESS_per_s,spdup,PDEsolns\n";
  out << std::setprecision(10);
  for (const auto& r : rows) {
    out << r.algorithm << ",\"" << r.step << "\"," << r.acceptance << ',' << r.seconds_per_iteration << ','
        << r.ess.min << ',' << r.ess.median << ',' << r.ess.max << ',' << r.min_ess_per_second << ','
        << r.speedup << ',' << r.pde_solves << '\n';
  }
}

void write_table_text(std::ostream& out, const std::vector<RunSummary>& rows) {
  const auto flags = out.flags();
  out << std::left << std::setw(15) << "Method" << std::right << std::setw(13) << "h" << std::setw(7) << "AP"
      << std::setw(10) << "s/iter" << std::setw(26) << "ESS(min,med,max)" << std::setw(11) << "minESS/s"
      << std::setw(8) << "spdup" << std::setw(10) << "PDEsolns" << '\n';
  for (const auto& r : rows) {
    std::ostringstream e;
    e << std::fixed << std::setprecision(1) << "(" << r.ess.min << "," << r.ess.median << "," << r.ess.max << ")";
    out << std::left << std::setw(15) << r.algorithm << std::right << std::setw(13) << r.step << std::fixed
        << std::setprecision(2) << std::setw(7) << r.acceptance << std::setprecision(4) << std::setw(10)
        << r.seconds_per_iteration << std::setw(26) << e.str() << std::setprecision(2) << std::setw(11)
        << r.min_ess_per_second << std::setw(8) << r.speedup << std::setw(10) << r.pde_solves << '\n';
  }
  out.flags(flags);
}

void write_acf_csv(std::ostream& out, const std::vector<std::string>& names, const std::vector<Vector>& acfs) {
  if (names.size() != acfs.size()) throw std::invalid_argument("one name per ACF series is required");
  Index lags = 0;
  for (const auto& a : acfs) lags = std::max(lags, a.size());
  out << "lag";
  for (const auto& n : names) out << ',' << n;
  out << '\n' << std::setprecision(12);
  for (Index k = 0; k < lags; ++k) {
    out << k;
    for (const auto& a : acfs) {
      out << ',';
      if (k < a.size()) out << a[k];
    }
    out << '\n';
  }
}

}  // namespace drmc
