#pragma once

#include "drmc/types.hpp"

#include <iosfwd>
#include <string>
#include <vector>

namespace drmc {

struct ChainRecord;

/// Effective sample size N / tau with tau from Geyer's initial monotone
/// sequence of paired autocovariances. Capped at N. A constant series has
/// ESS 0 (with a warning on stderr when `warn`). Requires N >= 10.
double ess(const Eigen::Ref<const Vector>& x, bool warn = true);

/// Sample autocorrelation at lags 0..max_lag.
Vector autocorrelation(const Eigen::Ref<const Vector>& x, Index max_lag);

struct EssSummary {
  double min = 0.0, median = 0.0, max = 0.0;
};
/// ESS of every column (rows are draws).
EssSummary ess_summary(const Matrix& samples);

/// One row of an efficiency table.
struct RunSummary {
  std::string algorithm;
  std::string step;  // "0.50" or "(0.50,1.00)"
  double acceptance = 0.0;
  double seconds_per_iteration = 0.0;
  EssSummary ess;
  double min_ess_per_second = 0.0;
  double speedup = 0.0;
  long pde_solves = 0;
};

RunSummary summarize(const ChainRecord& record);

/// Fills `speedup` relative to the pcn row. Throws std::invalid_argument
/// when no pcn row is present.
std::vector<RunSummary> summary_table(std::vector<RunSummary> rows);
std::vector<RunSummary> summary_table(const std::vector<const ChainRecord*>& records);

void write_table_csv(std::ostream& out, const std::vector<RunSummary>& rows);
void write_table_text(std::ostream& out, const std::vector<RunSummary>& rows);

/// Columns: lag, then one column of autocorrelations per named series.
void write_acf_csv(std::ostream& out, const std::vector<std::string>& names, const std::vector<Vector>& acfs);

}  // namespace drmc
