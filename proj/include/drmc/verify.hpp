#pragma once

#include <json.hpp>

#include <iosfwd>
#include <string>
#include <vector>

namespace drmc {

enum class VerifyLevel { fast, full };

struct VerifyCheck {
  std::string suite;
  std::string name;
  bool passed = false;
  double value = 0.0;      // worst observed error
  double tolerance = 0.0;
  std::string detail;
};

struct VerifyReport {
  VerifyLevel level = VerifyLevel::fast;
  std::vector<VerifyCheck> checks;
  bool passed() const;
  /// {"level", "passed", "checks": [...], "failures": [names]}.
  nlohmann::json to_json() const;
};

/// Property suites: low-rank identities, adjoint gradients, GNH structure,
/// proposal-difference bounds, the determinant identity between the
/// low-rank and operator-weighted ratios, leapfrog reversibility and
/// linear-Gaussian moments. Progress goes to `log`.
VerifyReport run_verify(VerifyLevel level, std::ostream& log);

}  // namespace drmc
