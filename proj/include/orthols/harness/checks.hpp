#pragma once

#include <string>
#include <vector>

namespace orthols::harness {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

std::vector<CheckResult> geometry_checks();
std::vector<CheckResult> objectives_checks();
std::vector<CheckResult> stepsize_checks();
std::vector<CheckResult> search_checks();

/// Suite by name: geometry, objectives, stepsize, search or all.
std::vector<CheckResult> run_checks(const std::string &suite);

} // namespace orthols::harness
