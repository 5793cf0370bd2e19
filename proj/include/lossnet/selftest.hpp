#pragma once

#include <string>
#include <vector>

namespace lossnet {

struct CheckResult {
  std::string name;
  bool passed = false;
  std::string detail;
};

/// Internal consistency checks plus the published reference values.
/// `perturb` scales every edge weight w_i (i >= 1) by (1 + perturb) in the
/// reference-value checks; anything nonzero should make them fail.
std::vector<CheckResult> run_selftest(double perturb = 0.0);

/// |a - b| <= rel * max(|a|, |b|) + 1e-15.
bool close_rel(double a, double b, double rel);

}  // namespace lossnet
