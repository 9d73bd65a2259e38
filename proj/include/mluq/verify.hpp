#pragma once

#include <string>
#include <vector>

#include "mluq/config.hpp"

namespace mluq {

struct VerifyItem {
  std::string name;
  bool passed = false;
  std::string detail;
};

struct VerifyReport {
  std::vector<VerifyItem> items;
  bool all_passed() const {
    for (const auto& it : items)
      if (!it.passed) return false;
    return true;
  }
};

// Deterministic identity suites (summation identity, truncated-sum vs
// binomial reassembly, per-sample telescoping, per-sample shell identity) on
// synthetic tables and PDE-backed evaluators, plus reduced-scale statistical
// unbiasedness checks.
VerifyReport run_verification(const RunConfig& config);

}  // namespace mluq
