#pragma once

#include <cmath>
#include <cstddef>
#include <limits>
#include <string>
#include <vector>

namespace safegain {

// Outcome of a sampled check. Findings are capped; `violations` is the full count.
struct ValidationReport {
  std::string subject;
  std::size_t samples = 0;
  std::size_t violations = 0;
  double worst = 0.0;  // worst margin observed (most negative slack; checks
                       // that track minima may leave a positive value here)
  double worst_at = std::numeric_limits<double>::quiet_NaN();
  std::vector<std::string> findings;
  bool pass = true;

  static constexpr std::size_t kMaxFindings = 8;

  void add_violation(double margin, double at, std::string text) {
    ++violations;
    pass = false;
    if (margin < worst) {
      worst = margin;
      worst_at = at;
    }
    if (!text.empty() && findings.size() < kMaxFindings) findings.push_back(std::move(text));
  }

  void add_note(std::string text) {
    if (findings.size() < kMaxFindings) findings.push_back(std::move(text));
  }
};

}  // namespace safegain
