#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace era {

struct GradCheckEntry {
  std::string name;
  double max_rel_err = 0.0;
  double threshold = 1e-4;
  int configurations = 0;
  bool pass = false;
};

struct GradCheckReport {
  std::vector<GradCheckEntry> entries;
  bool all_pass() const {
    for (const auto& e : entries)
      if (!e.pass) return false;
    return !entries.empty();
  }
};

// Analytic-vs-central-finite-difference suites for every loss, run on random
// configurations of a micro-model. configs_per_loss counts per suite.
GradCheckReport run_gradient_checks(int configs_per_loss = 100, std::uint64_t seed = 7);

// Harness sanity: a deliberately corrupted gradient must be flagged.
bool gradcheck_detects_corruption(std::uint64_t seed = 7);

}  // namespace era
