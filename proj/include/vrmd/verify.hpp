#pragma once

#include <string>
#include <vector>

namespace vrmd {

struct CheckResult {
  std::string name;
  bool pass = false;
  std::string detail;
};

// Property suites backing the `verify` subcommand and the acceptance gate:
// closed-form prox vs the golden-section oracle, enumerated batch-variance
// bounds, the mirror-step inequalities, the strong-convexity floor, and the
// estimator exactness/ledger laws.
CheckResult verify_prox_oracle(int instances = 1000);
CheckResult verify_subset_variance_bounds();
CheckResult verify_step_inequalities(int instances = 1000);
CheckResult verify_strong_convexity_floor(int pairs = 1000);
CheckResult verify_estimator_exactness();

std::vector<CheckResult> run_verification();

}  // namespace vrmd
