#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace mfgsel {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
};

// The ten go/no-go checks at the canonical configuration (kappa = 0,
// sigma = 1, horizon = 1, delta = 0.5, dt = 1e-3, master seed 12345).
// Prints one PASS/FAIL line per criterion to `out` as it goes.
std::vector<CriterionResult> run_acceptance(unsigned threads,
                                            std::ostream& out);

bool all_passed(const std::vector<CriterionResult>& results);

}  // namespace mfgsel
