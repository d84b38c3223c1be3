#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace hdnn {

struct GradcheckCase {
  std::string name;
  double max_rel_error = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckCase> cases;
  double tolerance = 0.0;

  bool all_pass() const;
  std::string to_string() const;  // one line per case plus a summary
};

/// Verification hook: adds `delta` to every analytic gradient of the named
/// case before comparison, to prove the suite detects a broken backward.
struct GradcheckTamper {
  std::string case_name;
  double delta = 0.0;
};

/// Central finite-difference check (h = 1e-5) of every layer's input and
/// parameter gradients plus a small two-branch end-to-end model, on random
/// shapes drawn from `seed`. Check points that land within 1e-3 of a gradient
/// kink (ReLU zero, pooling tie) are redrawn. Relative error is
/// |analytic - numeric| / max(1, |analytic|, |numeric|).
GradcheckReport gradcheck_suite(std::uint64_t seed, double tolerance = 1e-4,
                                const GradcheckTamper& tamper = {});

}  // namespace hdnn
