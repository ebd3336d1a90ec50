#pragma once

#include <iosfwd>

namespace vpair {

// Runs the DPO property suite (gradient checks against finite differences,
// closed-form values, monotonicity, limits, invariances, toy training) and
// prints one pass/fail line per property. Returns true when everything held.
// Pure compute; no network.
bool run_dpo_checks(std::ostream& out);

}  // namespace vpair
