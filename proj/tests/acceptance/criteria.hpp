#pragma once

// The release acceptance matrix: ten numbered end-to-end checks covering the
// transport duality, the speed limits and their scope flags, the exact
// two-site transfers and their blockade limits, the integer tridiagonal
// certificates, and the constructive transfer protocols.  Each criterion is
// self-contained, deterministic, and reports a one-line summary.

#include <string>
#include <vector>

namespace bosecone::acceptance {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
};

/// Runs criterion `id` (1..10).  `threads` controls fan-out of the seeded
/// sweeps; results are identical for any thread count.
CriterionResult run_criterion(int id, int threads = 1);

/// All ten, in order.
std::vector<CriterionResult> run_all(int threads = 1);

/// "[PASS] 03 two-site-exact-swaps  min fidelity 1 - 2.2e-15  (0.01 s)"
std::string format_line(const CriterionResult& r);

}  // namespace bosecone::acceptance
