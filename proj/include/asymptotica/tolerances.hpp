#pragma once

namespace asymptotica {

// All thresholds are configurable; defaults are calibrated for dense
// superoperators at d <= 16.
struct Tolerances {
  double eps_mat = 1e-10;      // element-level matrix identities
  double eps_eig = 1e-8;       // eigen-residuals, projector idempotency
  double eps_cluster = 1e-7;   // eigenvalue grouping (absolute)
  double eps_per = 1e-9;       // peripheral threshold: |lambda| >= 1 - eps_per
  double eps_supp = 1e-9;      // support cutoff, relative to largest eigenvalue
  double eps_faith = 1e-9;     // invertibility floor for reduced fixed states
  double eps_alg = 1e-7;       // algebra-level identities
};

} // namespace asymptotica
