#pragma once

// Parameter sweeps over the privacy/cost weight and the battery size.

#include <span>
#include <string>
#include <vector>

#include "pcdsm/model.hpp"
#include "pcdsm/optimize.hpp"

namespace pcdsm::sweep {

enum class Mode {
  /// One point after the other, each warm-started from the previous one.
  Sequential,
  /// Independent cold solves spread over worker threads.
  Concurrent,
};

struct SweepOptions {
  OptimizeOptions optimize;
  Mode mode = Mode::Sequential;
  /// Worker count for Concurrent mode (0: hardware concurrency).
  unsigned threads = 0;
};

struct FrontierPoint {
  double alpha = 0.0;
  double privacy = 0.0;
  double cost = 0.0;
  double objective = 0.0;
  /// Optimal only when the solver converged and the KKT check passed.
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  /// Set when the solve threw; the sweep carries on with the next point.
  std::string error;
};

struct CapacitySweepPoint {
  double capacity_kwh = 0.0;
  double charge_peak_kw = 0.0;
  double discharge_peak_kw = 0.0;
  double alpha = 0.0;
  double privacy = 0.0;
  double cost = 0.0;
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  std::string error;
};

/// One point per alpha (ascending, within [0, 1]) for `base` with its alpha
/// replaced.
std::vector<FrontierPoint> alpha_sweep(const Instance& base,
                                       std::span<const double> alphas,
                                       const SweepOptions& options = {});

/// One point per capacity, with both peak powers set to half the capacity
/// and the weight fixed to `alpha`.
std::vector<CapacitySweepPoint> capacity_sweep(
    const Instance& base, std::span<const double> capacities, double alpha,
    const SweepOptions& options = {});

/// The instance a capacity sweep solves for `capacity_kwh`.
Instance with_capacity(const Instance& base, double capacity_kwh);

}  // namespace pcdsm::sweep
