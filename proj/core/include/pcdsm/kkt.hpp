#pragma once

// Optimality certificate for a candidate schedule. The residuals are
// evaluated from the instance data and the stored multipliers alone, without
// going through the assembled QP, so they also catch assembly mistakes.

#include <set>
#include <span>
#include <vector>

#include "pcdsm/model.hpp"

namespace pcdsm::kkt {

inline constexpr double kDefaultTolerance = 1e-5;

/// Stationarity, complementary slackness, multiplier signs and primal
/// feasibility of `solution`. Without multipliers only primal feasibility is
/// filled in and the verdict is false.
KktReport check(const Solution& solution, const Instance& instance,
                double tolerance = kDefaultTolerance);

/// Optimal per-period targets for a fixed output: the period mean (the
/// overall mean in Constant mode), shifted by the target multiplier and
/// clamped at zero when selling is off. With alpha = 0 the targets do not
/// enter the objective and the clamped means are returned.
std::vector<double> recover_targets(std::span<const double> output_kw,
                                    const Instance& instance,
                                    const Multipliers* duals = nullptr);

struct WaterfillSlot {
  std::size_t t = 0;  // 1-based
  std::size_t period = 0;
  double output_kw = 0.0;
  /// Y_t + (1 - alpha) C delta / (2 alpha)
  double water_level = 0.0;
  std::set<ConstraintKind> active_tags;
};

/// Per-slot water levels and the constraints binding at each slot (slack
/// within `tolerance`). Requires alpha > 0.
std::vector<WaterfillSlot> waterfill_view(const Solution& solution,
                                          const Instance& instance,
                                          double tolerance = kDefaultTolerance);

}  // namespace pcdsm::kkt
