#pragma once

// Exhaustive search over a lattice of output schedules, used to check the
// solver on small instances.
//
// Outputs are restricted to Y_t = X_t + k_t * step with integer k_t, so Y = X
// is always a candidate. For a fixed Y the best targets have a closed form,
// which leaves an N-dimensional search.

#include <cstdint>
#include <vector>

#include "pcdsm/model.hpp"

namespace pcdsm::oracle {

inline constexpr std::size_t kMaxSlots = 8;

struct GridSpec {
  double step = 0.5;
  /// Maximum number of complete schedules evaluated.
  std::uint64_t budget = 100'000'000;
  /// Worker threads; the first slot's lattice index is split between them.
  unsigned threads = 1;
};

struct OracleResult {
  std::vector<double> output_kw;
  std::vector<double> targets_kw;  // per period
  double objective = 0.0;
  /// The true optimum is no lower than objective - bound when `aligned`.
  double bound = 0.0;
  /// Demand and both peak powers are multiples of the step.
  bool aligned = false;
  std::uint64_t evaluations = 0;
};

/// Best lattice schedule. Exact ties go to the lexicographically smallest Y.
/// Throws BudgetExceeded for more than kMaxSlots slots or when the search
/// needs more evaluations than the budget, ValidationError for invalid
/// instances or a nonzero initial state of charge.
OracleResult brute_force(const Instance& instance, const GridSpec& grid = {});

}  // namespace pcdsm::oracle
