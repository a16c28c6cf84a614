#pragma once

// Domain model for battery-assisted load shaping: load profiles, time-of-use
// tariffs, batteries, problem instances and their solutions.
//
// Conventions used throughout the library:
//   * slots are 0-based in code; reports addressed to people (violations,
//     CSV rows) use 1-based slot numbers,
//   * demand X_t and grid request Y_t are powers in kW,
//   * the battery state of charge B_t is an energy in kWh and every power to
//     energy conversion multiplies by the slot duration (hours).

#include <cstddef>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace pcdsm {

/// Absolute tolerance (kW or kWh) used by every feasibility predicate.
inline constexpr double kFeasibilityTol = 1e-6;

struct LoadProfile {
  std::vector<double> demand_kw;
  double slot_hours = 1.0;

  std::size_t n_slots() const { return demand_kw.size(); }
};

/// Time-of-use tariff made of M contiguous price periods. Period i owns the
/// slots [boundaries[i], boundaries[i + 1]).
struct Tariff {
  std::vector<std::size_t> boundaries;
  std::vector<double> prices;

  std::size_t n_periods() const { return prices.size(); }
  std::size_t n_slots() const {
    return boundaries.empty() ? 0 : boundaries.back();
  }
  std::size_t period_begin(std::size_t i) const { return boundaries[i]; }
  std::size_t period_end(std::size_t i) const { return boundaries[i + 1]; }
  std::size_t period_length(std::size_t i) const {
    return boundaries[i + 1] - boundaries[i];
  }
  /// Index of the period owning slot `t`. Requires a valid tariff.
  std::size_t period_of(std::size_t t) const;
  double price_at(std::size_t t) const { return prices[period_of(t)]; }

  static Tariff flat(std::size_t n_slots, double price);
};

struct BatterySpec {
  double capacity_kwh = 0.0;
  double charge_peak_kw = 0.0;
  double discharge_peak_kw = 0.0;
};

enum class TargetMode { Constant, PiecewisePerPeriod };

struct Instance {
  LoadProfile load;
  Tariff tariff;
  BatterySpec battery;
  double alpha = 0.5;
  bool selling = false;
  TargetMode target_mode = TargetMode::PiecewisePerPeriod;
  /// Battery energy at t = 0. Every shipped experiment keeps it at zero.
  double initial_soc_kwh = 0.0;

  std::size_t n_slots() const { return load.n_slots(); }
  std::size_t n_periods() const { return tariff.n_periods(); }
  /// Number of target decision variables: 1 in Constant mode, else M.
  std::size_t n_targets() const {
    return target_mode == TargetMode::Constant ? 1 : tariff.n_periods();
  }
};

// ---------------------------------------------------------------------------
// Validation

enum class ViolationKind {
  EmptyLoad,
  BadSlotDuration,
  NegativeDemand,
  NonMonotoneBoundaries,
  GridMisalignment,
  BadPrice,
  BadBattery,
  BadAlpha,
  BadInitialSoc,
};

struct Violation {
  ViolationKind kind;
  /// 1-based slot, period or boundary number the violation refers to (0 when
  /// it concerns the instance as a whole).
  std::size_t index = 0;
  std::string message;
};

std::string to_string(ViolationKind kind);

/// Every violated invariant of `instance`; empty iff the instance is valid.
std::vector<Violation> validate(const Instance& instance);

/// Returns `instance` unchanged when valid, throws ValidationError listing
/// all violations otherwise.
const Instance& validated(const Instance& instance);

// ---------------------------------------------------------------------------
// Battery state

enum class SocViolationKind { Underflow, Overflow };

struct SocViolation {
  SocViolationKind kind;
  std::size_t slot;  // 1-based
  double soc_kwh;
};

struct SocTrajectory {
  std::vector<double> soc_kwh;  // B_1 .. B_N
  std::vector<SocViolation> violations;

  bool ok() const { return violations.empty(); }
};

/// B_t = B_{t-1} + (Y_t - X_t) * delta, starting from `initial_soc_kwh`.
/// Values outside [-tol, capacity + tol] are reported, not clamped.
SocTrajectory soc_trajectory(const LoadProfile& load,
                             std::span<const double> output_kw,
                             const BatterySpec& battery,
                             double initial_soc_kwh = 0.0);

struct Interval {
  double lo;
  double hi;

  bool contains(double v, double tol = 0.0) const {
    return v >= lo - tol && v <= hi + tol;
  }
};

/// Grid requests reachable in one slot given demand `x_kw` and the state of
/// charge `soc_kwh` at the start of the slot.
Interval feasible_request_interval(double x_kw, double soc_kwh,
                                   const BatterySpec& battery,
                                   double slot_hours, bool selling);

// ---------------------------------------------------------------------------
// Metrics

/// Mean squared deviation of the output from its per-period target.
/// `targets_kw` holds one value per tariff period.
double privacy(std::span<const double> output_kw,
               std::span<const double> targets_kw, const Tariff& tariff);

/// Average billed cost per slot: (1/N) sum_t price(t) * Y_t * delta.
double cost(std::span<const double> output_kw, const Tariff& tariff,
            double slot_hours);

/// Per-period arithmetic mean of `output_kw`.
std::vector<double> period_means(std::span<const double> output_kw,
                                 const Tariff& tariff);

/// Expands one value per target variable (1 or M) to one value per period.
std::vector<double> targets_per_period(const Instance& instance,
                                       std::span<const double> target_vars);

// ---------------------------------------------------------------------------
// Solutions

enum class SolveStatus { Optimal, MaxIterations, Infeasible };

std::string to_string(SolveStatus status);

/// Constraint families of the scheduling problem.
enum class ConstraintKind {
  NoDeficit,      // cumulative battery energy stays >= 0
  NoOverflow,     // cumulative battery energy stays <= capacity
  ChargePeak,     // Y_t <= X_t + charge peak
  DischargePeak,  // Y_t >= X_t - discharge peak
  OutputNonneg,   // Y_t >= 0 (no selling)
  TargetNonneg,   // W >= 0 (no selling)
  TotalEnergy,    // battery ends empty
};

std::string to_string(ConstraintKind kind);

/// Lagrange multipliers of the tagged constraint rows. Inequality
/// multipliers are non-negative at an optimum; `total_energy` is free.
/// Families dropped by the selling relaxation are left empty.
struct Multipliers {
  std::vector<double> no_deficit;
  std::vector<double> no_overflow;
  std::vector<double> charge_peak;
  std::vector<double> discharge_peak;
  std::vector<double> output_nonneg;
  std::vector<double> target_nonneg;  // one per target variable
  double total_energy = 0.0;
};

struct KktReport {
  double tolerance = 0.0;
  bool duals_present = false;
  double primal_infeasibility = 0.0;
  double stationarity_y = 0.0;
  double stationarity_w = 0.0;
  std::map<ConstraintKind, double> complementarity;
  /// Largest violation of a multiplier sign constraint (>= 0).
  double dual_sign = 0.0;
  bool verdict = false;
};

struct Solution {
  std::vector<double> output_kw;   // Y_t
  std::vector<double> targets_kw;  // W per period (repeated in Constant mode)
  std::vector<double> soc_kwh;     // B_t
  double privacy = 0.0;
  double cost = 0.0;
  double objective = 0.0;
  std::optional<Multipliers> duals;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  KktReport kkt;
};

}  // namespace pcdsm
