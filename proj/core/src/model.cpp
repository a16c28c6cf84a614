#include "pcdsm/model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "pcdsm/errors.hpp"

namespace pcdsm {

std::size_t Tariff::period_of(std::size_t t) const {
  auto it = std::upper_bound(boundaries.begin() + 1, boundaries.end(), t);
  return static_cast<std::size_t>(it - (boundaries.begin() + 1));
}

Tariff Tariff::flat(std::size_t n_slots, double price) {
  return Tariff{{0, n_slots}, {price}};
}

std::string to_string(ViolationKind kind) {
  switch (kind) {
    case ViolationKind::EmptyLoad: return "EmptyLoad";
    case ViolationKind::BadSlotDuration: return "BadSlotDuration";
    case ViolationKind::NegativeDemand: return "NegativeDemand";
    case ViolationKind::NonMonotoneBoundaries: return "NonMonotoneBoundaries";
    case ViolationKind::GridMisalignment: return "GridMisalignment";
    case ViolationKind::BadPrice: return "BadPrice";
    case ViolationKind::BadBattery: return "BadBattery";
    case ViolationKind::BadAlpha: return "BadAlpha";
    case ViolationKind::BadInitialSoc: return "BadInitialSoc";
  }
  return "Unknown";
}

std::string to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::Optimal: return "optimal";
    case SolveStatus::MaxIterations: return "max_iterations";
    case SolveStatus::Infeasible: return "infeasible";
  }
  return "unknown";
}

std::string to_string(ConstraintKind kind) {
  switch (kind) {
    case ConstraintKind::NoDeficit: return "no_deficit";
    case ConstraintKind::NoOverflow: return "no_overflow";
    case ConstraintKind::ChargePeak: return "charge_peak";
    case ConstraintKind::DischargePeak: return "discharge_peak";
    case ConstraintKind::OutputNonneg: return "output_nonneg";
    case ConstraintKind::TargetNonneg: return "target_nonneg";
    case ConstraintKind::TotalEnergy: return "total_energy";
  }
  return "unknown";
}

namespace {

bool non_negative(double v) { return std::isfinite(v) && v >= 0.0; }

}  // namespace

std::vector<Violation> validate(const Instance& instance) {
  std::vector<Violation> out;
  auto add = [&out](ViolationKind kind, std::size_t index, std::string msg) {
    out.push_back({kind, index, std::move(msg)});
  };

  const auto& load = instance.load;
  const std::size_t n = load.n_slots();
  if (n == 0) add(ViolationKind::EmptyLoad, 0, "load has no slots");
  if (!(std::isfinite(load.slot_hours) && load.slot_hours > 0.0)) {
    add(ViolationKind::BadSlotDuration, 0, "slot duration must be > 0");
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (!non_negative(load.demand_kw[t])) {
      add(ViolationKind::NegativeDemand, t + 1,
          "demand at t=" + std::to_string(t + 1) + " is negative");
    }
  }

  const auto& tariff = instance.tariff;
  const auto& b = tariff.boundaries;
  if (b.size() != tariff.prices.size() + 1 || b.size() < 2) {
    add(ViolationKind::NonMonotoneBoundaries, 0,
        "tariff needs M prices and M+1 boundaries");
  } else {
    if (b.front() != 0) {
      add(ViolationKind::GridMisalignment, 1, "first boundary must be slot 0");
    }
    for (std::size_t i = 1; i < b.size(); ++i) {
      if (b[i] <= b[i - 1]) {
        add(ViolationKind::NonMonotoneBoundaries, i + 1,
            "boundary " + std::to_string(i + 1) + " does not increase");
      }
    }
    if (b.back() != n) {
      add(ViolationKind::GridMisalignment, b.size(),
          "last boundary " + std::to_string(b.back()) + " != N=" +
              std::to_string(n));
    }
  }
  for (std::size_t i = 0; i < tariff.prices.size(); ++i) {
    const double p = tariff.prices[i];
    if (!(std::isfinite(p) && p > 0.0)) {
      add(ViolationKind::BadPrice, i + 1,
          "price of period " + std::to_string(i + 1) + " must be > 0");
    }
  }

  const auto& bat = instance.battery;
  if (!non_negative(bat.capacity_kwh) || !non_negative(bat.charge_peak_kw) ||
      !non_negative(bat.discharge_peak_kw)) {
    add(ViolationKind::BadBattery, 0, "battery parameters must be >= 0");
  }
  if (!(instance.alpha >= 0.0 && instance.alpha <= 1.0)) {
    add(ViolationKind::BadAlpha, 0, "alpha must lie in [0, 1]");
  }
  if (!non_negative(instance.initial_soc_kwh) ||
      instance.initial_soc_kwh > bat.capacity_kwh) {
    add(ViolationKind::BadInitialSoc, 0,
        "initial state of charge must lie in [0, capacity]");
  }
  return out;
}

const Instance& validated(const Instance& instance) {
  const auto violations = validate(instance);
  if (violations.empty()) return instance;
  std::ostringstream msg;
  msg << "invalid instance:";
  for (const auto& v : violations) {
    msg << "\n  " << to_string(v.kind) << ": " << v.message;
  }
  throw ValidationError(msg.str());
}

SocTrajectory soc_trajectory(const LoadProfile& load,
                             std::span<const double> output_kw,
                             const BatterySpec& battery,
                             double initial_soc_kwh) {
  if (output_kw.size() != load.n_slots()) {
    throw DimensionMismatch("output length " +
                            std::to_string(output_kw.size()) +
                            " != number of slots " +
                            std::to_string(load.n_slots()));
  }
  SocTrajectory traj;
  traj.soc_kwh.reserve(output_kw.size());
  double soc = initial_soc_kwh;
  for (std::size_t t = 0; t < output_kw.size(); ++t) {
    soc += (output_kw[t] - load.demand_kw[t]) * load.slot_hours;
    traj.soc_kwh.push_back(soc);
    if (soc < -kFeasibilityTol) {
      traj.violations.push_back({SocViolationKind::Underflow, t + 1, soc});
    } else if (soc > battery.capacity_kwh + kFeasibilityTol) {
      traj.violations.push_back({SocViolationKind::Overflow, t + 1, soc});
    }
  }
  return traj;
}

Interval feasible_request_interval(double x_kw, double soc_kwh,
                                   const BatterySpec& battery,
                                   double slot_hours, bool selling) {
  const double max_discharge =
      std::min(soc_kwh / slot_hours, battery.discharge_peak_kw);
  const double max_charge = std::min(
      battery.charge_peak_kw, (battery.capacity_kwh - soc_kwh) / slot_hours);
  double lo = x_kw - max_discharge;
  if (!selling) lo = std::max(0.0, lo);
  return {lo, x_kw + max_charge};
}

double privacy(std::span<const double> output_kw,
               std::span<const double> targets_kw, const Tariff& tariff) {
  if (output_kw.size() != tariff.n_slots() ||
      targets_kw.size() != tariff.n_periods()) {
    throw DimensionMismatch("privacy: output/targets do not match tariff");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < tariff.n_periods(); ++i) {
    for (std::size_t t = tariff.period_begin(i); t < tariff.period_end(i);
         ++t) {
      const double d = output_kw[t] - targets_kw[i];
      sum += d * d;
    }
  }
  return sum / static_cast<double>(output_kw.size());
}

double cost(std::span<const double> output_kw, const Tariff& tariff,
            double slot_hours) {
  if (output_kw.size() != tariff.n_slots()) {
    throw DimensionMismatch("cost: output does not match tariff");
  }
  double sum = 0.0;
  for (std::size_t i = 0; i < tariff.n_periods(); ++i) {
    double period_sum = 0.0;
    for (std::size_t t = tariff.period_begin(i); t < tariff.period_end(i);
         ++t) {
      period_sum += output_kw[t];
    }
    sum += tariff.prices[i] * period_sum;
  }
  return sum * slot_hours / static_cast<double>(output_kw.size());
}

std::vector<double> period_means(std::span<const double> output_kw,
                                 const Tariff& tariff) {
  std::vector<double> means(tariff.n_periods(), 0.0);
  for (std::size_t i = 0; i < tariff.n_periods(); ++i) {
    double s = 0.0;
    for (std::size_t t = tariff.period_begin(i); t < tariff.period_end(i);
         ++t) {
      s += output_kw[t];
    }
    means[i] = s / static_cast<double>(tariff.period_length(i));
  }
  return means;
}

std::vector<double> targets_per_period(const Instance& instance,
                                       std::span<const double> target_vars) {
  if (instance.target_mode == TargetMode::Constant) {
    if (target_vars.size() != 1) {
      throw DimensionMismatch("constant target mode expects one target");
    }
    return std::vector<double>(instance.n_periods(), target_vars[0]);
  }
  if (target_vars.size() != instance.n_periods()) {
    throw DimensionMismatch("piecewise target mode expects M targets");
  }
  return {target_vars.begin(), target_vars.end()};
}

}  // namespace pcdsm
