#include "pcdsm/kkt.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcdsm/errors.hpp"

namespace pcdsm::kkt {

namespace {

void require_size(std::size_t got, std::size_t want, const char* what) {
  if (got != want) {
    throw DimensionMismatch(std::string(what) + ": expected " +
                            std::to_string(want) + " values, got " +
                            std::to_string(got));
  }
}

// Slack of every inequality family in the units of the assembled rows:
// kWh for the two battery-level families, kW for the rest.
struct Slacks {
  std::vector<double> no_deficit;
  std::vector<double> no_overflow;
  std::vector<double> charge_peak;
  std::vector<double> discharge_peak;
  std::vector<double> output_nonneg;
  std::vector<double> target_nonneg;
  double total_energy = 0.0;  // |B_N| / delta
};

Slacks slacks(const Solution& s, const Instance& in,
              std::span<const double> target_vars) {
  const std::size_t n = in.n_slots();
  const auto& x = in.load.demand_kw;
  const auto& bat = in.battery;
  const double delta = in.load.slot_hours;
  Slacks out;
  out.no_deficit.resize(n);
  out.no_overflow.resize(n);
  out.charge_peak.resize(n);
  out.discharge_peak.resize(n);
  double b = in.initial_soc_kwh;
  for (std::size_t t = 0; t < n; ++t) {
    const double y = s.output_kw[t];
    b += (y - x[t]) * delta;
    out.no_deficit[t] = b;
    out.no_overflow[t] = bat.capacity_kwh - b;
    out.charge_peak[t] = x[t] + bat.charge_peak_kw - y;
    out.discharge_peak[t] = y - x[t] + bat.discharge_peak_kw;
  }
  out.total_energy = std::abs(b) / delta;
  if (!in.selling) {
    out.output_nonneg.assign(s.output_kw.begin(), s.output_kw.end());
    out.target_nonneg.assign(target_vars.begin(), target_vars.end());
  }
  return out;
}

std::vector<double> target_vars_of(const Solution& s, const Instance& in) {
  require_size(s.targets_kw.size(), in.n_periods(), "targets");
  if (in.target_mode == TargetMode::Constant) return {s.targets_kw.front()};
  return s.targets_kw;
}

double most_negative(const std::vector<double>& v) {
  double worst = 0.0;
  for (double e : v) worst = std::max(worst, -e);
  return worst;
}

double max_product(const std::vector<double>& lam,
                   const std::vector<double>& slack) {
  double worst = 0.0;
  for (std::size_t k = 0; k < lam.size(); ++k) {
    worst = std::max(worst, std::abs(lam[k] * slack[k]));
  }
  return worst;
}

}  // namespace

KktReport check(const Solution& solution, const Instance& instance,
                double tolerance) {
  const std::size_t n = instance.n_slots();
  const std::size_t k = instance.n_targets();
  require_size(solution.output_kw.size(), n, "output");
  const std::vector<double> w = target_vars_of(solution, instance);
  const Slacks sl = slacks(solution, instance, w);

  KktReport rep;
  rep.tolerance = tolerance;
  rep.primal_infeasibility = std::max(
      {most_negative(sl.no_deficit), most_negative(sl.no_overflow),
       most_negative(sl.charge_peak), most_negative(sl.discharge_peak),
       most_negative(sl.output_nonneg), most_negative(sl.target_nonneg),
       sl.total_energy});

  if (!solution.duals) {
    rep.duals_present = false;
    rep.verdict = false;
    return rep;
  }
  rep.duals_present = true;
  const Multipliers& d = *solution.duals;
  require_size(d.no_deficit.size(), n, "no_deficit multipliers");
  require_size(d.no_overflow.size(), n, "no_overflow multipliers");
  require_size(d.charge_peak.size(), n, "charge_peak multipliers");
  require_size(d.discharge_peak.size(), n, "discharge_peak multipliers");
  require_size(d.output_nonneg.size(), instance.selling ? 0 : n,
               "output_nonneg multipliers");
  require_size(d.target_nonneg.size(), instance.selling ? 0 : k,
               "target_nonneg multipliers");

  const double nd = static_cast<double>(n);
  const double alpha = instance.alpha;
  const double delta = instance.load.slot_hours;
  const auto& tariff = instance.tariff;
  const bool constant = instance.target_mode == TargetMode::Constant;

  // d/dY_t, with the battery-level multipliers entering through every
  // cumulative row that contains slot t
  double tail = 0.0;
  std::vector<double> w_grad(k, 0.0);
  for (std::size_t t = n; t-- > 0;) {
    const std::size_t i = tariff.period_of(t);
    const std::size_t j = constant ? 0 : i;
    tail += d.no_overflow[t] - d.no_deficit[t];
    const double dev = 2.0 * alpha * (solution.output_kw[t] - w[j]) / nd;
    double g = dev + (1.0 - alpha) * tariff.prices[i] * delta / nd +
               delta * tail + d.charge_peak[t] - d.discharge_peak[t] +
               d.total_energy;
    if (!instance.selling) g -= d.output_nonneg[t];
    rep.stationarity_y = std::max(rep.stationarity_y, std::abs(g));
    w_grad[j] -= dev;
  }
  for (std::size_t j = 0; j < k; ++j) {
    double g = w_grad[j];
    if (!instance.selling) g -= d.target_nonneg[j];
    rep.stationarity_w = std::max(rep.stationarity_w, std::abs(g));
  }

  auto& comp = rep.complementarity;
  comp[ConstraintKind::NoDeficit] = max_product(d.no_deficit, sl.no_deficit);
  comp[ConstraintKind::NoOverflow] = max_product(d.no_overflow, sl.no_overflow);
  comp[ConstraintKind::ChargePeak] = max_product(d.charge_peak, sl.charge_peak);
  comp[ConstraintKind::DischargePeak] =
      max_product(d.discharge_peak, sl.discharge_peak);
  if (!instance.selling) {
    comp[ConstraintKind::OutputNonneg] =
        max_product(d.output_nonneg, sl.output_nonneg);
    comp[ConstraintKind::TargetNonneg] =
        max_product(d.target_nonneg, sl.target_nonneg);
  }

  rep.dual_sign = std::max(
      {most_negative(d.no_deficit), most_negative(d.no_overflow),
       most_negative(d.charge_peak), most_negative(d.discharge_peak),
       most_negative(d.output_nonneg), most_negative(d.target_nonneg)});

  double worst_comp = 0.0;
  for (const auto& [tag, v] : comp) worst_comp = std::max(worst_comp, v);
  rep.verdict = rep.primal_infeasibility <= tolerance &&
                rep.stationarity_y <= tolerance &&
                rep.stationarity_w <= tolerance && worst_comp <= tolerance &&
                rep.dual_sign <= tolerance;
  return rep;
}

std::vector<double> recover_targets(std::span<const double> output_kw,
                                    const Instance& instance,
                                    const Multipliers* duals) {
  const std::size_t n = instance.n_slots();
  require_size(output_kw.size(), n, "output");
  const bool constant = instance.target_mode == TargetMode::Constant;
  const std::size_t k = instance.n_targets();
  const auto& tariff = instance.tariff;

  std::vector<double> sum(k, 0.0);
  std::vector<double> count(k, 0.0);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t j = constant ? 0 : tariff.period_of(t);
    sum[j] += output_kw[t];
    count[j] += 1.0;
  }
  const bool use_duals = duals != nullptr && !instance.selling &&
                         instance.alpha > 0.0 &&
                         duals->target_nonneg.size() == k;
  std::vector<double> vars(k);
  for (std::size_t j = 0; j < k; ++j) {
    double v = sum[j] / count[j];
    if (use_duals) {
      v += static_cast<double>(n) * duals->target_nonneg[j] /
           (2.0 * instance.alpha * count[j]);
    }
    vars[j] = instance.selling ? v : std::max(0.0, v);
  }
  return targets_per_period(instance, vars);
}

std::vector<WaterfillSlot> waterfill_view(const Solution& solution,
                                          const Instance& instance,
                                          double tolerance) {
  if (!(instance.alpha > 0.0)) {
    throw ValidationError("water levels are defined for alpha > 0 only");
  }
  const std::size_t n = instance.n_slots();
  require_size(solution.output_kw.size(), n, "output");
  const std::vector<double> w = target_vars_of(solution, instance);
  const Slacks sl = slacks(solution, instance, w);
  const double alpha = instance.alpha;

  std::vector<WaterfillSlot> out(n);
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = instance.tariff.period_of(t);
    auto& s = out[t];
    s.t = t + 1;
    s.period = i;
    s.output_kw = solution.output_kw[t];
    s.water_level = s.output_kw + (1.0 - alpha) * instance.tariff.prices[i] *
                                      instance.load.slot_hours / (2.0 * alpha);
    if (sl.no_deficit[t] <= tolerance) s.active_tags.insert(ConstraintKind::NoDeficit);
    if (sl.no_overflow[t] <= tolerance) s.active_tags.insert(ConstraintKind::NoOverflow);
    if (sl.charge_peak[t] <= tolerance) s.active_tags.insert(ConstraintKind::ChargePeak);
    if (sl.discharge_peak[t] <= tolerance) {
      s.active_tags.insert(ConstraintKind::DischargePeak);
    }
    if (!instance.selling && sl.output_nonneg[t] <= tolerance) {
      s.active_tags.insert(ConstraintKind::OutputNonneg);
    }
  }
  return out;
}

}  // namespace pcdsm::kkt
