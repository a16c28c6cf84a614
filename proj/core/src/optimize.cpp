#include "pcdsm/optimize.hpp"

#include <algorithm>

#include "pcdsm/errors.hpp"

namespace pcdsm {

Multipliers multipliers_from(const qp::QpForm& qp,
                             const Eigen::VectorXd& duals) {
  if (duals.size() != static_cast<Eigen::Index>(qp.constraints.size())) {
    throw DimensionMismatch("one multiplier per row expected");
  }
  Multipliers m;
  for (std::size_t k = 0; k < qp.constraints.size(); ++k) {
    const double v = duals[static_cast<Eigen::Index>(k)];
    switch (qp.constraints[k].tag) {
      case ConstraintKind::NoDeficit: m.no_deficit.push_back(v); break;
      case ConstraintKind::NoOverflow: m.no_overflow.push_back(v); break;
      case ConstraintKind::ChargePeak: m.charge_peak.push_back(v); break;
      case ConstraintKind::DischargePeak: m.discharge_peak.push_back(v); break;
      case ConstraintKind::OutputNonneg: m.output_nonneg.push_back(v); break;
      case ConstraintKind::TargetNonneg: m.target_nonneg.push_back(v); break;
      case ConstraintKind::TotalEnergy: m.total_energy = v; break;
    }
  }
  return m;
}

Solution optimize(const Instance& instance, const OptimizeOptions& options,
                  const solver::WarmStart* warm,
                  solver::WarmStart* final_iterate) {
  validated(instance);
  const qp::QpForm qp = qp::build(instance);
  const solver::SolveResult res = solver::solve(qp, options.solver, warm);
  if (final_iterate != nullptr) *final_iterate = {res.z, res.duals};

  const qp::Decoded dec = qp::decode(qp.layout, res.z);
  Solution sol;
  sol.output_kw = dec.output_kw;
  sol.status = res.status;
  sol.iterations = res.iterations;
  Multipliers duals = multipliers_from(qp, res.duals);
  // the solver leaves bound-active outputs at -1e-15 and the like
  if (!instance.selling) {
    for (double& y : sol.output_kw) y = std::max(y, 0.0);
  }

  // A battery that can neither store nor move energy leaves Y = X as the
  // only feasible point; return it exactly rather than to solver precision.
  const auto& bat = instance.battery;
  if (bat.capacity_kwh == 0.0 ||
      (bat.charge_peak_kw == 0.0 && bat.discharge_peak_kw == 0.0)) {
    if (instance.initial_soc_kwh == 0.0) sol.output_kw = instance.load.demand_kw;
  }

  if (instance.alpha == 0.0) {
    std::fill(duals.target_nonneg.begin(), duals.target_nonneg.end(), 0.0);
    sol.targets_kw = kkt::recover_targets(sol.output_kw, instance);
  } else {
    std::vector<double> w = dec.target_vars;
    if (!instance.selling) {
      for (double& v : w) v = std::max(v, 0.0);
    }
    sol.targets_kw = targets_per_period(instance, w);
  }
  sol.soc_kwh = soc_trajectory(instance.load, sol.output_kw, bat,
                               instance.initial_soc_kwh)
                    .soc_kwh;
  sol.privacy = privacy(sol.output_kw, sol.targets_kw, instance.tariff);
  sol.cost = cost(sol.output_kw, instance.tariff, instance.load.slot_hours);
  sol.objective =
      instance.alpha * sol.privacy + (1.0 - instance.alpha) * sol.cost;
  sol.duals = std::move(duals);
  sol.kkt = kkt::check(sol, instance, options.kkt_tolerance);
  return sol;
}

}  // namespace pcdsm
