#include "pcdsm/qp.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pcdsm/errors.hpp"

namespace pcdsm::qp {

QpForm build(const Instance& instance) {
  const std::size_t n = instance.n_slots();
  const std::size_t k = instance.n_targets();
  const double nd = static_cast<double>(n);
  const double delta = instance.load.slot_hours;
  const double alpha = instance.alpha;
  const auto& x = instance.load.demand_kw;
  const auto& bat = instance.battery;
  const double b0 = instance.initial_soc_kwh;
  const bool constant = instance.target_mode == TargetMode::Constant;

  QpForm qp;
  qp.layout = {n, k};
  const Eigen::Index nv = qp.layout.n_vars();

  // Objective: (1/N) sum_t [alpha (Y_t - W_i(t))^2 + (1 - alpha) C_i(t) Y_t delta]
  std::vector<Eigen::Triplet<double>> trips;
  qp.linear = Eigen::VectorXd::Zero(nv);
  const double h = 2.0 * alpha / nd;
  for (std::size_t i = 0; i < instance.n_periods(); ++i) {
    const Eigen::Index w = qp.layout.w(constant ? 0 : i);
    const double lin = (1.0 - alpha) * instance.tariff.prices[i] * delta / nd;
    for (std::size_t t = instance.tariff.period_begin(i);
         t < instance.tariff.period_end(i); ++t) {
      const Eigen::Index y = qp.layout.y(t);
      qp.linear[y] = lin;
      if (alpha > 0.0) {
        trips.emplace_back(y, y, h);
        trips.emplace_back(y, w, -h);
        trips.emplace_back(w, y, -h);
        trips.emplace_back(w, w, h);
      }
    }
  }
  qp.quadratic.resize(nv, nv);
  qp.quadratic.setFromTriplets(trips.begin(), trips.end());
  qp.quadratic.makeCompressed();

  auto& rows = qp.constraints;
  rows.reserve(4 * n + (instance.selling ? 0 : n + k) + 1);

  std::vector<double> prefix_x(n);
  double acc = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    acc += x[t];
    prefix_x[t] = acc;
  }

  auto prefix_row = [&](std::size_t t, double coef) {
    ConstraintRow row;
    row.coeffs.reserve(t + 1);
    for (std::size_t tau = 0; tau <= t; ++tau) {
      row.coeffs.push_back({qp.layout.y(tau), coef});
    }
    row.index = t;
    return row;
  };

  // -delta * sum_{tau<=t} (Y - X) <= B0
  for (std::size_t t = 0; t < n; ++t) {
    auto row = prefix_row(t, -delta);
    row.rhs = b0 - delta * prefix_x[t];
    row.tag = ConstraintKind::NoDeficit;
    rows.push_back(std::move(row));
  }
  // delta * sum_{tau<=t} (Y - X) <= Bmax - B0
  for (std::size_t t = 0; t < n; ++t) {
    auto row = prefix_row(t, delta);
    row.rhs = bat.capacity_kwh - b0 + delta * prefix_x[t];
    row.tag = ConstraintKind::NoOverflow;
    rows.push_back(std::move(row));
  }
  auto single = [&](Eigen::Index col, double coef, double rhs,
                    ConstraintKind tag, std::size_t index) {
    ConstraintRow row;
    row.coeffs = {{col, coef}};
    row.rhs = rhs;
    row.tag = tag;
    row.index = index;
    rows.push_back(std::move(row));
  };
  for (std::size_t t = 0; t < n; ++t) {
    single(qp.layout.y(t), 1.0, x[t] + bat.charge_peak_kw,
           ConstraintKind::ChargePeak, t);
  }
  for (std::size_t t = 0; t < n; ++t) {
    single(qp.layout.y(t), -1.0, bat.discharge_peak_kw - x[t],
           ConstraintKind::DischargePeak, t);
  }
  if (!instance.selling) {
    for (std::size_t t = 0; t < n; ++t) {
      single(qp.layout.y(t), -1.0, 0.0, ConstraintKind::OutputNonneg, t);
    }
    for (std::size_t j = 0; j < k; ++j) {
      single(qp.layout.w(j), -1.0, 0.0, ConstraintKind::TargetNonneg, j);
    }
  }
  ConstraintRow total = prefix_row(n - 1, 1.0);
  total.relation = Relation::EQ;
  total.rhs = prefix_x[n - 1] - b0 / delta;
  total.tag = ConstraintKind::TotalEnergy;
  total.index = 0;
  rows.push_back(std::move(total));
  return qp;
}

double objective_at(const QpForm& qp, const Eigen::VectorXd& z) {
  if (z.size() != qp.n_vars()) {
    throw DimensionMismatch("objective_at: z has " + std::to_string(z.size()) +
                            " entries, expected " +
                            std::to_string(qp.n_vars()));
  }
  return 0.5 * z.dot(qp.quadratic * z) + qp.linear.dot(z);
}

Eigen::VectorXd encode(const VarLayout& layout,
                       std::span<const double> output_kw,
                       std::span<const double> target_vars) {
  if (output_kw.size() != layout.n_slots ||
      target_vars.size() != layout.n_targets) {
    throw DimensionMismatch("encode: sizes do not match layout");
  }
  Eigen::VectorXd z(layout.n_vars());
  for (std::size_t t = 0; t < layout.n_slots; ++t) z[layout.y(t)] = output_kw[t];
  for (std::size_t j = 0; j < layout.n_targets; ++j) {
    z[layout.w(j)] = target_vars[j];
  }
  return z;
}

Decoded decode(const VarLayout& layout, const Eigen::VectorXd& z) {
  if (z.size() != layout.n_vars()) {
    throw DimensionMismatch("decode: z does not match layout");
  }
  Decoded d;
  d.output_kw.assign(z.data(), z.data() + layout.n_slots);
  d.target_vars.assign(z.data() + layout.n_slots, z.data() + z.size());
  return d;
}

double row_activity(const ConstraintRow& row, const Eigen::VectorXd& z) {
  double s = 0.0;
  for (const auto& e : row.coeffs) s += e.value * z[e.col];
  return s;
}

double row_violation(const ConstraintRow& row, const Eigen::VectorXd& z) {
  const double r = row_activity(row, z) - row.rhs;
  return row.relation == Relation::EQ ? std::abs(r) : std::max(0.0, r);
}

double max_violation(const QpForm& qp, const Eigen::VectorXd& z) {
  double worst = 0.0;
  for (const auto& row : qp.constraints) {
    worst = std::max(worst, row_violation(row, z));
  }
  return worst;
}

Eigen::VectorXd lagrangian_gradient(const QpForm& qp, const Eigen::VectorXd& z,
                                    const Eigen::VectorXd& duals) {
  Eigen::VectorXd g = qp.quadratic * z + qp.linear;
  for (std::size_t k = 0; k < qp.constraints.size(); ++k) {
    const double lam = duals[static_cast<Eigen::Index>(k)];
    if (lam == 0.0) continue;
    for (const auto& e : qp.constraints[k].coeffs) g[e.col] += lam * e.value;
  }
  return g;
}

}  // namespace pcdsm::qp
