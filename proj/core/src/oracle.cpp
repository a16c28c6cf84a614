#include "pcdsm/oracle.hpp"

#include <algorithm>
#include <cmath>
#include <future>
#include <limits>
#include <optional>

#include "pcdsm/errors.hpp"

namespace pcdsm::oracle {

namespace {

constexpr double kSnap = 1e-9;

long floor_div(double v, double step) {
  return static_cast<long>(std::floor(v / step + kSnap));
}

long ceil_div(double v, double step) {
  return static_cast<long>(std::ceil(v / step - kSnap));
}

bool is_multiple(double v, double step) {
  const double r = v / step;
  return std::abs(r - std::round(r)) <= kSnap * std::max(1.0, std::abs(r));
}

struct Problem {
  const Instance* in = nullptr;
  double step = 0.0;
  std::size_t n = 0;
  std::vector<long> k_lo;
  std::vector<long> k_hi;
  long level_max = 0;
  /// Largest total discharge (in steps) possible over slots t+1..N.
  std::vector<long> drain_after;
  std::uint64_t budget = 0;
};

struct Best {
  std::vector<long> k;
  double objective = std::numeric_limits<double>::infinity();
  std::uint64_t evaluations = 0;
  bool over_budget = false;
};

std::vector<double> schedule(const Problem& p, const std::vector<long>& k) {
  std::vector<double> y(p.n);
  for (std::size_t t = 0; t < p.n; ++t) {
    y[t] = p.in->load.demand_kw[t] + static_cast<double>(k[t]) * p.step;
  }
  return y;
}

std::vector<double> best_targets(const Instance& in, const std::vector<double>& y) {
  const bool constant = in.target_mode == TargetMode::Constant;
  const std::size_t k = in.n_targets();
  std::vector<double> sum(k, 0.0);
  std::vector<double> cnt(k, 0.0);
  for (std::size_t t = 0; t < y.size(); ++t) {
    const std::size_t j = constant ? 0 : in.tariff.period_of(t);
    sum[j] += y[t];
    cnt[j] += 1.0;
  }
  std::vector<double> vars(k);
  for (std::size_t j = 0; j < k; ++j) {
    const double mean = sum[j] / cnt[j];
    vars[j] = in.selling ? mean : std::max(0.0, mean);
  }
  return targets_per_period(in, vars);
}

double evaluate(const Instance& in, const std::vector<double>& y) {
  const std::vector<double> w = best_targets(in, y);
  const double p = privacy(y, w, in.tariff);
  const double c = cost(y, in.tariff, in.load.slot_hours);
  return in.alpha * p + (1.0 - in.alpha) * c;
}

bool improves(double candidate, double incumbent) {
  if (!std::isfinite(incumbent)) return true;
  return candidate < incumbent - 1e-12 * std::max(1.0, std::abs(incumbent));
}

void search(const Problem& p, std::size_t t, long level, std::vector<long>& k,
            Best& best) {
  if (best.over_budget) return;
  if (t == p.n) {
    if (level != 0) return;
    if (++best.evaluations > p.budget) {
      best.over_budget = true;
      return;
    }
    const double obj = evaluate(*p.in, schedule(p, k));
    if (improves(obj, best.objective)) {
      best.objective = obj;
      best.k = k;
    }
    return;
  }
  for (long kt = p.k_lo[t]; kt <= p.k_hi[t]; ++kt) {
    const long next = level + kt;
    if (next < 0) continue;
    if (next > p.level_max) break;
    if (next > p.drain_after[t]) break;
    k[t] = kt;
    search(p, t + 1, next, k, best);
    if (best.over_budget) return;
  }
}

Best search_from(const Problem& p, long k0) {
  Best best;
  std::vector<long> k(p.n, 0);
  if (k0 < 0 || k0 > p.level_max || k0 > p.drain_after[0]) return best;
  k[0] = k0;
  search(p, 1, k0, k, best);
  return best;
}

}  // namespace

OracleResult brute_force(const Instance& instance, const GridSpec& grid) {
  validated(instance);
  if (!(grid.step > 0.0) || !std::isfinite(grid.step)) {
    throw ValidationError("grid step must be positive");
  }
  if (instance.initial_soc_kwh != 0.0) {
    throw ValidationError("the lattice search assumes an empty initial battery");
  }
  const std::size_t n = instance.n_slots();
  if (n > kMaxSlots) {
    throw BudgetExceeded("lattice search supports at most " +
                         std::to_string(kMaxSlots) + " slots");
  }

  const auto& x = instance.load.demand_kw;
  const auto& bat = instance.battery;
  const double delta = instance.load.slot_hours;

  Problem p;
  p.in = &instance;
  p.step = grid.step;
  p.n = n;
  p.budget = grid.budget;
  p.k_lo.resize(n);
  p.k_hi.resize(n);
  for (std::size_t t = 0; t < n; ++t) {
    long lo = -floor_div(bat.discharge_peak_kw, grid.step);
    if (!instance.selling) lo = std::max(lo, ceil_div(-x[t], grid.step));
    p.k_lo[t] = lo;
    p.k_hi[t] = floor_div(bat.charge_peak_kw, grid.step);
  }
  p.level_max = floor_div(bat.capacity_kwh, delta * grid.step);
  p.drain_after.assign(n, 0);
  long drain = 0;
  for (std::size_t t = n; t-- > 0;) {
    p.drain_after[t] = drain;
    drain += std::max(0L, -p.k_lo[t]);
  }

  // Split on the first slot so workers never share state; the reduction
  // below visits k0 in increasing order, which keeps the lexicographic
  // tie-break independent of the thread count.
  std::vector<long> firsts;
  for (long k0 = p.k_lo[0]; k0 <= p.k_hi[0]; ++k0) firsts.push_back(k0);
  std::vector<Best> parts(firsts.size());
  const unsigned threads = std::max(1u, grid.threads);
  if (threads == 1) {
    for (std::size_t i = 0; i < firsts.size(); ++i) {
      parts[i] = search_from(p, firsts[i]);
    }
  } else {
    for (std::size_t begin = 0; begin < firsts.size(); begin += threads) {
      std::vector<std::future<Best>> jobs;
      const std::size_t end = std::min(firsts.size(), begin + threads);
      for (std::size_t i = begin; i < end; ++i) {
        jobs.push_back(std::async(std::launch::async, search_from, std::cref(p),
                                  firsts[i]));
      }
      for (std::size_t i = begin; i < end; ++i) parts[i] = jobs[i - begin].get();
    }
  }

  Best best;
  for (const Best& part : parts) {
    best.evaluations += part.evaluations;
    if (part.over_budget || best.evaluations > grid.budget) {
      throw BudgetExceeded("lattice search exceeded " +
                           std::to_string(grid.budget) + " evaluations");
    }
    if (!part.k.empty() && improves(part.objective, best.objective)) {
      best.objective = part.objective;
      best.k = part.k;
    }
  }
  if (best.k.empty()) {
    throw ValidationError("no lattice schedule satisfies the constraints");
  }

  OracleResult out;
  out.output_kw = schedule(p, best.k);
  out.targets_kw = best_targets(instance, out.output_kw);
  out.objective = best.objective;
  out.evaluations = best.evaluations;

  double y_max = 0.0;
  double y_min = 0.0;
  double c_max = 0.0;
  for (std::size_t t = 0; t < n; ++t) {
    y_max = std::max(y_max, x[t] + bat.charge_peak_kw);
    y_min = std::min(y_min, instance.selling ? x[t] - bat.discharge_peak_kw
                                             : std::max(0.0, x[t] - bat.discharge_peak_kw));
    c_max = std::max(c_max, instance.tariff.price_at(t));
  }
  const double spread = y_max - y_min;
  out.bound = grid.step * (2.0 * instance.alpha * spread +
                           (1.0 - instance.alpha) * delta * c_max);
  out.aligned = is_multiple(bat.charge_peak_kw, grid.step) &&
                is_multiple(bat.discharge_peak_kw, grid.step) &&
                std::all_of(x.begin(), x.end(),
                            [&](double v) { return is_multiple(v, grid.step); });
  return out;
}

}  // namespace pcdsm::oracle
