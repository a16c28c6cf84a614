#include "pcdsm/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <functional>
#include <thread>

#include "pcdsm/errors.hpp"

namespace pcdsm::sweep {

namespace {

struct Outcome {
  double privacy = 0.0;
  double cost = 0.0;
  double objective = 0.0;
  SolveStatus status = SolveStatus::MaxIterations;
  int iterations = 0;
  std::string error;
};

Outcome run_one(const Instance& instance, const OptimizeOptions& options,
                solver::WarmStart* warm) {
  Outcome o;
  try {
    solver::WarmStart next;
    const bool usable = warm != nullptr && warm->z.size() > 0;
    const Solution s = optimize(instance, options, usable ? warm : nullptr,
                                warm != nullptr ? &next : nullptr);
    if (warm != nullptr) *warm = std::move(next);
    o.privacy = s.privacy;
    o.cost = s.cost;
    o.objective = s.objective;
    o.iterations = s.iterations;
    o.status = s.status;
    if (o.status == SolveStatus::Optimal && !s.kkt.verdict) {
      o.status = SolveStatus::MaxIterations;
    }
  } catch (const std::exception& e) {
    o.error = e.what();
    if (warm != nullptr) *warm = {};
  }
  return o;
}

std::vector<Outcome> run_all(const std::vector<Instance>& instances,
                             const SweepOptions& options) {
  std::vector<Outcome> out(instances.size());
  if (options.mode == Mode::Sequential) {
    solver::WarmStart warm;
    for (std::size_t i = 0; i < instances.size(); ++i) {
      out[i] = run_one(instances[i], options.optimize, &warm);
    }
    return out;
  }
  unsigned workers = options.threads != 0 ? options.threads
                                          : std::thread::hardware_concurrency();
  workers = std::max(1u, std::min<unsigned>(
                             workers, static_cast<unsigned>(instances.size())));
  std::atomic<std::size_t> next{0};
  auto work = [&] {
    for (std::size_t i = next++; i < instances.size(); i = next++) {
      out[i] = run_one(instances[i], options.optimize, nullptr);
    }
  };
  std::vector<std::thread> pool;
  for (unsigned w = 1; w < workers; ++w) pool.emplace_back(work);
  work();
  for (auto& th : pool) th.join();
  return out;
}

}  // namespace

std::vector<FrontierPoint> alpha_sweep(const Instance& base,
                                       std::span<const double> alphas,
                                       const SweepOptions& options) {
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    if (!(alphas[i] >= 0.0 && alphas[i] <= 1.0)) {
      throw ValidationError("sweep weights must lie in [0, 1]");
    }
    if (i > 0 && alphas[i] < alphas[i - 1]) {
      throw ValidationError("sweep weights must be sorted");
    }
  }
  std::vector<Instance> instances(alphas.size(), base);
  for (std::size_t i = 0; i < alphas.size(); ++i) instances[i].alpha = alphas[i];

  const std::vector<Outcome> res = run_all(instances, options);
  std::vector<FrontierPoint> points(alphas.size());
  for (std::size_t i = 0; i < alphas.size(); ++i) {
    auto& p = points[i];
    p.alpha = alphas[i];
    p.privacy = res[i].privacy;
    p.cost = res[i].cost;
    p.objective = res[i].objective;
    p.status = res[i].status;
    p.iterations = res[i].iterations;
    p.error = res[i].error;
  }
  return points;
}

Instance with_capacity(const Instance& base, double capacity_kwh) {
  Instance in = base;
  in.battery.capacity_kwh = capacity_kwh;
  in.battery.charge_peak_kw = capacity_kwh / 2.0;
  in.battery.discharge_peak_kw = capacity_kwh / 2.0;
  return in;
}

std::vector<CapacitySweepPoint> capacity_sweep(
    const Instance& base, std::span<const double> capacities, double alpha,
    const SweepOptions& options) {
  if (!(alpha >= 0.0 && alpha <= 1.0)) {
    throw ValidationError("alpha must lie in [0, 1]");
  }
  for (double c : capacities) {
    if (!(c >= 0.0) || !std::isfinite(c)) {
      throw ValidationError("capacities must be finite and non-negative");
    }
  }
  std::vector<Instance> instances;
  instances.reserve(capacities.size());
  for (double c : capacities) {
    instances.push_back(with_capacity(base, c));
    instances.back().alpha = alpha;
  }

  const std::vector<Outcome> res = run_all(instances, options);
  std::vector<CapacitySweepPoint> points(capacities.size());
  for (std::size_t i = 0; i < capacities.size(); ++i) {
    auto& p = points[i];
    p.capacity_kwh = capacities[i];
    p.charge_peak_kw = instances[i].battery.charge_peak_kw;
    p.discharge_peak_kw = instances[i].battery.discharge_peak_kw;
    p.alpha = alpha;
    p.privacy = res[i].privacy;
    p.cost = res[i].cost;
    p.objective = res[i].objective;
    p.status = res[i].status;
    p.iterations = res[i].iterations;
    p.error = res[i].error;
  }
  return points;
}

}  // namespace pcdsm::sweep
