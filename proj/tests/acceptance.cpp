// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any
// criterion fails.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "pcdsm/io.hpp"
#include "pcdsm/optimize.hpp"
#include "pcdsm/oracle.hpp"
#include "pcdsm/sweep.hpp"
#include "support/instances.hpp"

namespace {

using namespace pcdsm;
namespace fs = std::filesystem;
using Clock = std::chrono::steady_clock;

constexpr double kEntryTol = 1e-4;
constexpr double kKktTol = 1e-5;
constexpr double kOracleLowerSlack = 1e-5;
constexpr double kTieTol = 1e-8;
constexpr double kFlatteningTol = 1e-6;
constexpr double kCapacityRatio = 0.05;
constexpr double kConstantPrivacyTol = 1e-10;
constexpr double kFig3aBudgetMs = 100.0;
constexpr double kOracleBudgetS = 60.0;
constexpr double kFrontierBudgetS = 30.0;
constexpr double kOracleStep = 0.5;
constexpr double kFineOracleStep = 0.25;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::string list(const std::vector<double>& v) {
  std::ostringstream s;
  s << '[';
  for (std::size_t i = 0; i < v.size(); ++i) s << (i ? "," : "") << v[i];
  s << ']';
  return s.str();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

int failures = 0;

void report(int id, const char* name, const Outcome& o) {
  std::printf("%s %d %s: %s\n", o.pass ? "PASS" : "FAIL", id, name, o.detail.c_str());
  std::fflush(stdout);
  if (!o.pass) ++failures;
}

Instance sample_day(double alpha, bool selling, TargetMode mode) {
  io::RunConfig cfg;
  cfg.load_path = fs::path(PCDSM_DATA_DIR) / "sample_day.csv";
  cfg.alpha = alpha;
  cfg.selling = selling;
  cfg.target_mode = mode;
  return io::build_instance(cfg);
}

const std::vector<double> kAlphas = {0, 0.1, 0.2, 0.3, 0.4, 0.5, 0.6, 0.7, 0.8, 0.9, 1};

// --------------------------------------------------------------------------

Outcome fig3a() {
  const Instance in = testing::worked_example(4, 2, 0.5);
  optimize(in);  // first call pays for page faults and allocator warm-up
  const auto t0 = Clock::now();
  const Solution s = optimize(in);
  const double ms = seconds_since(t0) * 1e3;

  const std::vector<double> want_y = {3, 6, 0, 3};
  const std::vector<double> want_b = {2, 4, 2, 0};
  double dy = 0, db = 0;
  for (std::size_t t = 0; t < 4; ++t) {
    dy = std::max(dy, std::abs(s.output_kw[t] - want_y[t]));
    db = std::max(db, std::abs(s.soc_kwh[t] - want_b[t]));
  }
  const bool ok = dy <= kEntryTol && db <= kEntryTol && s.kkt.verdict &&
                  ms < kFig3aBudgetMs;
  std::ostringstream d;
  d << "Y=" << list(s.output_kw) << " (want " << list(want_y) << ", max err " << dy
    << "), SOC=" << list(s.soc_kwh) << ", verdict=" << s.kkt.verdict
    << ", objective=" << s.objective << ", " << ms << " ms";
  return {ok, d.str()};
}

Outcome fig3b() {
  const Instance a = testing::worked_example(4, 2, 0.5);
  const Instance b = testing::worked_example(8, 4, 0.5);
  const auto oa = oracle::brute_force(a, {.step = kFineOracleStep});
  const auto ob = oracle::brute_force(b, {.step = kFineOracleStep});
  const Solution sa = optimize(a);
  const Solution sb = optimize(b);
  const double pa = privacy(oa.output_kw, oa.targets_kw, a.tariff);
  const double pb = privacy(ob.output_kw, ob.targets_kw, b.tariff);
  const bool ok = ob.objective < oa.objective && pb < pa;
  std::ostringstream d;
  d << "oracle objective " << ob.objective << " vs " << oa.objective << ", privacy "
    << pb << " vs " << pa << " (solver " << sb.objective << " vs " << sa.objective
    << ", privacy " << sb.privacy << " vs " << sa.privacy << ")";
  return {ok, d.str()};
}

Outcome oracle_equivalence() {
  testing::InstanceGenerator gen(2024);
  const double alphas[] = {0.0, 0.3, 0.7, 1.0};
  const auto t0 = Clock::now();
  int bad = 0;
  int misaligned = 0;
  int outside_lattice_bracket = 0;
  double worst_above = -1e300, worst_below = -1e300;
  std::string first_bad;
  for (int k = 0; k < 50; ++k) {
    Instance in = gen.instance({.min_slots = 2, .max_slots = 6, .max_periods = 2,
                                .lattice = kOracleStep, .max_demand = 5,
                                .max_capacity = 4, .max_peak = 2});
    in.alpha = alphas[k % 4];
    in.selling = (k / 4) % 2 == 1;
    const Solution s = optimize(in);
    const auto o = oracle::brute_force(in, {.step = kOracleStep, .threads = 4});
    if (!o.aligned) ++misaligned;
    const double above = s.objective - (o.objective + o.bound);
    const double below = (o.objective - kOracleLowerSlack) - s.objective;
    worst_above = std::max(worst_above, above);
    worst_below = std::max(worst_below, below);
    // reported alongside, not part of the verdict
    if (s.objective > o.objective + kOracleLowerSlack ||
        s.objective < o.objective - o.bound) {
      ++outside_lattice_bracket;
    }
    if (above > 0 || below > 0 || s.status != SolveStatus::Optimal) {
      if (bad++ == 0) {
        first_bad = "instance " + std::to_string(k) + ": solver " +
                    std::to_string(s.objective) + ", oracle " + std::to_string(o.objective);
      }
    }
  }
  const double secs = seconds_since(t0);
  std::ostringstream d;
  d << "50 instances, " << bad << " outside [oracle - " << kOracleLowerSlack
    << ", oracle + bound], max excess over upper " << worst_above << ", max excess below lower "
    << worst_below << ", " << misaligned << " misaligned, " << secs << " s; "
    << outside_lattice_bracket << " outside [oracle - bound, oracle + " << kOracleLowerSlack
    << "]";
  if (bad) d << "; first: " << first_bad;
  return {bad == 0 && misaligned == 0 && secs < kOracleBudgetS, d.str()};
}

Outcome kkt_suite() {
  testing::InstanceGenerator gen(4242);
  int optimal = 0, verified = 0;
  std::map<ConstraintKind, double> worst;
  double worst_stat = 0;
  for (int k = 0; k < 200; ++k) {
    const Instance in = gen.instance({.max_slots = 50});
    const Solution s = optimize(in, {.kkt_tolerance = kKktTol});
    if (s.status != SolveStatus::Optimal) continue;
    ++optimal;
    if (s.kkt.verdict) ++verified;
    for (const auto& [tag, v] : s.kkt.complementarity) worst[tag] = std::max(worst[tag], v);
    worst_stat = std::max({worst_stat, s.kkt.stationarity_y, s.kkt.stationarity_w});
  }
  std::ostringstream d;
  d << optimal << "/200 optimal, " << verified << " verified; max stationarity "
    << worst_stat << "; max complementarity";
  for (const auto& [tag, v] : worst) d << ' ' << to_string(tag) << '=' << v;
  return {optimal == 200 && verified == optimal, d.str()};
}

struct Sweeps {
  std::vector<sweep::FrontierPoint> piecewise;
  std::vector<sweep::FrontierPoint> constant;
  double seconds = 0;
};

Sweeps run_frontier() {
  Sweeps s;
  const auto t0 = Clock::now();
  s.piecewise = sweep::alpha_sweep(sample_day(0.5, false, TargetMode::PiecewisePerPeriod), kAlphas);
  s.constant = sweep::alpha_sweep(sample_day(0.5, false, TargetMode::Constant), kAlphas);
  s.seconds = seconds_since(t0);
  return s;
}

Outcome frontier(const Sweeps& s) {
  int p_breaks = 0, c_breaks = 0, dominance_breaks = 0, not_optimal = 0;
  const sweep::FrontierPoint* prev = nullptr;
  for (std::size_t k = 0; k < kAlphas.size(); ++k) {
    const auto& p = s.piecewise[k];
    const auto& c = s.constant[k];
    if (p.status != SolveStatus::Optimal) {
      ++not_optimal;
      continue;
    }
    if (c.status == SolveStatus::Optimal && p.objective > c.objective + kTieTol) {
      ++dominance_breaks;
    }
    // at alpha = 0 the targets are free, so P there is a convention
    if (prev != nullptr) {
      if (prev->alpha > 0 && p.privacy > prev->privacy + kTieTol) ++p_breaks;
      if (p.cost < prev->cost - kTieTol) ++c_breaks;
    }
    prev = &p;
  }
  for (const auto& c : s.constant) not_optimal += c.status != SolveStatus::Optimal;
  std::ostringstream d;
  d << "P breaks " << p_breaks << ", C breaks " << c_breaks << ", dominance breaks "
    << dominance_breaks << ", non-optimal " << not_optimal << ", P(0.1..1) "
    << s.piecewise[1].privacy << ".." << s.piecewise.back().privacy << ", C "
    << s.piecewise.front().cost << ".." << s.piecewise.back().cost << ", " << s.seconds << " s";
  const bool ok = p_breaks == 0 && c_breaks == 0 && dominance_breaks == 0 &&
                  not_optimal == 0 && s.seconds < kFrontierBudgetS;
  return {ok, d.str()};
}

Outcome selling(const Sweeps& s) {
  const auto sold =
      sweep::alpha_sweep(sample_day(0.5, true, TargetMode::PiecewisePerPeriod), kAlphas);
  int breaks = 0, not_optimal = 0;
  double worst = -1e300;
  for (std::size_t k = 0; k < kAlphas.size(); ++k) {
    if (sold[k].status != SolveStatus::Optimal ||
        s.piecewise[k].status != SolveStatus::Optimal) {
      ++not_optimal;
      continue;
    }
    const double gap = sold[k].objective - s.piecewise[k].objective;
    worst = std::max(worst, gap);
    if (gap > kTieTol) ++breaks;
  }
  const bool cheaper = sold.front().cost <= s.piecewise.front().cost;

  const std::vector<double> caps = {0, 2, 4, 6, 8, 12, 16};
  const auto cap_plain = sweep::capacity_sweep(
      sample_day(0, false, TargetMode::PiecewisePerPeriod), caps, 0.0);
  const auto cap_sold = sweep::capacity_sweep(
      sample_day(0, true, TargetMode::PiecewisePerPeriod), caps, 0.0);
  int cap_breaks = 0;
  for (std::size_t k = 0; k < caps.size(); ++k) {
    if (cap_sold[k].cost > cap_plain[k].cost + kTieTol) ++cap_breaks;
  }

  std::ostringstream d;
  d << "objective breaks " << breaks << " (max sell - plain " << worst << "), non-optimal "
    << not_optimal << ", cost at alpha=0 " << sold.front().cost << " vs "
    << s.piecewise.front().cost << ", capacity-sweep cost breaks " << cap_breaks;
  return {breaks == 0 && not_optimal == 0 && cheaper && cap_breaks == 0, d.str()};
}

Outcome capacity() {
  const std::vector<double> caps = {0, 2, 4, 6, 8, 12, 16};
  const auto pts =
      sweep::capacity_sweep(sample_day(1, false, TargetMode::PiecewisePerPeriod), caps, 1.0);
  int not_optimal = 0, breaks = 0;
  for (std::size_t k = 0; k < pts.size(); ++k) {
    not_optimal += pts[k].status != SolveStatus::Optimal;
    if (k > 0 && pts[k].privacy > pts[k - 1].privacy + kTieTol) ++breaks;
  }
  // slopes between neighbours; beyond the steepest one they must not fall
  std::vector<double> slope;
  for (std::size_t k = 0; k + 1 < pts.size(); ++k) {
    slope.push_back((pts[k + 1].privacy - pts[k].privacy) / (caps[k + 1] - caps[k]));
  }
  const std::size_t knee = static_cast<std::size_t>(
      std::min_element(slope.begin(), slope.end()) - slope.begin());
  int bends = 0;
  for (std::size_t k = knee + 1; k < slope.size(); ++k) {
    if (slope[k] - slope[k - 1] < -kFlatteningTol) ++bends;
  }
  const double ratio = pts.back().privacy / pts.front().privacy;
  std::vector<double> ps;
  for (const auto& p : pts) ps.push_back(p.privacy);
  std::ostringstream d;
  d << "P=" << list(ps) << ", P(16)/P(0)=" << ratio << ", increases " << breaks
    << ", knee at " << caps[knee] << "-" << caps[knee + 1] << " kWh, bends " << bends
    << ", non-optimal " << not_optimal;
  return {not_optimal == 0 && breaks == 0 && ratio <= kCapacityRatio && bends == 0, d.str()};
}

Outcome forcing() {
  testing::InstanceGenerator gen(8080);
  int identity_breaks = 0, runs = 0;
  for (int k = 0; k < 40; ++k) {
    Instance in = gen.instance({.max_slots = 50});
    in.battery.capacity_kwh = 0;
    const Solution s = optimize(in);
    ++runs;
    if (s.output_kw != in.load.demand_kw) ++identity_breaks;
  }
  for (double alpha : {0.0, 0.5, 1.0}) {
    Instance in = sample_day(alpha, false, TargetMode::PiecewisePerPeriod);
    in.battery.capacity_kwh = 0;
    ++runs;
    if (optimize(in).output_kw != in.load.demand_kw) ++identity_breaks;
  }

  double worst_p = 0;
  for (int k = 0; k < 40; ++k) {
    Instance in = gen.instance({.max_slots = 50});
    std::fill(in.load.demand_kw.begin(), in.load.demand_kw.end(), gen.uniform(0, 5));
    in.alpha = 1.0;
    worst_p = std::max(worst_p, optimize(in).privacy);
  }
  std::ostringstream d;
  d << identity_breaks << "/" << runs << " zero-capacity runs differ from X, max P for constant X "
    << worst_p;
  return {identity_breaks == 0 && worst_p <= kConstantPrivacyTol, d.str()};
}

Outcome determinism(const Sweeps& first, const fs::path& dir) {
  const Sweeps second = run_frontier();
  auto write = [&](const Sweeps& s, const std::string& tag) {
    const fs::path p = dir / ("frontier_piecewise_" + tag + ".csv");
    const fs::path c = dir / ("frontier_constant_" + tag + ".csv");
    io::emit(std::span<const sweep::FrontierPoint>(s.piecewise), io::Format::Csv, p);
    io::emit(std::span<const sweep::FrontierPoint>(s.constant), io::Format::Csv, c);
    return std::make_pair(p, c);
  };
  auto slurp = [](const fs::path& p) {
    std::ifstream in(p, std::ios::binary);
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
  };
  const auto [p1, c1] = write(first, "1");
  const auto [p2, c2] = write(second, "2");
  const bool same = slurp(p1) == slurp(p2) && slurp(c1) == slurp(c2);
  return {same, same ? "frontier files byte-identical across two runs"
                     : "frontier files differ between runs"};
}

}  // namespace

int main() {
  const fs::path dir = fs::temp_directory_path() / "pcdsm_acceptance";
  fs::create_directories(dir);

  report(1, "worked example, small battery", fig3a());
  report(2, "worked example, larger battery", fig3b());
  report(3, "oracle equivalence", oracle_equivalence());
  report(4, "KKT property suite", kkt_suite());
  const Sweeps frontier_run = run_frontier();
  report(5, "frontier monotonicity", frontier(frontier_run));
  report(6, "selling dominance", selling(frontier_run));
  report(7, "capacity monotonicity", capacity());
  report(8, "trivial forcing", forcing());
  report(9, "determinism", determinism(frontier_run, dir));

  fs::remove_all(dir);
  std::printf("%d criteria failed\n", failures);
  return failures == 0 ? 0 : 1;
}
