// pcdsm: battery scheduling for load privacy and cost.
//
//   pcdsm solve --load day.csv --alpha 0.5 --out day.json --format json
//   pcdsm sweep-alpha --load day.csv --alphas 0,0.5,1 --out frontier.csv
//   pcdsm sweep-capacity --load day.csv --capacities 0,4,8 --alpha 1 --out cap.csv
//   pcdsm verify --solution day.json

#include <CLI11.hpp>

#include <cstdio>
#include <iostream>

#include "pcdsm/io.hpp"
#include "pcdsm/kkt.hpp"
#include "pcdsm/optimize.hpp"
#include "pcdsm/sweep.hpp"

namespace {

enum Exit { kOk = 0, kValidation = 2, kNotOptimal = 3, kIo = 4 };

struct InputOptions {
  std::string load;
  double resample = 1.0;
  std::string tariff = "tide-uk";
  std::string battery = "powervault-g200";
  bool sell = false;
  std::string target = "piecewise";
  std::string out;
  std::string format = "csv";
  int max_iter = 0;
};

void add_input_options(CLI::App* cmd, InputOptions& o) {
  cmd->add_option("--load", o.load, "Load CSV (index,kw or timestamp,kw)")
      ->required();
  cmd->add_option("--resample", o.resample, "Slot length in minutes")
      ->capture_default_str();
  cmd->add_option("--tariff", o.tariff,
                  "Preset, flat price, or HH:MM=price,... (pence/kWh)")
      ->capture_default_str();
  cmd->add_option("--battery", o.battery,
                  "Preset or capacity_kwh,charge_kw,discharge_kw")
      ->capture_default_str();
  cmd->add_flag("--sell", o.sell, "Allow exporting energy to the grid");
  cmd->add_option("--target", o.target, "Target shape")
      ->check(CLI::IsMember({"constant", "piecewise"}))
      ->capture_default_str();
  cmd->add_option("--out", o.out, "Output file")->required();
  cmd->add_option("--format", o.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}))
      ->capture_default_str();
  cmd->add_option("--max-iter", o.max_iter, "Solver iteration limit");
}

pcdsm::io::RunConfig config_from(const InputOptions& o) {
  pcdsm::io::RunConfig c;
  c.load_path = o.load;
  c.resample_minutes = o.resample;
  c.tariff = o.tariff;
  c.battery = o.battery;
  c.selling = o.sell;
  c.target_mode = o.target == "constant"
                      ? pcdsm::TargetMode::Constant
                      : pcdsm::TargetMode::PiecewisePerPeriod;
  c.output_path = o.out;
  c.output_format = pcdsm::io::parse_format(o.format);
  return c;
}

pcdsm::OptimizeOptions optimize_options(const InputOptions& o) {
  pcdsm::OptimizeOptions opt;
  if (o.max_iter > 0) opt.solver.max_iter = o.max_iter;
  return opt;
}

void print_report(const pcdsm::KktReport& r) {
  std::printf("duals present          %s\n", r.duals_present ? "yes" : "no");
  std::printf("primal infeasibility   %.3e\n", r.primal_infeasibility);
  if (r.duals_present) {
    std::printf("stationarity (output)  %.3e\n", r.stationarity_y);
    std::printf("stationarity (target)  %.3e\n", r.stationarity_w);
    for (const auto& [kind, v] : r.complementarity) {
      std::printf("complementarity %-14s %.3e\n", pcdsm::to_string(kind).c_str(), v);
    }
    std::printf("multiplier sign        %.3e\n", r.dual_sign);
  }
  std::printf("tolerance              %.1e\n", r.tolerance);
  std::printf("verdict                %s\n", r.verdict ? "true" : "false");
}

int run_solve(const InputOptions& o, double alpha) {
  auto cfg = config_from(o);
  cfg.alpha = alpha;
  const pcdsm::Instance in = pcdsm::io::build_instance(cfg);
  const pcdsm::Solution s = pcdsm::optimize(in, optimize_options(o));
  pcdsm::io::emit(in, s, cfg.output_format, cfg.output_path);
  std::printf("status %s, %d iterations, objective %.9g (privacy %.9g, cost %.9g)\n",
              pcdsm::to_string(s.status).c_str(), s.iterations, s.objective,
              s.privacy, s.cost);
  return s.status == pcdsm::SolveStatus::Optimal && s.kkt.verdict ? kOk
                                                                    : kNotOptimal;
}

template <class Point>
int sweep_exit(const std::vector<Point>& points) {
  int bad = 0;
  for (const auto& p : points) {
    if (p.status != pcdsm::SolveStatus::Optimal) {
      ++bad;
      if (!p.error.empty()) std::fprintf(stderr, "point failed: %s\n", p.error.c_str());
    }
  }
  std::printf("%zu points, %d not optimal\n", points.size(), bad);
  return bad == 0 ? kOk : kNotOptimal;
}

pcdsm::sweep::SweepOptions sweep_options(const InputOptions& o,
                                         const std::string& mode,
                                         unsigned threads) {
  pcdsm::sweep::SweepOptions so;
  so.optimize = optimize_options(o);
  so.mode = mode == "concurrent" ? pcdsm::sweep::Mode::Concurrent
                                 : pcdsm::sweep::Mode::Sequential;
  so.threads = threads;
  return so;
}

int run_sweep_alpha(const InputOptions& o, const std::vector<double>& alphas,
                    const pcdsm::sweep::SweepOptions& so) {
  auto cfg = config_from(o);
  cfg.alphas = alphas;
  const pcdsm::Instance base = pcdsm::io::build_instance(cfg);
  const auto points = pcdsm::sweep::alpha_sweep(base, alphas, so);
  pcdsm::io::emit(std::span<const pcdsm::sweep::FrontierPoint>(points),
                  cfg.output_format, cfg.output_path);
  return sweep_exit(points);
}

int run_sweep_capacity(const InputOptions& o,
                       const std::vector<double>& capacities, double alpha,
                       const pcdsm::sweep::SweepOptions& so) {
  auto cfg = config_from(o);
  cfg.alpha = alpha;
  const pcdsm::Instance base = pcdsm::io::build_instance(cfg);
  const auto points = pcdsm::sweep::capacity_sweep(base, capacities, alpha, so);
  pcdsm::io::emit(std::span<const pcdsm::sweep::CapacitySweepPoint>(points),
                  cfg.output_format, cfg.output_path);
  return sweep_exit(points);
}

int run_verify(const std::string& path, double tol) {
  const auto file = pcdsm::io::read_solution_json(path);
  const pcdsm::KktReport r =
      pcdsm::kkt::check(file.solution, pcdsm::validated(file.instance), tol);
  print_report(r);
  return r.verdict ? kOk : kNotOptimal;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Battery scheduling for smart-meter privacy and cost"};
  app.require_subcommand(1);

  InputOptions solve_in;
  double alpha = 0.5;
  auto* solve = app.add_subcommand("solve", "Solve one instance");
  add_input_options(solve, solve_in);
  solve->add_option("--alpha", alpha, "Privacy weight in [0, 1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();

  InputOptions sa_in;
  std::vector<double> alphas;
  std::string sa_mode = "sequential";
  unsigned sa_threads = 0;
  auto* sweep_alpha = app.add_subcommand("sweep-alpha", "Privacy/cost frontier");
  add_input_options(sweep_alpha, sa_in);
  sweep_alpha->add_option("--alphas", alphas, "Sorted weights, comma separated")
      ->delimiter(',')
      ->required();
  sweep_alpha->add_option("--mode", sa_mode, "Solve order")
      ->check(CLI::IsMember({"sequential", "concurrent"}))
      ->capture_default_str();
  sweep_alpha->add_option("--threads", sa_threads, "Workers in concurrent mode");

  InputOptions sc_in;
  std::vector<double> capacities;
  double sc_alpha = 1.0;
  std::string sc_mode = "sequential";
  unsigned sc_threads = 0;
  auto* sweep_cap = app.add_subcommand(
      "sweep-capacity", "Battery size sweep with peak powers at half capacity");
  add_input_options(sweep_cap, sc_in);
  sweep_cap->add_option("--capacities", capacities, "Capacities in kWh")
      ->delimiter(',')
      ->required();
  sweep_cap->add_option("--alpha", sc_alpha, "Privacy weight in [0, 1]")
      ->check(CLI::Range(0.0, 1.0))
      ->capture_default_str();
  sweep_cap->add_option("--mode", sc_mode, "Solve order")
      ->check(CLI::IsMember({"sequential", "concurrent"}))
      ->capture_default_str();
  sweep_cap->add_option("--threads", sc_threads, "Workers in concurrent mode");

  std::string solution_path;
  double tol = pcdsm::kkt::kDefaultTolerance;
  auto* verify = app.add_subcommand("verify", "Check the optimality of a JSON solution");
  verify->add_option("--solution", solution_path, "Solution JSON")->required();
  verify->add_option("--tol", tol, "Residual tolerance")->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kValidation;
  }

  try {
    if (*solve) return run_solve(solve_in, alpha);
    if (*sweep_alpha) {
      return run_sweep_alpha(sa_in, alphas, sweep_options(sa_in, sa_mode, sa_threads));
    }
    if (*sweep_cap) {
      return run_sweep_capacity(sc_in, capacities, sc_alpha,
                                sweep_options(sc_in, sc_mode, sc_threads));
    }
    if (*verify) return run_verify(solution_path, tol);
  } catch (const pcdsm::IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIo;
  } catch (const pcdsm::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kValidation;
  }
  return kValidation;
}
