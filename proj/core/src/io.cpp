#include "pcdsm/io.hpp"

#include <json.hpp>

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace pcdsm::io {

using nlohmann::json;

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) {
    s.remove_suffix(1);
  }
  return s;
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> out;
  for (;;) {
    const auto pos = s.find(sep);
    out.push_back(trim(s.substr(0, pos)));
    if (pos == std::string_view::npos) return out;
    s.remove_prefix(pos + 1);
  }
}

std::optional<double> to_double(std::string_view s) {
  double v = 0.0;
  const auto [end, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || end != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

double require_double(std::string_view s, const std::string& what) {
  const auto v = to_double(s);
  if (!v) throw ValidationError("cannot parse " + what + " '" + std::string(s) + "'");
  return *v;
}

// Number of whole slots in `minutes`, or nullopt when the grid does not
// divide it.
std::optional<std::size_t> whole_slots(double minutes, double slot_minutes) {
  const double k = minutes / slot_minutes;
  const double r = std::round(k);
  if (std::abs(k - r) > 1e-9 * std::max(1.0, r)) return std::nullopt;
  return static_cast<std::size_t>(r);
}

std::string fmt(double v) {
  if (v == 0.0) v = 0.0;  // no "-0"
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw IoError("cannot read '" + path.string() + "'");
  return ss.str();
}

}  // namespace

// ---------------------------------------------------------------------------
// Load

LoadProfile parse_load(const std::string& csv, double resample_minutes) {
  if (!(resample_minutes > 0.0) || !std::isfinite(resample_minutes)) {
    throw ValidationError("resample interval must be positive");
  }
  std::vector<std::string_view> lines;
  for (std::string_view s = csv; !s.empty();) {
    const auto pos = s.find('\n');
    const auto line = trim(s.substr(0, pos));
    if (!line.empty()) lines.push_back(line);
    if (pos == std::string_view::npos) break;
    s.remove_prefix(pos + 1);
  }
  if (lines.empty()) throw LoadFileError(LoadErrorKind::EmptyFile, 0, "load file is empty");

  const auto header = split(lines.front(), ',');
  if (header.size() != 2 || (header[0] != "index" && header[0] != "timestamp") ||
      header[1] != "kw") {
    throw LoadFileError(LoadErrorKind::BadHeader, 0,
                        "load header must be 'index,kw' or 'timestamp,kw'");
  }
  const bool by_index = header[0] == "index";
  if (lines.size() == 1) {
    throw LoadFileError(LoadErrorKind::EmptyFile, 0, "load file has no readings");
  }

  const double bucket_seconds = resample_minutes * 60.0;
  std::vector<double> sum;
  std::vector<std::size_t> count;
  double origin = 0.0;
  double last = 0.0;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto cells = split(lines[r], ',');
    const auto time = cells.size() == 2 ? to_double(cells[0]) : std::nullopt;
    const auto kw = cells.size() == 2 ? to_double(cells[1]) : std::nullopt;
    if (!time || !kw) {
      throw LoadFileError(LoadErrorKind::BadRow, r,
                          "malformed load row " + std::to_string(r));
    }
    const double seconds = by_index ? *time * kSampleSeconds : *time;
    if (r == 1) {
      origin = seconds;
    } else if (!(seconds > last)) {
      throw LoadFileError(LoadErrorKind::NonMonotoneTimestamps, r,
                          "load row " + std::to_string(r) + " is not after the previous one");
    }
    last = seconds;
    if (*kw < 0.0) {
      throw LoadFileError(LoadErrorKind::NegativeReading, r,
                          "negative reading in load row " + std::to_string(r));
    }
    const auto b = static_cast<std::size_t>(
        std::floor((seconds - origin) / bucket_seconds + 1e-9));
    if (b >= sum.size()) {
      sum.resize(b + 1, 0.0);
      count.resize(b + 1, 0);
    }
    sum[b] += *kw;
    ++count[b];
  }

  LoadProfile load;
  load.slot_hours = resample_minutes / 60.0;
  load.demand_kw.resize(sum.size());
  for (std::size_t b = 0; b < sum.size(); ++b) {
    if (count[b] == 0) {
      throw LoadFileError(LoadErrorKind::MissingBucket, 0,
                          "no readings in slot " + std::to_string(b + 1));
    }
    load.demand_kw[b] = sum[b] / static_cast<double>(count[b]);
  }
  return load;
}

LoadProfile ingest_load(const std::filesystem::path& path,
                        double resample_minutes) {
  return parse_load(read_text(path), resample_minutes);
}

// ---------------------------------------------------------------------------
// Presets

BatterySpec preset_battery(const std::string& name) {
  if (name == "powervault-g200") return {4.0, 1.2, 1.4};
  if (name == "tesla-powerwall-2") return {13.5, 5.0, 5.0};
  throw UnknownPreset(name);
}

BatterySpec parse_battery(const std::string& spec) {
  if (spec.find(',') == std::string::npos) return preset_battery(spec);
  const auto cells = split(spec, ',');
  if (cells.size() != 3) {
    throw ValidationError("battery must be 'capacity_kwh,charge_kw,discharge_kw'");
  }
  return {require_double(cells[0], "battery capacity"),
          require_double(cells[1], "charge peak"),
          require_double(cells[2], "discharge peak")};
}

namespace {

constexpr const char* kTideUk =
    "00:00=4.99,06:00=11.99,16:00=24.99,19:00=11.99,23:00=4.99";

struct ChangePoint {
  double minute;
  double price;
};

std::vector<ChangePoint> parse_schedule(const std::string& spec) {
  std::vector<ChangePoint> out;
  for (const auto entry : split(spec, ',')) {
    const auto eq = entry.find('=');
    const auto colon = entry.find(':');
    if (eq == std::string_view::npos || colon == std::string_view::npos ||
        colon > eq) {
      throw ValidationError("tariff entries must read HH:MM=price");
    }
    const double hh = require_double(entry.substr(0, colon), "hour");
    const double mm = require_double(entry.substr(colon + 1, eq - colon - 1), "minute");
    const double price = require_double(entry.substr(eq + 1), "price");
    if (hh < 0 || hh >= 24 || mm < 0 || mm >= 60) {
      throw ValidationError("tariff time out of range in '" + std::string(entry) + "'");
    }
    out.push_back({hh * 60.0 + mm, price});
  }
  if (out.front().minute != 0.0) {
    throw ValidationError("tariff schedule must start at 00:00");
  }
  for (std::size_t k = 1; k < out.size(); ++k) {
    if (!(out[k].minute > out[k - 1].minute)) {
      throw ValidationError("tariff change points must increase");
    }
  }
  return out;
}

}  // namespace

Tariff parse_tariff(const std::string& spec, double slot_minutes,
                    std::size_t n_slots) {
  if (!(slot_minutes > 0.0)) throw ValidationError("slot length must be positive");
  if (const auto flat = to_double(trim(spec))) return Tariff::flat(n_slots, *flat);

  std::string schedule = spec;
  if (spec == "tide-uk") {
    schedule = kTideUk;
  } else if (spec.find('=') == std::string::npos) {
    throw UnknownPreset(spec);
  }
  const auto points = parse_schedule(schedule);

  const auto per_day = whole_slots(24.0 * 60.0, slot_minutes);
  if (!per_day) {
    throw GridMisalignment("a " + fmt(slot_minutes) +
                           " min grid does not divide the day");
  }
  std::vector<std::size_t> offsets;
  for (const auto& p : points) {
    const auto k = whole_slots(p.minute, slot_minutes);
    if (!k) {
      throw GridMisalignment("a " + fmt(slot_minutes) +
                             " min grid does not hit the tariff change at minute " +
                             fmt(p.minute));
    }
    offsets.push_back(*k);
  }

  Tariff t;
  t.boundaries.push_back(0);
  for (std::size_t day = 0; day * *per_day < n_slots; ++day) {
    for (std::size_t k = 0; k < points.size(); ++k) {
      const std::size_t begin = day * *per_day + offsets[k];
      if (begin >= n_slots) break;
      const std::size_t next =
          k + 1 < points.size() ? offsets[k + 1] : *per_day;
      t.boundaries.push_back(std::min(n_slots, day * *per_day + next));
      t.prices.push_back(points[k].price);
    }
  }
  return t;
}

Tariff preset_tariff(const std::string& name, double slot_minutes) {
  if (name != "tide-uk") throw UnknownPreset(name);
  const auto per_day = whole_slots(24.0 * 60.0, slot_minutes);
  if (!per_day) {
    throw GridMisalignment("a " + fmt(slot_minutes) +
                           " min grid does not divide the day");
  }
  return parse_tariff(name, slot_minutes, *per_day);
}

Format parse_format(const std::string& name) {
  if (name == "csv") return Format::Csv;
  if (name == "json") return Format::Json;
  throw ValidationError("unknown output format '" + name + "'");
}

Instance build_instance(const RunConfig& config) {
  if (config.alpha.has_value() == !config.alphas.empty()) {
    throw ValidationError("exactly one of alpha and an alpha list is required");
  }
  Instance in;
  in.load = ingest_load(config.load_path, config.resample_minutes);
  in.tariff = parse_tariff(config.tariff, config.resample_minutes, in.n_slots());
  in.battery = parse_battery(config.battery);
  if (config.alpha) in.alpha = *config.alpha;
  in.selling = config.selling;
  in.target_mode = config.target_mode;
  return in;
}

// ---------------------------------------------------------------------------
// Solution files

std::string solution_csv(const Instance& instance, const Solution& solution) {
  const std::size_t n = instance.n_slots();
  if (solution.output_kw.size() != n || solution.soc_kwh.size() != n ||
      solution.targets_kw.size() != instance.n_periods()) {
    throw DimensionMismatch("solution does not match the instance");
  }
  std::string out = "t,x_kw,y_kw,w_kw,soc_kwh,period,price_p_per_kwh\n";
  for (std::size_t t = 0; t < n; ++t) {
    const std::size_t i = instance.tariff.period_of(t);
    out += std::to_string(t + 1) + ',' + fmt(instance.load.demand_kw[t]) + ',' +
           fmt(solution.output_kw[t]) + ',' + fmt(solution.targets_kw[i]) + ',' +
           fmt(solution.soc_kwh[t]) + ',' + std::to_string(i + 1) + ',' +
           fmt(instance.tariff.prices[i]) + '\n';
  }
  return out;
}

namespace {

std::string to_string(TargetMode m) {
  return m == TargetMode::Constant ? "constant" : "piecewise";
}

TargetMode target_mode_from(const std::string& s) {
  if (s == "constant") return TargetMode::Constant;
  if (s == "piecewise") return TargetMode::PiecewisePerPeriod;
  throw ValidationError("unknown target mode '" + s + "'");
}

SolveStatus status_from(const std::string& s) {
  for (auto st : {SolveStatus::Optimal, SolveStatus::MaxIterations,
                  SolveStatus::Infeasible}) {
    if (pcdsm::to_string(st) == s) return st;
  }
  throw ValidationError("unknown status '" + s + "'");
}

ConstraintKind kind_from(const std::string& s) {
  for (auto k : {ConstraintKind::NoDeficit, ConstraintKind::NoOverflow,
                 ConstraintKind::ChargePeak, ConstraintKind::DischargePeak,
                 ConstraintKind::OutputNonneg, ConstraintKind::TargetNonneg,
                 ConstraintKind::TotalEnergy}) {
    if (pcdsm::to_string(k) == s) return k;
  }
  throw ValidationError("unknown constraint tag '" + s + "'");
}

json instance_json(const Instance& in) {
  return {
      {"demand_kw", in.load.demand_kw},
      {"slot_hours", in.load.slot_hours},
      {"tariff", {{"boundaries", in.tariff.boundaries},
                  {"prices_p_per_kwh", in.tariff.prices}}},
      {"battery", {{"capacity_kwh", in.battery.capacity_kwh},
                   {"charge_peak_kw", in.battery.charge_peak_kw},
                   {"discharge_peak_kw", in.battery.discharge_peak_kw}}},
      {"alpha", in.alpha},
      {"selling", in.selling},
      {"target_mode", to_string(in.target_mode)},
      {"initial_soc_kwh", in.initial_soc_kwh},
  };
}

Instance instance_from(const json& j) {
  Instance in;
  j.at("demand_kw").get_to(in.load.demand_kw);
  j.at("slot_hours").get_to(in.load.slot_hours);
  j.at("tariff").at("boundaries").get_to(in.tariff.boundaries);
  j.at("tariff").at("prices_p_per_kwh").get_to(in.tariff.prices);
  const auto& b = j.at("battery");
  b.at("capacity_kwh").get_to(in.battery.capacity_kwh);
  b.at("charge_peak_kw").get_to(in.battery.charge_peak_kw);
  b.at("discharge_peak_kw").get_to(in.battery.discharge_peak_kw);
  j.at("alpha").get_to(in.alpha);
  j.at("selling").get_to(in.selling);
  in.target_mode = target_mode_from(j.at("target_mode").get<std::string>());
  j.at("initial_soc_kwh").get_to(in.initial_soc_kwh);
  return in;
}

json kkt_json(const KktReport& r) {
  json comp = json::object();
  for (const auto& [k, v] : r.complementarity) comp[pcdsm::to_string(k)] = v;
  return {
      {"tolerance", r.tolerance},
      {"duals_present", r.duals_present},
      {"primal_infeasibility", r.primal_infeasibility},
      {"stationarity_y", r.stationarity_y},
      {"stationarity_w", r.stationarity_w},
      {"complementarity", comp},
      {"dual_sign", r.dual_sign},
      {"verdict", r.verdict},
  };
}

KktReport kkt_from(const json& j) {
  KktReport r;
  j.at("tolerance").get_to(r.tolerance);
  j.at("duals_present").get_to(r.duals_present);
  j.at("primal_infeasibility").get_to(r.primal_infeasibility);
  j.at("stationarity_y").get_to(r.stationarity_y);
  j.at("stationarity_w").get_to(r.stationarity_w);
  for (const auto& [k, v] : j.at("complementarity").items()) {
    r.complementarity[kind_from(k)] = v.get<double>();
  }
  j.at("dual_sign").get_to(r.dual_sign);
  j.at("verdict").get_to(r.verdict);
  return r;
}

json duals_json(const Multipliers& d) {
  return {
      {"no_deficit", d.no_deficit},
      {"no_overflow", d.no_overflow},
      {"charge_peak", d.charge_peak},
      {"discharge_peak", d.discharge_peak},
      {"output_nonneg", d.output_nonneg},
      {"target_nonneg", d.target_nonneg},
      {"total_energy", d.total_energy},
  };
}

Multipliers duals_from(const json& j) {
  Multipliers d;
  j.at("no_deficit").get_to(d.no_deficit);
  j.at("no_overflow").get_to(d.no_overflow);
  j.at("charge_peak").get_to(d.charge_peak);
  j.at("discharge_peak").get_to(d.discharge_peak);
  j.at("output_nonneg").get_to(d.output_nonneg);
  j.at("target_nonneg").get_to(d.target_nonneg);
  j.at("total_energy").get_to(d.total_energy);
  return d;
}

template <class Point>
void require_points(std::span<const Point> points) {
  if (points.empty()) throw ValidationError("sweep produced no points");
}

}  // namespace

std::string solution_json(const Instance& instance, const Solution& s) {
  json sol = {
      {"output_kw", s.output_kw},
      {"targets_kw", s.targets_kw},
      {"soc_kwh", s.soc_kwh},
      {"privacy", s.privacy},
      {"cost", s.cost},
      {"objective", s.objective},
      {"duals", s.duals ? duals_json(*s.duals) : json(nullptr)},
      {"status", pcdsm::to_string(s.status)},
      {"iterations", s.iterations},
  };
  const json doc = {
      {"instance", instance_json(instance)},
      {"solution", sol},
      {"kkt", kkt_json(s.kkt)},
  };
  return doc.dump(2) + '\n';
}

SolutionFile parse_solution_json(const std::string& text) {
  try {
    const json doc = json::parse(text);
    SolutionFile f;
    f.instance = instance_from(doc.at("instance"));
    const auto& j = doc.at("solution");
    Solution& s = f.solution;
    j.at("output_kw").get_to(s.output_kw);
    j.at("targets_kw").get_to(s.targets_kw);
    j.at("soc_kwh").get_to(s.soc_kwh);
    j.at("privacy").get_to(s.privacy);
    j.at("cost").get_to(s.cost);
    j.at("objective").get_to(s.objective);
    if (!j.at("duals").is_null()) s.duals = duals_from(j.at("duals"));
    s.status = status_from(j.at("status").get<std::string>());
    j.at("iterations").get_to(s.iterations);
    s.kkt = kkt_from(doc.at("kkt"));
    return f;
  } catch (const json::exception& e) {
    throw ValidationError(std::string("malformed solution file: ") + e.what());
  }
}

SolutionFile read_solution_json(const std::filesystem::path& path) {
  return parse_solution_json(read_text(path));
}

std::string frontier_csv(std::span<const sweep::FrontierPoint> points) {
  std::string out = "alpha,privacy_kw2,cost_p,objective,status\n";
  for (const auto& p : points) {
    out += fmt(p.alpha) + ',' + fmt(p.privacy) + ',' + fmt(p.cost) + ',' +
           fmt(p.objective) + ',' + pcdsm::to_string(p.status) + '\n';
  }
  return out;
}

std::string frontier_json(std::span<const sweep::FrontierPoint> points) {
  json arr = json::array();
  for (const auto& p : points) {
    json e = {{"alpha", p.alpha},         {"privacy", p.privacy},
              {"cost", p.cost},           {"objective", p.objective},
              {"status", pcdsm::to_string(p.status)},
              {"iterations", p.iterations}};
    if (!p.error.empty()) e["error"] = p.error;
    arr.push_back(std::move(e));
  }
  return arr.dump(2) + '\n';
}

std::string capacity_csv(std::span<const sweep::CapacitySweepPoint> points) {
  std::string out =
      "b_max_kwh,charge_peak_kw,discharge_peak_kw,alpha,privacy_kw2,cost_p,"
      "objective,status\n";
  for (const auto& p : points) {
    out += fmt(p.capacity_kwh) + ',' + fmt(p.charge_peak_kw) + ',' +
           fmt(p.discharge_peak_kw) + ',' + fmt(p.alpha) + ',' +
           fmt(p.privacy) + ',' + fmt(p.cost) + ',' + fmt(p.objective) + ',' +
           pcdsm::to_string(p.status) + '\n';
  }
  return out;
}

std::string capacity_json(std::span<const sweep::CapacitySweepPoint> points) {
  json arr = json::array();
  for (const auto& p : points) {
    json e = {{"b_max_kwh", p.capacity_kwh},
              {"charge_peak_kw", p.charge_peak_kw},
              {"discharge_peak_kw", p.discharge_peak_kw},
              {"alpha", p.alpha},
              {"privacy", p.privacy},
              {"cost", p.cost},
              {"objective", p.objective},
              {"status", pcdsm::to_string(p.status)},
              {"iterations", p.iterations}};
    if (!p.error.empty()) e["error"] = p.error;
    arr.push_back(std::move(e));
  }
  return arr.dump(2) + '\n';
}

void write_file(const std::filesystem::path& path, const std::string& contents) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << contents;
  out.close();
  if (!out) throw IoError("cannot write '" + path.string() + "'");
}

void emit(const Instance& instance, const Solution& solution, Format format,
          const std::filesystem::path& path) {
  write_file(path, format == Format::Csv ? solution_csv(instance, solution)
                                         : solution_json(instance, solution));
}

void emit(std::span<const sweep::FrontierPoint> points, Format format,
          const std::filesystem::path& path) {
  require_points(points);
  write_file(path, format == Format::Csv ? frontier_csv(points)
                                         : frontier_json(points));
}

void emit(std::span<const sweep::CapacitySweepPoint> points, Format format,
          const std::filesystem::path& path) {
  require_points(points);
  write_file(path, format == Format::Csv ? capacity_csv(points)
                                         : capacity_json(points));
}

}  // namespace pcdsm::io
