#pragma once

// Load ingestion, battery and tariff presets, run configuration and result
// files.

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "pcdsm/errors.hpp"
#include "pcdsm/model.hpp"
#include "pcdsm/sweep.hpp"

namespace pcdsm::io {

/// Spacing of raw meter readings in seconds.
inline constexpr double kSampleSeconds = 6.0;

enum class LoadErrorKind { EmptyFile, BadHeader, BadRow, NonMonotoneTimestamps,
                           NegativeReading, MissingBucket };

class LoadFileError : public ValidationError {
 public:
  LoadFileError(LoadErrorKind kind, std::size_t row, const std::string& what)
      : ValidationError(what), kind_(kind), row_(row) {}
  LoadErrorKind kind() const { return kind_; }
  /// 1-based data row (0 when the error is not tied to a row).
  std::size_t row() const { return row_; }

 private:
  LoadErrorKind kind_;
  std::size_t row_;
};

class GridMisalignment : public ValidationError {
 public:
  using ValidationError::ValidationError;
};

/// Reads a CSV with header `index,kw` (sample number, one every 6 s) or
/// `timestamp,kw` (seconds) and averages the readings into buckets of
/// `resample_minutes`. Buckets are anchored at the first reading; a partial
/// trailing bucket is the mean of the samples it holds. A bucket with no
/// samples between two populated ones is an error.
LoadProfile ingest_load(const std::filesystem::path& path,
                        double resample_minutes = 1.0);

/// Same, from CSV text already in memory.
LoadProfile parse_load(const std::string& csv, double resample_minutes = 1.0);

BatterySpec preset_battery(const std::string& name);

/// A preset name or an inline "capacity_kwh,charge_kw,discharge_kw".
BatterySpec parse_battery(const std::string& spec);

/// Daily tariff preset over one 24 h horizon starting at midnight, on a grid
/// of `slot_minutes`.
Tariff preset_tariff(const std::string& name, double slot_minutes);

/// A preset name, a single price (flat tariff) or an inline daily schedule
/// "HH:MM=price,HH:MM=price,..." whose first entry is 00:00. The daily
/// pattern repeats until `n_slots`, with periods split at every midnight and
/// at the end of the horizon.
Tariff parse_tariff(const std::string& spec, double slot_minutes,
                    std::size_t n_slots);

enum class Format { Csv, Json };

Format parse_format(const std::string& name);

struct RunConfig {
  std::filesystem::path load_path;
  double resample_minutes = 1.0;
  std::string tariff = "tide-uk";
  std::string battery = "powervault-g200";
  std::optional<double> alpha;
  std::vector<double> alphas;
  bool selling = false;
  TargetMode target_mode = TargetMode::PiecewisePerPeriod;
  std::filesystem::path output_path;
  Format output_format = Format::Csv;
};

/// Reads the load and resolves the presets. The weight is taken from
/// `alpha` when present, else it stays at the Instance default.
/// Throws ValidationError unless exactly one of alpha / alphas is set.
Instance build_instance(const RunConfig& config);

// ---------------------------------------------------------------------------
// Output

/// Per-slot table: t, x_kw, y_kw, w_kw, soc_kwh, period, price.
std::string solution_csv(const Instance& instance, const Solution& solution);

/// The instance, the solution with its multipliers, and the KKT report.
std::string solution_json(const Instance& instance, const Solution& solution);

struct SolutionFile {
  Instance instance;
  Solution solution;
};

SolutionFile parse_solution_json(const std::string& text);
SolutionFile read_solution_json(const std::filesystem::path& path);

std::string frontier_csv(std::span<const sweep::FrontierPoint> points);
std::string frontier_json(std::span<const sweep::FrontierPoint> points);
std::string capacity_csv(std::span<const sweep::CapacitySweepPoint> points);
std::string capacity_json(std::span<const sweep::CapacitySweepPoint> points);

/// Writes `contents` to `path` (throws IoError).
void write_file(const std::filesystem::path& path, const std::string& contents);

void emit(const Instance& instance, const Solution& solution, Format format,
          const std::filesystem::path& path);
/// Sweeps must be non-empty (ValidationError, nothing is written).
void emit(std::span<const sweep::FrontierPoint> points, Format format,
          const std::filesystem::path& path);
void emit(std::span<const sweep::CapacitySweepPoint> points, Format format,
          const std::filesystem::path& path);

}  // namespace pcdsm::io
