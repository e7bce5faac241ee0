#pragma once

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "cntsim/point.hpp"

namespace cntsim {

enum class AxisScale { Linear, Log };
std::string to_string(AxisScale scale);
AxisScale parse_axis_scale(std::string_view text);

/// `points` values from `start` to `stop` inclusive.
struct Axis {
  double start = 0.0;
  double stop = 0.0;
  int points = 1;
  AxisScale scale = AxisScale::Linear;

  std::vector<double> values() const;
  void validate(const std::string& name) const;
};

struct SweepSpec {
  Axis lambda{0.0, 0.8, 41, AxisScale::Linear};
  Axis t_over_u{1e-4, 1e-1, 25, AxisScale::Log};
  std::vector<double> v_over_u{0.01, 0.02, 0.04};
  double omega0_over_u = kDefaultOmega0OverU;
  int n_ph = 50;
  Statistics mode = Statistics::ChargeOnly;
  bool shift = false;
  std::uint64_t seed = 1;
  double tol = 1e-10;
  int max_iter = 50'000;
  ExchangeMode exchange = ExchangeMode::Both;
  double shift_tol = 1e-8;
  int shift_max_outer = 50;
  bool warm_start = false;
  bool timing = false;
  PhaseThresholds thresholds;

  // Not part of the content hash: they do not change the records.
  std::string output = "sweep.jsonl";
  int workers = 1;

  void validate() const;
  std::size_t cell_count() const;
  std::size_t row_length() const { return static_cast<std::size_t>(lambda.points); }
  /// Cell order: V/U outermost, then t/U, then lambda.
  PointSpec cell(std::size_t index) const;

  /// Every field that determines the records, in a fixed order.
  nlohmann::ordered_json to_json() const;
  static SweepSpec from_json(const nlohmann::json& j);
};

/// SHA-256 (hex) of the canonical JSON of the hashed fields.
std::string spec_hash(const SweepSpec& spec);

/// Names of hashed fields whose values differ, each as "name: a -> b".
std::vector<std::string> spec_diff(const nlohmann::json& from, const nlohmann::json& to);

struct Checkpoint {
  std::string spec_hash;
  std::vector<bool> completed;
  std::uint64_t offset = 0;  // bytes of the output that hold completed records
  nlohmann::json spec;       // the hashed fields, so a mismatch can be explained

  std::size_t completed_count() const;
  nlohmann::ordered_json to_json() const;
  static Checkpoint from_json(const nlohmann::json& j);
  /// Write-temp-then-rename.
  void save(const std::string& path) const;
  static Checkpoint load(const std::string& path);
};

std::string checkpoint_path(const std::string& output);
std::string summary_path(const std::string& output);

std::string base64_encode(const std::vector<bool>& bits);
std::vector<bool> base64_decode(const std::string& text, std::size_t bits);

/// Thrown when a checkpoint cannot be used for the requested sweep.
class ResumeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct PhaseBoundary {
  double v_over_u = 0.0;
  double t_over_u = 0.0;
  std::optional<double> lower;  // lambda where D first rises through 0.5
  std::optional<double> upper;  // lambda where D first rises through 1.5
};

struct SweepSummary {
  std::string spec_hash;
  std::size_t cells = 0;
  std::size_t failed = 0;
  std::size_t computed = 0;  // cells solved by this invocation
  std::map<double, std::map<std::string, std::size_t>> phase_counts;  // by V/U
  std::vector<PhaseBoundary> boundaries;

  nlohmann::ordered_json to_json() const;
};

/// Per-row D crossings and per-V phase counts from a complete record set in cell order.
SweepSummary summarize(const SweepSpec& spec, const std::vector<ObservableRecord>& records);

struct RunOptions {
  bool resume = false;
  /// Stop cleanly after this many records have been written (simulates an interruption).
  std::optional<std::size_t> stop_after;
  std::ostream* log = nullptr;
  /// Called with (cells done, cells total) after each record is written.
  std::function<void(std::size_t, std::size_t)> progress;
};

/// Runs (or, with `resume`, continues) the sweep. Records go to spec.output
/// in cell order; the checkpoint is updated after every record and the
/// summary is written when the last cell is done.
SweepSummary run_sweep(const SweepSpec& spec, const RunOptions& options = {});

/// Continues the sweep described by the checkpoint itself.
SweepSummary resume_sweep(const std::string& checkpoint, const std::string& output, int workers = 1,
                          const RunOptions& options = {});

std::vector<ObservableRecord> read_records(const std::string& path);

/// Scalar fields of each record as CSV with a header row.
void export_csv(const std::vector<nlohmann::json>& records, std::ostream& out);
void export_csv(const std::string& jsonl_path, std::ostream& out);

}  // namespace cntsim
