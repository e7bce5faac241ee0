#include "cntsim/cli.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <map>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>

#include <CLI11.hpp>

#include "cntsim/lang_firsov.hpp"
#include "cntsim/point.hpp"
#include "cntsim/sweep.hpp"
#include "cntsim/validate.hpp"

namespace cntsim {

namespace {

const std::map<std::string, Statistics> kModes{{"charge", Statistics::ChargeOnly}, {"spinful", Statistics::Spinful}};
const std::map<std::string, bool> kOnOff{{"on", true}, {"off", false}};
const std::map<std::string, ExchangeMode> kExchange{
    {"both", ExchangeMode::Both}, {"symmetric", ExchangeMode::Symmetric}, {"off", ExchangeMode::Off}};
const std::map<std::string, AxisScale> kScales{{"linear", AxisScale::Linear}, {"log", AxisScale::Log}};

void add_config(CLI::App* app) {
  // Consumed by expand_config before parsing; declared here for --help.
  static std::string unused;
  app->add_option("--config", unused, "key = value file; flags on the command line take precedence")
      ->type_name("PATH");
}

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

/// Replaces `--config <path>` with the file's `key = value` lines as `--key=value`
/// flags placed ahead of the command-line flags, so the latter win.
std::vector<std::string> expand_config(const std::vector<std::string>& args) {
  std::vector<std::string> rest;
  std::optional<std::string> path;
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config") {
      if (i + 1 >= args.size()) throw CLI::ArgumentMismatch("--config needs a file path");
      path = args[++i];
    } else if (args[i].rfind("--config=", 0) == 0) {
      path = args[i].substr(9);
    } else {
      rest.push_back(args[i]);
    }
  }
  if (!path || rest.empty()) return rest;
  std::ifstream in(*path);
  if (!in) throw CLI::FileError::Missing(*path);
  std::vector<std::string> from_file;
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    line = trim(line);
    if (line.empty()) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw CLI::ConversionError(*path + ":" + std::to_string(number) + ": expected key = value");
    }
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (value.size() >= 2 && value.front() == '"' && value.back() == '"') value = value.substr(1, value.size() - 2);
    if (key.empty() || key == "config") {
      throw CLI::ConversionError(*path + ":" + std::to_string(number) + ": invalid key '" + key + "'");
    }
    from_file.push_back("--" + key + "=" + value);
  }
  std::vector<std::string> out{rest.front()};
  out.insert(out.end(), from_file.begin(), from_file.end());
  out.insert(out.end(), rest.begin() + 1, rest.end());
  return out;
}

/// Opens --out when given, otherwise writes to `fallback`.
class Sink {
 public:
  Sink(const std::string& path, std::ostream& fallback) : stream_(&fallback) {
    if (!path.empty()) {
      file_ = std::make_unique<std::ofstream>(path, std::ios::binary | std::ios::trunc);
      if (!*file_) throw std::runtime_error("cannot open " + path + " for writing");
      stream_ = file_.get();
    }
  }
  std::ostream& get() { return *stream_; }

 private:
  std::unique_ptr<std::ofstream> file_;
  std::ostream* stream_;
};

std::string pair_label(const ChargePair& p) { return charge_label(p.first) + "," + charge_label(p.second); }

// --- atomic ------------------------------------------------------------------

struct AtomicArgs {
  double v_over_u = 0.02;
  int modes = 1;
  std::optional<double> lambda;
  bool json = false;
};

int run_atomic(const AtomicArgs& a, std::ostream& out) {
  if (a.modes < 1) throw std::invalid_argument("--modes must be at least 1");
  const CriticalCouplings c = critical_lambdas(a.v_over_u, a.modes);
  std::optional<AtomicManifold> manifold;
  if (a.lambda) {
    ModelParams p = ModelParams::from_ratios(*a.lambda, 0.0, a.v_over_u);
    manifold = atomic_ground_manifold(p, a.modes);
  }
  if (a.json) {
    nlohmann::ordered_json j;
    j["v_over_u"] = a.v_over_u;
    j["modes"] = a.modes;
    j["lambda_c1"] = c.mott_to_bell;
    j["lambda_c2"] = c.bell_to_paired;
    j["window"] = c.bell_to_paired - c.mott_to_bell;
    j["breakpoints"] = c.breakpoints;
    nlohmann::ordered_json pairs = nlohmann::ordered_json::array();
    for (const auto& p : c.ground_pairs) pairs.push_back(pair_label(p));
    j["ground_pairs"] = pairs;
    j["tail_bound"] = c.tail_bound;
    if (manifold) {
      nlohmann::ordered_json m;
      m["lambda"] = *a.lambda;
      m["energy"] = manifold->energy;
      m["degeneracy"] = manifold->degeneracy();
      nlohmann::ordered_json members = nlohmann::ordered_json::array();
      for (const auto& p : manifold->members) members.push_back(pair_label(p));
      m["members"] = members;
      j["manifold"] = m;
    }
    out << j.dump() << "\n";
    return kExitOk;
  }
  out << std::setprecision(12);
  out << "modes      " << a.modes << "\n";
  out << "V/U        " << a.v_over_u << "\n";
  out << "lambda_c1 = " << c.mott_to_bell << "\n";
  out << "lambda_c2 = " << c.bell_to_paired << "\n";
  out << "window    = " << c.bell_to_paired - c.mott_to_bell << "\n";
  out << "tail bound (per unit g0^2/omega0) " << c.tail_bound << "\n";
  out << "ground pairs along lambda:\n";
  for (std::size_t k = 0; k < c.ground_pairs.size(); ++k) {
    out << "  " << pair_label(c.ground_pairs[k]);
    if (k < c.breakpoints.size()) out << "  until lambda = " << c.breakpoints[k];
    out << "\n";
  }
  if (manifold) {
    out << "manifold at lambda = " << *a.lambda << ": energy " << manifold->energy << " U, degeneracy "
        << manifold->degeneracy() << "\n";
    for (const auto& p : manifold->members) out << "  " << pair_label(p) << "\n";
  }
  return kExitOk;
}

// --- point -------------------------------------------------------------------

struct PointArgs {
  PointSpec spec;
  std::string out;
};

void add_solver_flags(CLI::App* cmd, PointSpec& p) {
  cmd->add_option("--omega0-over-u", p.omega0_over_u, "phonon frequency omega0/U")->capture_default_str();
  cmd->add_option("--nph", p.n_ph, "phonon Fock states per tube")->capture_default_str();
  cmd->add_option("--mode", p.mode, "electron statistics")
      ->transform(CLI::CheckedTransformer(kModes, CLI::ignore_case).description(""))
      ->type_name("charge|spinful")
      ->default_str("charge");
  cmd->add_option("--shift", p.shift, "iterative coherent shift")
      ->transform(CLI::CheckedTransformer(kOnOff, CLI::ignore_case).description(""))
      ->type_name("on|off")
      ->default_str("off");
  cmd->add_option("--seed", p.seed, "Krylov start-vector seed")->capture_default_str();
  cmd->add_option("--tol", p.solver.lanczos.tol, "eigen-residual tolerance in units of U")->capture_default_str();
  cmd->add_option("--max-iter", p.solver.lanczos.max_iter, "matrix-vector product limit")->capture_default_str();
  cmd->add_option("--exchange", p.solver.exchange, "tube-exchange sectors to solve")
      ->transform(CLI::CheckedTransformer(kExchange, CLI::ignore_case).description(""))
      ->type_name("both|symmetric|off")
      ->default_str("both");
  cmd->add_option("--shift-tol", p.shift_settings.tol, "shift convergence on |<a>|")->capture_default_str();
  cmd->add_option("--shift-max-outer", p.shift_settings.max_outer, "shift outer iteration limit")
      ->capture_default_str();
}

int run_point(const PointArgs& a, std::ostream& out, std::ostream& err) {
  const PointResult r = solve_point(a.spec);
  Sink sink(a.out, out);
  sink.get() << to_json(r.record).dump() << "\n";
  err << "point: energy " << std::setprecision(12) << r.record.energy << " U, residual " << r.record.residual
      << ", " << r.record.iterations << " matvecs";
  if (r.ground.shift) err << ", shift (" << r.ground.shift->a << ", " << r.ground.shift->b << ")";
  err << ", phase " << (r.record.phase ? to_string(*r.record.phase) : "-") << "\n";
  return kExitOk;
}

// --- sweep -------------------------------------------------------------------

struct SweepArgs {
  SweepSpec spec;
  PointSpec solver;  // holds the solver flags shared with `point`
  std::vector<double> v_over_u{0.01, 0.02, 0.04};
  bool resume = false;
  bool quiet = false;
};

/// CLI11 drops environment values that fail validation, so read this one by hand.
std::optional<int> workers_from_env() {
  const char* text = std::getenv("CNTSIM_WORKERS");
  if (!text || !*text) return std::nullopt;
  std::size_t used = 0;
  int n = 0;
  try {
    n = std::stoi(text, &used);
  } catch (const std::exception&) {
    used = 0;
  }
  if (used != std::string(text).size() || n < 1) {
    throw std::invalid_argument(std::string("CNTSIM_WORKERS must be a positive integer, got '") + text + "'");
  }
  return n;
}

int run_sweep_command(SweepArgs& a, const CLI::App& cmd, std::ostream& out, std::ostream& err) {
  if (cmd.count("--workers") == 0) {
    if (const auto n = workers_from_env()) a.spec.workers = *n;
  }
  SweepSpec spec = a.spec;
  spec.v_over_u = a.v_over_u;
  spec.omega0_over_u = a.solver.omega0_over_u;
  spec.n_ph = a.solver.n_ph;
  spec.mode = a.solver.mode;
  spec.shift = a.solver.shift;
  spec.seed = a.solver.seed;
  spec.tol = a.solver.solver.lanczos.tol;
  spec.max_iter = a.solver.solver.lanczos.max_iter;
  spec.exchange = a.solver.solver.exchange;
  spec.shift_tol = a.solver.shift_settings.tol;
  spec.shift_max_outer = a.solver.shift_settings.max_outer;

  RunOptions options;
  options.resume = a.resume;
  options.log = &err;
  if (!a.quiet) {
    options.progress = [&err](std::size_t done, std::size_t total) {
      err << "\rcell " << done << "/" << total << std::flush;
      if (done == total) err << "\n";
    };
  }

  // A bare `--resume` continues whatever sweep the checkpoint describes.
  static const std::vector<std::string> kSpecFlags{
      "--lambda-min", "--lambda-max", "--lambda-points", "--lambda-scale", "--t-min",   "--t-max",
      "--t-points",   "--t-scale",    "--v-over-u",      "--omega0-over-u", "--nph",     "--mode",
      "--shift",      "--seed",       "--tol",           "--max-iter",      "--exchange", "--shift-tol",
      "--shift-max-outer", "--warm-start", "--timing"};
  const bool explicit_spec = std::any_of(kSpecFlags.begin(), kSpecFlags.end(),
                                         [&](const std::string& f) { return cmd.count(f) > 0; });
  SweepSummary summary;
  if (a.resume && !explicit_spec && std::filesystem::exists(checkpoint_path(spec.output))) {
    summary = resume_sweep(checkpoint_path(spec.output), spec.output, spec.workers, options);
  } else {
    summary = run_sweep(spec, options);
  }
  err << "sweep: " << summary.computed << " cells computed";
  if (summary.cells == spec.cell_count() || !summary.phase_counts.empty()) err << ", summary at " << summary_path(spec.output);
  err << "\n";
  (void)out;
  return kExitOk;
}

// --- validate / export-csv ---------------------------------------------------

int run_validate(std::ostream& out) {
  bool ok = true;
  for (const auto& c : run_validation()) {
    out << (c.passed ? "PASS " : "FAIL ") << c.name << " (" << c.detail << ")\n";
    ok = ok && c.passed;
  }
  return ok ? kExitOk : kExitFailure;
}

}  // namespace

int dispatch(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Two-tube electron-phonon exact diagonalization", "cntsim"};
  app.require_subcommand(1);
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);

  AtomicArgs atomic;
  auto* atomic_cmd = app.add_subcommand("atomic", "t = 0 ground manifolds and critical couplings");
  atomic_cmd->add_option("--v-over-u", atomic.v_over_u, "inter-tube repulsion V/U")
      ->check(CLI::NonNegativeNumber)
      ->capture_default_str();
  atomic_cmd->add_option("--modes", atomic.modes, "phonon modes in the attraction")->check(CLI::PositiveNumber)
      ->capture_default_str();
  atomic_cmd->add_option("--lambda", atomic.lambda, "also print the ground manifold at this coupling");
  atomic_cmd->add_flag("--json", atomic.json, "machine-readable output");
  add_config(atomic_cmd);

  PointArgs point;
  auto* point_cmd = app.add_subcommand("point", "solve one grid point and print its record");
  point_cmd->add_option("--lambda", point.spec.lambda, "coupling g0^2/(U omega0)")->required();
  point_cmd->add_option("--t-over-u", point.spec.t_over_u, "hopping t/U")->capture_default_str();
  point_cmd->add_option("--v-over-u", point.spec.v_over_u, "inter-tube repulsion V/U")->capture_default_str();
  point_cmd->add_option("--tubes", point.spec.tubes, "1 or 2")->check(CLI::IsMember({1, 2}))->capture_default_str();
  point_cmd->add_flag("--timing", point.spec.timing, "record wall time");
  add_solver_flags(point_cmd, point.spec);
  point_cmd->add_option("--out", point.out, "write the record here instead of standard output");
  add_config(point_cmd);

  SweepArgs sweep;
  auto* sweep_cmd = app.add_subcommand("sweep", "lambda x t/U x V/U grid to JSON Lines");
  SweepSpec& s = sweep.spec;
  sweep_cmd->add_option("--lambda-min", s.lambda.start, "first lambda")->capture_default_str();
  sweep_cmd->add_option("--lambda-max", s.lambda.stop, "last lambda")->capture_default_str();
  sweep_cmd->add_option("--lambda-points", s.lambda.points, "lambda grid points")->capture_default_str();
  sweep_cmd->add_option("--lambda-scale", s.lambda.scale, "lambda spacing")
      ->transform(CLI::CheckedTransformer(kScales, CLI::ignore_case).description(""))
      ->type_name("linear|log")
      ->default_str("linear");
  sweep_cmd->add_option("--t-min", s.t_over_u.start, "smallest t/U")->capture_default_str();
  sweep_cmd->add_option("--t-max", s.t_over_u.stop, "largest t/U")->capture_default_str();
  sweep_cmd->add_option("--t-points", s.t_over_u.points, "t/U grid points")->capture_default_str();
  sweep_cmd->add_option("--t-scale", s.t_over_u.scale, "t/U spacing")
      ->transform(CLI::CheckedTransformer(kScales, CLI::ignore_case).description(""))
      ->type_name("linear|log")
      ->default_str("log");
  sweep_cmd->add_option("--v-over-u", sweep.v_over_u, "comma-separated V/U values")
      ->delimiter(',')
      ->default_str("0.01,0.02,0.04");
  add_solver_flags(sweep_cmd, sweep.solver);
  sweep_cmd->add_flag("--warm-start", s.warm_start, "seed each cell with its lambda predecessor");
  sweep_cmd->add_flag("--timing", s.timing, "record wall time (output is then not reproducible)");
  sweep_cmd->add_option("--out", s.output, "JSON Lines output")->capture_default_str();
  sweep_cmd->add_option("--workers", s.workers, "concurrent grid cells (default: $CNTSIM_WORKERS, else 1)")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();
  sweep_cmd->add_flag("--resume", sweep.resume, "continue from <out>.ckpt");
  sweep_cmd->add_flag("--quiet", sweep.quiet, "no progress line");
  add_config(sweep_cmd);

  auto* validate_cmd = app.add_subcommand("validate", "run the built-in oracle suite");

  std::string csv_in, csv_out;
  auto* csv_cmd = app.add_subcommand("export-csv", "scalar record fields as CSV");
  csv_cmd->add_option("input", csv_in, "JSON Lines file")->required()->check(CLI::ExistingFile);
  csv_cmd->add_option("--out", csv_out, "CSV file (default standard output)");

  try {
    const std::vector<std::string> expanded = expand_config(args);
    std::vector<std::string> reversed(expanded.rbegin(), expanded.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  try {
    if (atomic_cmd->parsed()) return run_atomic(atomic, out);
    if (point_cmd->parsed()) return run_point(point, out, err);
    if (sweep_cmd->parsed()) return run_sweep_command(sweep, *sweep_cmd, out, err);
    if (validate_cmd->parsed()) return run_validate(out);
    if (csv_cmd->parsed()) {
      Sink sink(csv_out, out);
      export_csv(csv_in, sink.get());
      return kExitOk;
    }
  } catch (const ResumeError& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitFailure;
  }
  return kExitUsage;
}

}  // namespace cntsim
