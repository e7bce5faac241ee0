#include "cntsim/sweep.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <condition_variable>
#include <exception>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <mutex>
#include <ostream>
#include <sstream>
#include <stdexcept>
#include <thread>

#include <openssl/evp.h>

namespace cntsim {

namespace fs = std::filesystem;

std::string to_string(AxisScale scale) { return scale == AxisScale::Log ? "log" : "linear"; }

AxisScale parse_axis_scale(std::string_view text) {
  if (text == "log") return AxisScale::Log;
  if (text == "linear") return AxisScale::Linear;
  throw std::invalid_argument("axis scale must be 'linear' or 'log', got '" + std::string(text) + "'");
}

std::vector<double> Axis::values() const {
  std::vector<double> v(static_cast<std::size_t>(std::max(points, 0)));
  if (v.empty()) return v;
  v.front() = start;
  for (int k = 1; k < points; ++k) {
    const double f = static_cast<double>(k) / (points - 1);
    v[static_cast<std::size_t>(k)] = scale == AxisScale::Log
                                         ? std::exp(std::log(start) + f * (std::log(stop) - std::log(start)))
                                         : start + f * (stop - start);
  }
  if (points > 1) v.back() = stop;
  return v;
}

void Axis::validate(const std::string& name) const {
  if (points < 1) throw std::invalid_argument(name + ": at least one point is required");
  if (!std::isfinite(start) || !std::isfinite(stop)) throw std::invalid_argument(name + ": range must be finite");
  if (points > 1 && !(stop > start)) throw std::invalid_argument(name + ": stop must exceed start");
  if (scale == AxisScale::Log && !(start > 0.0)) throw std::invalid_argument(name + ": log axis needs start > 0");
}

void SweepSpec::validate() const {
  lambda.validate("lambda");
  t_over_u.validate("t/U");
  if (lambda.start < 0.0) throw std::invalid_argument("lambda must be non-negative");
  if (!(t_over_u.start > 0.0)) throw std::invalid_argument("t/U must be positive on the sweep grid (t = 0 is analytic)");
  if (v_over_u.empty()) throw std::invalid_argument("V/U list is empty");
  for (double v : v_over_u) {
    if (!(v >= 0.0) || !std::isfinite(v)) throw std::invalid_argument("V/U values must be finite and non-negative");
  }
  if (!(omega0_over_u > 0.0)) throw std::invalid_argument("omega0/U must be positive");
  if (n_ph < 2) throw std::invalid_argument("n_ph must be at least 2");
  if (!(tol > 0.0) || !(shift_tol > 0.0)) throw std::invalid_argument("tolerances must be positive");
  if (max_iter < 1 || shift_max_outer < 1) throw std::invalid_argument("iteration limits must be positive");
  if (workers < 1) throw std::invalid_argument("worker count must be at least 1");
  if (output.empty()) throw std::invalid_argument("output path is empty");
}

std::size_t SweepSpec::cell_count() const {
  return v_over_u.size() * static_cast<std::size_t>(t_over_u.points) * static_cast<std::size_t>(lambda.points);
}

PointSpec SweepSpec::cell(std::size_t index) const {
  if (index >= cell_count()) throw std::out_of_range("cell index out of range");
  const std::size_t nl = static_cast<std::size_t>(lambda.points);
  const std::size_t nt = static_cast<std::size_t>(t_over_u.points);
  PointSpec p;
  p.lambda = lambda.values()[index % nl];
  p.t_over_u = t_over_u.values()[(index / nl) % nt];
  p.v_over_u = v_over_u[index / (nl * nt)];
  p.omega0_over_u = omega0_over_u;
  p.n_ph = n_ph;
  p.mode = mode;
  p.shift = shift;
  p.seed = seed;
  p.timing = timing;
  p.solver.lanczos.tol = tol;
  p.solver.lanczos.max_iter = max_iter;
  p.solver.exchange = exchange;
  p.shift_settings.tol = shift_tol;
  p.shift_settings.max_outer = shift_max_outer;
  p.thresholds = thresholds;
  return p;
}

namespace {

nlohmann::ordered_json axis_json(const Axis& a) {
  return {{"start", a.start}, {"stop", a.stop}, {"points", a.points}, {"scale", to_string(a.scale)}};
}

Axis axis_from_json(const nlohmann::json& j) {
  Axis a;
  a.start = j.at("start").get<double>();
  a.stop = j.at("stop").get<double>();
  a.points = j.at("points").get<int>();
  a.scale = parse_axis_scale(j.at("scale").get<std::string>());
  return a;
}

}  // namespace

nlohmann::ordered_json SweepSpec::to_json() const {
  nlohmann::ordered_json j;
  j["lambda"] = axis_json(lambda);
  j["t_over_u"] = axis_json(t_over_u);
  j["v_over_u"] = v_over_u;
  j["omega0_over_u"] = omega0_over_u;
  j["n_ph"] = n_ph;
  j["mode"] = cntsim::to_string(mode);
  j["shift"] = shift;
  j["seed"] = seed;
  j["tol"] = tol;
  j["max_iter"] = max_iter;
  j["exchange"] = cntsim::to_string(exchange);
  j["shift_tol"] = shift_tol;
  j["shift_max_outer"] = shift_max_outer;
  j["warm_start"] = warm_start;
  j["timing"] = timing;
  j["thresholds"] = {{"mott_max_double", thresholds.mott_max_double},
                     {"paired_min_double", thresholds.paired_min_double},
                     {"bell_double_window", thresholds.bell_double_window},
                     {"bell_min_fidelity", thresholds.bell_min_fidelity},
                     {"charge_corr_eps", thresholds.charge_corr_eps}};
  return j;
}

SweepSpec SweepSpec::from_json(const nlohmann::json& j) {
  SweepSpec s;
  s.lambda = axis_from_json(j.at("lambda"));
  s.t_over_u = axis_from_json(j.at("t_over_u"));
  s.v_over_u = j.at("v_over_u").get<std::vector<double>>();
  s.omega0_over_u = j.at("omega0_over_u").get<double>();
  s.n_ph = j.at("n_ph").get<int>();
  s.mode = parse_statistics(j.at("mode").get<std::string>());
  s.shift = j.at("shift").get<bool>();
  s.seed = j.at("seed").get<std::uint64_t>();
  s.tol = j.at("tol").get<double>();
  s.max_iter = j.at("max_iter").get<int>();
  s.exchange = parse_exchange_mode(j.at("exchange").get<std::string>());
  s.shift_tol = j.at("shift_tol").get<double>();
  s.shift_max_outer = j.at("shift_max_outer").get<int>();
  s.warm_start = j.at("warm_start").get<bool>();
  s.timing = j.at("timing").get<bool>();
  const auto& t = j.at("thresholds");
  s.thresholds.mott_max_double = t.at("mott_max_double").get<double>();
  s.thresholds.paired_min_double = t.at("paired_min_double").get<double>();
  s.thresholds.bell_double_window = t.at("bell_double_window").get<double>();
  s.thresholds.bell_min_fidelity = t.at("bell_min_fidelity").get<double>();
  s.thresholds.charge_corr_eps = t.at("charge_corr_eps").get<double>();
  return s;
}

namespace {

std::string sha256_hex(const std::string& data) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1) {
    throw std::runtime_error("SHA-256 failed");
  }
  std::ostringstream out;
  for (unsigned int i = 0; i < len; ++i) out << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return out.str();
}

// Keys sorted, so the hash does not depend on how the fields were ordered.
std::string hash_of(const nlohmann::json& spec_json) { return sha256_hex(spec_json.dump()); }

}  // namespace

std::string spec_hash(const SweepSpec& spec) { return hash_of(nlohmann::json(spec.to_json())); }

std::vector<std::string> spec_diff(const nlohmann::json& from, const nlohmann::json& to) {
  const nlohmann::json a = from.flatten();
  const nlohmann::json b = to.flatten();
  std::vector<std::string> out;
  for (auto it = a.begin(); it != a.end(); ++it) {
    const auto other = b.find(it.key());
    if (other == b.end()) out.push_back(it.key() + ": " + it.value().dump() + " -> (absent)");
    else if (*other != it.value()) out.push_back(it.key() + ": " + it.value().dump() + " -> " + other->dump());
  }
  for (auto it = b.begin(); it != b.end(); ++it) {
    if (!a.contains(it.key())) out.push_back(it.key() + ": (absent) -> " + it.value().dump());
  }
  return out;
}

std::string base64_encode(const std::vector<bool>& bits) {
  std::vector<unsigned char> bytes((bits.size() + 7) / 8, 0);
  for (std::size_t i = 0; i < bits.size(); ++i) {
    if (bits[i]) bytes[i / 8] |= static_cast<unsigned char>(1u << (i % 8));
  }
  std::string out(4 * ((bytes.size() + 2) / 3) + 1, '\0');
  const int n = EVP_EncodeBlock(reinterpret_cast<unsigned char*>(out.data()), bytes.data(), static_cast<int>(bytes.size()));
  out.resize(static_cast<std::size_t>(n));
  return out;
}

std::vector<bool> base64_decode(const std::string& text, std::size_t bits) {
  const std::size_t want = (bits + 7) / 8;
  if (text.size() % 4 != 0) throw std::invalid_argument("malformed base64 bitmap");
  std::vector<unsigned char> bytes(text.size() / 4 * 3 + 1);
  const int n = EVP_DecodeBlock(bytes.data(), reinterpret_cast<const unsigned char*>(text.data()), static_cast<int>(text.size()));
  if (n < 0) throw std::invalid_argument("malformed base64 bitmap");
  // EVP_DecodeBlock keeps the padding bytes; the caller knows the true length.
  std::size_t pad = 0;
  if (!text.empty() && text.back() == '=') pad = text.size() >= 2 && text[text.size() - 2] == '=' ? 2 : 1;
  if (static_cast<std::size_t>(n) - pad != want) throw std::invalid_argument("bitmap length does not match the grid");
  std::vector<bool> out(bits);
  for (std::size_t i = 0; i < bits; ++i) out[i] = (bytes[i / 8] >> (i % 8)) & 1u;
  return out;
}

std::size_t Checkpoint::completed_count() const {
  return static_cast<std::size_t>(std::count(completed.begin(), completed.end(), true));
}

nlohmann::ordered_json Checkpoint::to_json() const {
  nlohmann::ordered_json j;
  j["spec_hash"] = spec_hash;
  j["cells"] = completed.size();
  j["completed"] = base64_encode(completed);
  j["offset"] = offset;
  j["spec"] = nlohmann::ordered_json(spec);
  return j;
}

Checkpoint Checkpoint::from_json(const nlohmann::json& j) {
  Checkpoint c;
  c.spec_hash = j.at("spec_hash").get<std::string>();
  c.completed = base64_decode(j.at("completed").get<std::string>(), j.at("cells").get<std::size_t>());
  c.offset = j.at("offset").get<std::uint64_t>();
  c.spec = j.at("spec");
  return c;
}

namespace {

void write_atomically(const std::string& path, const std::string& text) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + tmp);
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + tmp);
  }
  fs::rename(tmp, path);
}

}  // namespace

void Checkpoint::save(const std::string& path) const { write_atomically(path, to_json().dump() + "\n"); }

Checkpoint Checkpoint::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ResumeError("cannot open checkpoint " + path);
  try {
    return from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::exception& e) {
    throw ResumeError("checkpoint " + path + " is malformed: " + e.what());
  } catch (const std::invalid_argument& e) {
    throw ResumeError("checkpoint " + path + " is malformed: " + e.what());
  }
}

std::string checkpoint_path(const std::string& output) { return output + ".ckpt"; }
std::string summary_path(const std::string& output) { return output + ".summary.json"; }

nlohmann::ordered_json SweepSummary::to_json() const {
  nlohmann::ordered_json j;
  j["spec_hash"] = spec_hash;
  j["cells"] = cells;
  j["failed"] = failed;
  nlohmann::ordered_json counts = nlohmann::ordered_json::object();
  for (const auto& [v, m] : phase_counts) {
    nlohmann::ordered_json c = nlohmann::ordered_json::object();
    for (const char* name : {"Mott", "Bell", "Paired", "Delocalized", "failed"}) {
      const auto it = m.find(name);
      c[name] = it == m.end() ? 0 : it->second;
    }
    counts[nlohmann::json(v).dump()] = c;
  }
  j["phase_counts"] = counts;
  nlohmann::ordered_json rows = nlohmann::ordered_json::array();
  for (const auto& b : boundaries) {
    nlohmann::ordered_json r;
    r["v_over_u"] = b.v_over_u;
    r["t_over_u"] = b.t_over_u;
    r["lambda_d_0_5"] = b.lower ? nlohmann::ordered_json(*b.lower) : nlohmann::ordered_json(nullptr);
    r["lambda_d_1_5"] = b.upper ? nlohmann::ordered_json(*b.upper) : nlohmann::ordered_json(nullptr);
    rows.push_back(r);
  }
  j["boundaries"] = rows;
  return j;
}

namespace {

std::optional<double> first_crossing(const std::vector<double>& lam, const std::vector<double>& d, double level) {
  for (std::size_t i = 1; i < lam.size(); ++i) {
    if (!std::isfinite(d[i - 1]) || !std::isfinite(d[i])) continue;
    if (d[i - 1] < level && d[i] >= level) {
      return lam[i - 1] + (level - d[i - 1]) / (d[i] - d[i - 1]) * (lam[i] - lam[i - 1]);
    }
  }
  return std::nullopt;
}

}  // namespace

SweepSummary summarize(const SweepSpec& spec, const std::vector<ObservableRecord>& records) {
  if (records.size() != spec.cell_count()) throw std::invalid_argument("record count does not match the grid");
  SweepSummary s;
  s.spec_hash = spec_hash(spec);
  s.cells = records.size();
  const std::size_t nl = spec.row_length();
  const std::vector<double> lam = spec.lambda.values();
  for (std::size_t row = 0; row * nl < records.size(); ++row) {
    std::vector<double> d(nl);
    for (std::size_t k = 0; k < nl; ++k) {
      const ObservableRecord& r = records[row * nl + k];
      d[k] = r.mean_double_occupancy();
      const std::string label = r.phase ? to_string(*r.phase) : "failed";
      if (!r.phase) ++s.failed;
      ++s.phase_counts[r.v_over_u][label];
    }
    const ObservableRecord& first = records[row * nl];
    s.boundaries.push_back({first.v_over_u, first.t_over_u, first_crossing(lam, d, 0.5), first_crossing(lam, d, 1.5)});
  }
  return s;
}

std::vector<ObservableRecord> read_records(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path);
  std::vector<ObservableRecord> out;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    out.push_back(record_from_json(nlohmann::json::parse(line)));
  }
  return out;
}

namespace {

/// Byte length of the first `lines` newline-terminated lines within the first `limit` bytes.
std::uint64_t prefix_bytes(const std::string& path, std::size_t lines, std::uint64_t limit) {
  if (lines == 0) return 0;
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ResumeError("cannot open output " + path);
  std::uint64_t bytes = 0;
  std::size_t seen = 0;
  std::string line;
  while (seen < lines && std::getline(in, line)) {
    if (in.eof()) break;  // no terminating newline: incomplete record
    bytes += line.size() + 1;
    ++seen;
  }
  if (seen < lines || bytes > limit) throw ResumeError("output " + path + " is shorter than the checkpoint records");
  return bytes;
}

struct Pending {
  std::mutex mutex;
  std::condition_variable ready;
  std::map<std::size_t, std::string> lines;
  std::exception_ptr error;
  std::atomic<bool> stop{false};
};

std::string solve_cell(const SweepSpec& spec, std::size_t index, std::vector<double>& warm, PhononShift& warm_shift) {
  const PointSpec p = spec.cell(index);
  ObservableRecord rec;
  try {
    PointResult r = solve_point(p, warm, warm_shift);
    rec = std::move(r.record);
    if (spec.warm_start) {
      warm = std::move(r.ground.vector);
      warm_shift = r.ground.shift.value_or(PhononShift{});
    }
  } catch (const ConvergenceError& e) {
    rec = failed_record(p, e.what(), &e.best());
    warm.clear();
    warm_shift = {};
  }
  return to_json(rec).dump() + "\n";
}

}  // namespace

SweepSummary run_sweep(const SweepSpec& spec, const RunOptions& options) {
  spec.validate();
  const std::string hash = spec_hash(spec);
  const std::string ckpt_file = checkpoint_path(spec.output);
  const std::size_t total = spec.cell_count();
  const std::size_t row = spec.row_length();

  Checkpoint ckpt;
  ckpt.spec_hash = hash;
  ckpt.spec = spec.to_json();
  ckpt.completed.assign(total, false);
  std::size_t first = 0;

  if (options.resume && fs::exists(ckpt_file)) {
    const Checkpoint old = Checkpoint::load(ckpt_file);
    if (hash_of(old.spec) != old.spec_hash) {
      throw ResumeError("checkpoint hash does not match its recorded sweep settings; refusing to resume");
    }
    if (old.spec_hash != hash) {
      std::string msg = "checkpoint belongs to a different sweep; refusing to resume. Differences:";
      for (const auto& d : spec_diff(old.spec, nlohmann::json(spec.to_json()))) msg += "\n  " + d;
      throw ResumeError(msg);
    }
    if (old.completed.size() != total) throw ResumeError("checkpoint bitmap does not match the grid size");
    first = old.completed_count();
    for (std::size_t i = 0; i < first; ++i) {
      if (!old.completed[i]) throw ResumeError("checkpoint completed cells are not a prefix of the cell order");
    }
    // A warm-started row needs its predecessor's state, so restart incomplete rows.
    if (spec.warm_start && first < total) first -= first % row;
    const std::uint64_t keep = prefix_bytes(spec.output, first, old.offset);
    if (!fs::exists(spec.output)) std::ofstream(spec.output, std::ios::binary);
    fs::resize_file(spec.output, keep);
    ckpt.offset = keep;
    for (std::size_t i = 0; i < first; ++i) ckpt.completed[i] = true;
    if (options.log) *options.log << "resuming: " << first << " of " << total << " cells already done\n";
  } else {
    if (options.resume && options.log) *options.log << "no checkpoint at " << ckpt_file << "; starting fresh\n";
    std::ofstream(spec.output, std::ios::binary | std::ios::trunc);
    if (!fs::exists(spec.output)) throw std::runtime_error("cannot create output " + spec.output);
  }
  ckpt.save(ckpt_file);

  SweepSummary summary;
  std::size_t written = 0;
  if (first < total) {
    std::ofstream out(spec.output, std::ios::binary | std::ios::app);
    if (!out) throw std::runtime_error("cannot open output " + spec.output);

    // Work units are cells, or whole rows when each cell seeds the next.
    const std::size_t unit = spec.warm_start ? row : 1;
    const std::size_t first_unit = first / unit;
    const std::size_t units = (total + unit - 1) / unit;
    Pending pending;
    std::atomic<std::size_t> next_unit{first_unit};

    auto worker = [&] {
      try {
        for (;;) {
          if (pending.stop) return;
          const std::size_t u = next_unit.fetch_add(1);
          if (u >= units) return;
          std::vector<double> warm;
          PhononShift warm_shift;
          for (std::size_t i = u * unit; i < std::min(total, (u + 1) * unit); ++i) {
            if (pending.stop) return;
            std::string line = solve_cell(spec, i, warm, warm_shift);
            std::lock_guard lock(pending.mutex);
            pending.lines.emplace(i, std::move(line));
            pending.ready.notify_all();
          }
        }
      } catch (...) {
        std::lock_guard lock(pending.mutex);
        if (!pending.error) pending.error = std::current_exception();
        pending.stop = true;
        pending.ready.notify_all();
      }
    };

    const std::size_t nthreads = std::min<std::size_t>(static_cast<std::size_t>(spec.workers), units - first_unit);
    std::vector<std::thread> threads;
    for (std::size_t k = 0; k < nthreads; ++k) threads.emplace_back(worker);

    auto finish = [&] {
      pending.stop = true;
      for (auto& t : threads) t.join();
    };

    try {
      for (std::size_t i = first; i < total; ++i) {
        std::string line;
        {
          std::unique_lock lock(pending.mutex);
          pending.ready.wait(lock, [&] { return pending.lines.count(i) > 0 || pending.error; });
          if (pending.error && pending.lines.count(i) == 0) break;
          line = std::move(pending.lines.at(i));
          pending.lines.erase(i);
        }
        out << line;
        out.flush();
        if (!out) throw std::runtime_error("write to " + spec.output + " failed");
        ckpt.offset += line.size();
        ckpt.completed[i] = true;
        ckpt.save(ckpt_file);
        ++written;
        if (options.progress) options.progress(i + 1, total);
        if (options.stop_after && written >= *options.stop_after) break;
      }
    } catch (...) {
      finish();
      throw;
    }
    finish();
    if (pending.error) std::rethrow_exception(pending.error);
  }

  if (ckpt.completed_count() == total) {
    summary = summarize(spec, read_records(spec.output));
    write_atomically(summary_path(spec.output), summary.to_json().dump(2) + "\n");
  } else {
    summary.spec_hash = hash;
    summary.cells = ckpt.completed_count();
  }
  summary.computed = written;
  return summary;
}

SweepSummary resume_sweep(const std::string& checkpoint, const std::string& output, int workers,
                          const RunOptions& options) {
  const Checkpoint c = Checkpoint::load(checkpoint);
  SweepSpec spec;
  try {
    spec = SweepSpec::from_json(c.spec);
  } catch (const std::exception& e) {
    throw ResumeError(std::string("checkpoint sweep settings are unreadable: ") + e.what());
  }
  spec.output = output;
  spec.workers = workers;
  if (checkpoint_path(output) != checkpoint) throw ResumeError("checkpoint " + checkpoint + " does not belong to " + output);
  RunOptions o = options;
  o.resume = true;
  return run_sweep(spec, o);
}

namespace {

const std::vector<std::string>& csv_fields() {
  static const std::vector<std::string> fields{
      "lambda",     "t_over_u",         "v_over_u",       "n_ph",           "mode",
      "energy",     "residual",         "iterations",     "near_degenerate", "d_occ_a",
      "d_occ_b",    "phonon_n_a",       "phonon_n_b",     "charge_corr_avg_a", "charge_corr_avg_b",
      "var_a_a",    "var_a_b",          "mutual_info_phonon", "ent_entropy_ab", "negativity_phonon",
      "bell_fidelity", "phase",         "wall_ms",        "status"};
  return fields;
}

std::string csv_quote(const std::string& s) {
  if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  return out + "\"";
}

std::string csv_value(const nlohmann::json& v) {
  if (v.is_null()) return "";
  if (v.is_string()) return csv_quote(v.get<std::string>());
  return csv_quote(v.dump());
}

}  // namespace

void export_csv(const std::vector<nlohmann::json>& records, std::ostream& out) {
  const auto& fields = csv_fields();
  for (std::size_t k = 0; k < fields.size(); ++k) out << (k ? "," : "") << fields[k];
  out << "\r\n";
  for (const auto& r : records) {
    for (std::size_t k = 0; k < fields.size(); ++k) {
      out << (k ? "," : "");
      const auto it = r.find(fields[k]);
      if (it != r.end()) out << csv_value(*it);
    }
    out << "\r\n";
  }
}

void export_csv(const std::string& jsonl_path, std::ostream& out) {
  std::ifstream in(jsonl_path);
  if (!in) throw std::runtime_error("cannot open " + jsonl_path);
  std::vector<nlohmann::json> records;
  std::string line;
  while (std::getline(in, line)) {
    if (!line.empty()) records.push_back(nlohmann::json::parse(line));
  }
  export_csv(records, out);
}

}  // namespace cntsim
