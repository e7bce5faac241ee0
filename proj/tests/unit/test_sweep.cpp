#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "cntsim/sweep.hpp"

using namespace cntsim;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  TempDir() {
    std::random_device rd;
    path = fs::temp_directory_path() / ("cntsim-sweep-" + std::to_string(rd()) + std::to_string(rd()));
    fs::create_directories(path);
  }
  ~TempDir() {
    std::error_code ec;
    fs::remove_all(path, ec);
  }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

SweepSpec small_spec(const std::string& output) {
  SweepSpec s;
  s.lambda = {0.1, 0.5, 3, AxisScale::Linear};
  s.t_over_u = {1e-3, 1e-1, 3, AxisScale::Log};
  s.v_over_u = {0.02};
  s.n_ph = 6;
  s.output = output;
  return s;
}

std::size_t line_count(const std::string& text) { return static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n')); }

}  // namespace

TEST_CASE("axis values") {
  const Axis lin{0.0, 0.8, 5, AxisScale::Linear};
  const std::vector<double> l = lin.values();
  REQUIRE(l.size() == 5);
  CHECK(l[0] == 0.0);
  CHECK(l[2] == doctest::Approx(0.4));
  CHECK(l[4] == 0.8);
  const Axis lg{1e-4, 1e-1, 4, AxisScale::Log};
  const std::vector<double> g = lg.values();
  CHECK(g[0] == 1e-4);
  CHECK(g[1] == doctest::Approx(1e-3).epsilon(1e-12));
  CHECK(g[3] == 1e-1);
  CHECK(Axis{0.3, 0.3, 1}.values() == std::vector<double>{0.3});
  CHECK_THROWS_AS(Axis({0.0, 1.0, 3, AxisScale::Log}).validate("t"), std::invalid_argument);
  CHECK_THROWS_AS(Axis({1.0, 0.5, 3}).validate("x"), std::invalid_argument);
  CHECK_THROWS_AS(Axis({0.0, 1.0, 0}).validate("x"), std::invalid_argument);
  CHECK_THROWS_AS(parse_axis_scale("cubic"), std::invalid_argument);
}

TEST_CASE("cells run V outermost, then t, then lambda") {
  SweepSpec s;
  s.lambda = {0.0, 0.2, 3};
  s.t_over_u = {1e-3, 1e-2, 2, AxisScale::Log};
  s.v_over_u = {0.01, 0.04};
  CHECK(s.cell_count() == 12);
  CHECK(s.cell(0).lambda == 0.0);
  CHECK(s.cell(1).lambda == doctest::Approx(0.1));
  CHECK(s.cell(3).t_over_u == doctest::Approx(1e-2));
  CHECK(s.cell(3).lambda == 0.0);
  CHECK(s.cell(6).v_over_u == 0.04);
  CHECK(s.cell(11).lambda == doctest::Approx(0.2));
  CHECK_THROWS_AS(s.cell(12), std::out_of_range);
}

TEST_CASE("spec hash depends on content only") {
  SweepSpec a;
  SweepSpec b = a;
  b.output = "elsewhere.jsonl";
  b.workers = 8;
  CHECK(spec_hash(a) == spec_hash(b));
  CHECK(spec_hash(a).size() == 64);
  b.n_ph = 40;
  CHECK(spec_hash(a) != spec_hash(b));
  const SweepSpec c = SweepSpec::from_json(nlohmann::json::parse(a.to_json().dump()));
  CHECK(spec_hash(c) == spec_hash(a));
  const auto diff = spec_diff(nlohmann::json(a.to_json()), nlohmann::json(b.to_json()));
  REQUIRE(diff.size() == 1);
  CHECK(diff[0] == "/n_ph: 50 -> 40");
}

TEST_CASE("bitmap base64 round trip") {
  for (std::size_t n : {0u, 1u, 7u, 8u, 9u, 24u, 315u, 3075u}) {
    std::vector<bool> bits(n);
    for (std::size_t i = 0; i < n; ++i) bits[i] = (i * 7 + 3) % 5 < 2;
    CHECK(base64_decode(base64_encode(bits), n) == bits);
  }
  std::vector<bool> first{true, false, false, false, false, false, false, false};
  CHECK(base64_encode(first) == "AQ==");
  CHECK_THROWS_AS(base64_decode("AQ=", 8), std::invalid_argument);
  CHECK_THROWS_AS(base64_decode("AQ==", 16), std::invalid_argument);
}

TEST_CASE("small sweep writes records, checkpoint and summary") {
  TempDir dir;
  const SweepSpec spec = small_spec(dir.file("s.jsonl"));
  const SweepSummary sum = run_sweep(spec);
  CHECK(sum.cells == 9);
  CHECK(sum.computed == 9);
  CHECK(sum.failed == 0);
  const std::vector<ObservableRecord> recs = read_records(spec.output);
  REQUIRE(recs.size() == 9);
  for (std::size_t i = 0; i < recs.size(); ++i) {
    CHECK(recs[i].lambda == doctest::Approx(spec.cell(i).lambda));
    CHECK(recs[i].t_over_u == doctest::Approx(spec.cell(i).t_over_u));
    CHECK(recs[i].status == "ok");
    CHECK_FALSE(recs[i].wall_ms.has_value());
    CHECK(recs[i].n_ph == 6);
  }
  const Checkpoint ck = Checkpoint::load(checkpoint_path(spec.output));
  CHECK(ck.completed_count() == 9);
  CHECK(ck.offset == fs::file_size(spec.output));
  CHECK(ck.spec_hash == spec_hash(spec));
  const auto js = nlohmann::json::parse(slurp(summary_path(spec.output)));
  CHECK(js["cells"] == 9);
  CHECK(js["spec_hash"] == spec_hash(spec));
  CHECK(js["boundaries"].size() == 3);
}

TEST_CASE("interrupted sweep resumes to identical bytes") {
  TempDir dir;
  const SweepSpec whole = small_spec(dir.file("whole.jsonl"));
  run_sweep(whole);
  const std::string expected = slurp(whole.output);

  const SweepSpec part = small_spec(dir.file("part.jsonl"));
  RunOptions stop;
  stop.stop_after = 4;
  const SweepSummary first = run_sweep(part, stop);
  CHECK(first.computed == 4);
  CHECK(line_count(slurp(part.output)) == 4);
  CHECK_FALSE(fs::exists(summary_path(part.output)));
  // a record torn mid-write
  { std::ofstream(part.output, std::ios::app) << "{\"lambda\": 0.3, \"t_ov"; }

  RunOptions resume;
  resume.resume = true;
  const SweepSummary rest = run_sweep(part, resume);
  CHECK(rest.computed == 5);
  CHECK(slurp(part.output) == expected);

  // resuming a finished sweep does nothing
  const SweepSummary again = run_sweep(part, resume);
  CHECK(again.computed == 0);
  CHECK(slurp(part.output) == expected);

  // resuming from the checkpoint alone
  { std::ofstream(part.output, std::ios::app) << "junk"; }
  const SweepSummary viaCkpt = resume_sweep(checkpoint_path(part.output), part.output, 2);
  CHECK(viaCkpt.computed == 0);
  CHECK(slurp(part.output) == expected);
}

TEST_CASE("resume refuses a different or tampered sweep") {
  TempDir dir;
  const SweepSpec spec = small_spec(dir.file("r.jsonl"));
  RunOptions stop;
  stop.stop_after = 2;
  run_sweep(spec, stop);

  SweepSpec other = spec;
  other.n_ph = 7;
  RunOptions resume;
  resume.resume = true;
  try {
    run_sweep(other, resume);
    FAIL("expected ResumeError");
  } catch (const ResumeError& e) {
    CHECK(std::string(e.what()).find("/n_ph: 6 -> 7") != std::string::npos);
  }

  const std::string ck = checkpoint_path(spec.output);
  auto j = nlohmann::json::parse(slurp(ck));
  j["spec"]["n_ph"] = 7;
  { std::ofstream(ck, std::ios::trunc) << j.dump(); }
  CHECK_THROWS_AS(run_sweep(other, resume), ResumeError);
  CHECK_THROWS_AS(run_sweep(spec, resume), ResumeError);

  { std::ofstream(ck, std::ios::trunc) << "{not json"; }
  CHECK_THROWS_AS(run_sweep(spec, resume), ResumeError);
  CHECK_THROWS_AS(resume_sweep(dir.file("missing.ckpt"), dir.file("missing"), 1), ResumeError);
}

TEST_CASE("worker count does not change the output") {
  TempDir dir;
  SweepSpec one = small_spec(dir.file("one.jsonl"));
  SweepSpec three = small_spec(dir.file("three.jsonl"));
  three.workers = 3;
  run_sweep(one);
  run_sweep(three);
  CHECK(slurp(one.output) == slurp(three.output));
}

TEST_CASE("warm-started sweep resumes from the start of its row") {
  TempDir dir;
  SweepSpec whole = small_spec(dir.file("w.jsonl"));
  whole.warm_start = true;
  whole.workers = 2;
  run_sweep(whole);
  const std::string expected = slurp(whole.output);

  SweepSpec part = whole;
  part.output = dir.file("wp.jsonl");
  RunOptions stop;
  stop.stop_after = 4;
  run_sweep(part, stop);
  RunOptions resume;
  resume.resume = true;
  const SweepSummary rest = run_sweep(part, resume);
  CHECK(rest.computed == 6);  // cell 3 starts the second row and is redone
  CHECK(slurp(part.output) == expected);

  // warm starts change only the solver path, not the physics
  const auto cold = read_records(whole.output);
  SweepSpec plain = small_spec(dir.file("c.jsonl"));
  run_sweep(plain);
  const auto ref = read_records(plain.output);
  for (std::size_t i = 0; i < ref.size(); ++i) CHECK(cold[i].energy == doctest::Approx(ref[i].energy).epsilon(1e-9));
}

TEST_CASE("non-converging cells become failed records") {
  TempDir dir;
  SweepSpec spec = small_spec(dir.file("f.jsonl"));
  spec.lambda = {0.3, 0.3, 1};
  spec.t_over_u = {0.1, 0.1, 1};
  spec.tol = 1e-15;
  spec.max_iter = 5;
  const SweepSummary sum = run_sweep(spec);
  CHECK(sum.failed == 1);
  const auto recs = read_records(spec.output);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].status.rfind("failed", 0) == 0);
  CHECK_FALSE(recs[0].phase.has_value());
  CHECK(recs[0].lambda == 0.3);
  const auto line = nlohmann::json::parse(slurp(spec.output));
  CHECK(line["phase"].is_null());
  CHECK(line["d_occ_a"].is_null());
}

TEST_CASE("summary crossings interpolate the double occupancy") {
  SweepSpec spec;
  spec.lambda = {0.0, 0.4, 5};
  spec.t_over_u = {1e-3, 1e-3, 1};
  spec.v_over_u = {0.02};
  std::vector<ObservableRecord> recs(5);
  const double d[] = {0.0, 0.2, 1.0, 1.2, 2.0};
  for (int i = 0; i < 5; ++i) {
    recs[static_cast<std::size_t>(i)].lambda = 0.1 * i;
    recs[static_cast<std::size_t>(i)].v_over_u = 0.02;
    recs[static_cast<std::size_t>(i)].t_over_u = 1e-3;
    recs[static_cast<std::size_t>(i)].d_occ_a = recs[static_cast<std::size_t>(i)].d_occ_b = d[i];
    recs[static_cast<std::size_t>(i)].phase = i < 2 ? Phase::Mott : (i == 4 ? Phase::Paired : Phase::Bell);
  }
  const SweepSummary s = summarize(spec, recs);
  REQUIRE(s.boundaries.size() == 1);
  CHECK(*s.boundaries[0].lower == doctest::Approx(0.1 + 0.1 * (0.3 / 0.8)));
  CHECK(*s.boundaries[0].upper == doctest::Approx(0.3 + 0.1 * (0.3 / 0.8)));
  CHECK(s.phase_counts.at(0.02).at("Mott") == 2);
  CHECK(s.phase_counts.at(0.02).at("Bell") == 2);
  const auto j = s.to_json();
  CHECK(j["phase_counts"]["0.02"]["Delocalized"] == 0);
  recs.pop_back();
  CHECK_THROWS_AS(summarize(spec, recs), std::invalid_argument);
}

TEST_CASE("CSV export quotes and blanks as needed") {
  nlohmann::json a = {{"lambda", 0.1}, {"status", "failed: \"x\", y"}, {"phase", nullptr}, {"n_ph", 6}};
  nlohmann::json b = {{"lambda", 0.2}, {"status", "ok"}, {"phase", "Mott"}};
  std::ostringstream out;
  export_csv(std::vector<nlohmann::json>{a, b}, out);
  const std::string text = out.str();
  CHECK(text.rfind("lambda,t_over_u,v_over_u,n_ph,mode,", 0) == 0);
  CHECK(text.find("\"failed: \"\"x\"\", y\"\r\n") != std::string::npos);
  CHECK(line_count(text) == 3);
  std::istringstream lines(text);
  std::string header, first;
  std::getline(lines, header);
  std::getline(lines, first);
  CHECK(first.rfind("0.1,,,6,,", 0) == 0);
}

TEST_CASE("sweep spec validation") {
  SweepSpec s;
  CHECK_NOTHROW(s.validate());
  s.t_over_u = {0.0, 0.1, 3};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SweepSpec{};
  s.v_over_u = {};
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SweepSpec{};
  s.n_ph = 1;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
  s = SweepSpec{};
  s.workers = 0;
  CHECK_THROWS_AS(s.validate(), std::invalid_argument);
}
