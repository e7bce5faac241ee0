#include <doctest.h>

#include <omp.h>

#include <cmath>
#include <numeric>

#include "cntsim/eigensolver.hpp"
#include "cntsim/lang_firsov.hpp"

using namespace cntsim;

namespace {

SparseOperator from_dense(const Eigen::MatrixXd& a) {
  std::vector<std::int64_t> rp{0};
  std::vector<std::int32_t> cols;
  std::vector<double> vals;
  for (Eigen::Index r = 0; r < a.rows(); ++r) {
    for (Eigen::Index c = 0; c < a.cols(); ++c) {
      if (a(r, c) == 0.0) continue;
      cols.push_back(static_cast<std::int32_t>(c));
      vals.push_back(a(r, c));
    }
    rp.push_back(static_cast<std::int64_t>(cols.size()));
  }
  return SparseOperator(static_cast<std::size_t>(a.rows()), rp, cols, vals);
}

SolverSettings tight() {
  SolverSettings s;
  s.lanczos.tol = 1e-11;
  return s;
}

}  // namespace

TEST_CASE("Lanczos matches dense diagonalisation on small models") {
  struct Case {
    double lambda, t, v;
    int states, tubes;
  };
  for (const Case c : {Case{0.1, 0.05, 0.02, 10, 1}, Case{0.5, 0.2, 0.0, 12, 1}, Case{0.3, 0.1, 0.04, 3, 2},
                       Case{0.7, 0.02, 0.02, 3, 2}}) {
    const TubeModel m(ModelParams::from_ratios(c.lambda, c.t, c.v), c.states, c.tubes);
    const SparseOperator h = m.assemble();
    const DenseSpectrum dense = ground_state_dense(h);
    SolverSettings s = tight();
    s.exchange = ExchangeMode::Off;
    const GroundStateResult r = solve_ground_state(m, s);
    CHECK(std::abs(r.energy - dense.values(0)) < 1e-9);
    CHECK(r.converged);
    // overlap with the dense ground vector, when non-degenerate
    if (dense.values(1) - dense.values(0) > 1e-6) {
      const Eigen::Map<const Eigen::VectorXd> v(r.vector.data(), static_cast<Eigen::Index>(r.vector.size()));
      CHECK(std::abs(v.dot(dense.vectors.col(0))) == doctest::Approx(1.0).epsilon(1e-8));
    }
  }
}

TEST_CASE("diagonal operator gives its smallest entry") {
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(7, 7);
  const double d[] = {5.0, 3.0, -1.0, 7.0, 2.5, 0.0, 4.0};
  for (int i = 0; i < 7; ++i) a(i, i) = d[i];
  LanczosSettings s;
  s.tol = 1e-12;
  const GroundStateResult r = ground_state_lanczos(from_dense(a), s);
  CHECK(r.energy == doctest::Approx(-1.0).epsilon(1e-12));
  CHECK(std::abs(r.vector[2]) == doctest::Approx(1.0).epsilon(1e-10));
}

TEST_CASE("two by two matrix has the closed-form lower eigenvalue") {
  const double a = 1.3, b = -0.7, c = -0.4;
  Eigen::MatrixXd m(2, 2);
  m << a, b, b, c;
  LanczosSettings s;
  s.tol = 1e-12;
  const GroundStateResult r = ground_state_lanczos(from_dense(m), s);
  const double want = 0.5 * (a + c) - std::sqrt(0.25 * (a - c) * (a - c) + b * b);
  CHECK(r.energy == doctest::Approx(want).epsilon(1e-12));
}

TEST_CASE("dense spectrum sums to the trace") {
  const TubeModel m(ModelParams::from_ratios(0.4, 0.1, 0.02), 8, 1);
  const SparseOperator h = m.assemble();
  const DenseSpectrum d = ground_state_dense(h);
  double trace = 0.0;
  for (std::size_t i = 0; i < h.dimension(); ++i) trace += h.diagonal(i);
  CHECK(d.values.sum() == doctest::Approx(trace).epsilon(1e-12));
  for (Eigen::Index i = 1; i < d.values.size(); ++i) CHECK(d.values(i - 1) <= d.values(i));
}

TEST_CASE("dense solver refuses large operators") {
  const TubeModel m(ModelParams::from_ratios(0.4, 0.1, 0.02), 6, 2);
  CHECK(m.space().size() > kDenseDimensionCap);
  CHECK_THROWS_AS(ground_state_dense(m.assemble()), std::length_error);
}

TEST_CASE("returned residual honours the tolerance and is recomputable") {
  const TubeModel m(ModelParams::from_ratios(0.315, 0.01, 0.02), 8, 2);
  const SolverSettings s = tight();
  const GroundStateResult r = solve_ground_state(m, s);
  const SparseOperator h = m.assemble();
  CHECK(r.residual <= s.lanczos.tol);
  CHECK(std::abs(residual_norm(h, r.vector, r.energy) - r.residual) <= 1e-12);
  CHECK(std::abs(std::sqrt(std::inner_product(r.vector.begin(), r.vector.end(), r.vector.begin(), 0.0)) - 1.0) <
        1e-12);
  CHECK(r.exchange_parity != 0);
}

TEST_CASE("identical inputs give bit-identical results for any thread count") {
  const TubeModel m(ModelParams::from_ratios(0.3, 0.05, 0.02), 8, 2);
  const SolverSettings s = tight();
  const int saved = omp_get_max_threads();
  omp_set_num_threads(1);
  const GroundStateResult a = solve_ground_state(m, s);
  omp_set_num_threads(4);
  const GroundStateResult b = solve_ground_state(m, s);
  const GroundStateResult c = solve_ground_state(m, s);
  omp_set_num_threads(saved);
  CHECK(a.energy == b.energy);
  CHECK(a.vector == b.vector);
  CHECK(b.vector == c.vector);
  CHECK(a.iterations == b.iterations);
}

TEST_CASE("uncoupled tubes give twice the single-tube energy") {
  for (double lambda : {0.1, 0.315, 0.6}) {
    const ModelParams p = ModelParams::from_ratios(lambda, 0.05, 0.0);
    const GroundStateResult one = solve_ground_state(TubeModel(p, 8, 1), tight());
    const GroundStateResult two = solve_ground_state(TubeModel(p, 8, 2), tight());
    CHECK(two.energy == doctest::Approx(2.0 * one.energy).epsilon(1e-10));
  }
}

TEST_CASE("exchange sectors: both equals the unrestricted ground energy") {
  const TubeModel m(ModelParams::from_ratios(0.315, 0.01, 0.02), 8, 2);
  SolverSettings off = tight();
  off.exchange = ExchangeMode::Off;
  SolverSettings both = tight();
  SolverSettings sym = tight();
  sym.exchange = ExchangeMode::Symmetric;
  const double e_off = solve_ground_state(m, off).energy;
  const double e_both = solve_ground_state(m, both).energy;
  const double e_sym = solve_ground_state(m, sym).energy;
  CHECK(e_both == doctest::Approx(e_off).epsilon(1e-10));
  CHECK(e_sym >= e_both - 1e-10);
  CHECK(parse_exchange_mode("symmetric") == ExchangeMode::Symmetric);
  CHECK(to_string(ExchangeMode::Both) == "both");
  CHECK_THROWS_AS(parse_exchange_mode("sideways"), std::invalid_argument);
}

TEST_CASE("exchange projection is idempotent") {
  const TubeModel m(ModelParams::from_ratios(0.315, 0.01, 0.02), 4, 2);
  const HilbertSpace space = m.space();
  std::vector<double> v(space.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = std::sin(0.37 * static_cast<double>(i) + 0.1);
  for (int parity : {1, -1}) {
    std::vector<double> p = v;
    project_exchange(p, space, parity);
    std::vector<double> q = p;
    project_exchange(q, space, parity);
    for (std::size_t i = 0; i < v.size(); ++i) CHECK(std::abs(p[i] - q[i]) < 1e-15);
  }
}

TEST_CASE("ground energy is a variational bound") {
  const TubeModel m(ModelParams::from_ratios(0.32, 0.01, 0.02), 8, 2);
  const SparseOperator h = m.assemble();
  const GroundStateResult r = solve_ground_state(m, tight());
  const std::vector<double> guide = atomic_guide(m);
  const std::vector<double> hg = matvec(h, guide);
  const double norm2 = std::inner_product(guide.begin(), guide.end(), guide.begin(), 0.0);
  const double rayleigh = std::inner_product(guide.begin(), guide.end(), hg.begin(), 0.0) / norm2;
  CHECK(r.energy <= rayleigh + 1e-12);
}

TEST_CASE("raising the phonon cutoff never raises the energy") {
  const ModelParams p = ModelParams::from_ratios(0.5, 0.05, 0.02);
  double previous = 1e300;
  for (int states : {4, 6, 8, 10, 12}) {
    const double e = solve_ground_state(TubeModel(p, states, 1), tight()).energy;
    CHECK(e <= previous + 1e-10);
    previous = e;
  }
}

TEST_CASE("coherent amplitudes are normalised") {
  const std::vector<double> c = coherent_amplitudes(2.0, 60);
  const double n = std::inner_product(c.begin(), c.end(), c.begin(), 0.0);
  CHECK(n == doctest::Approx(1.0).epsilon(1e-13));
  CHECK(c[0] == doctest::Approx(std::exp(-2.0)).epsilon(1e-14));
}

TEST_CASE("shift at t = 0 lands on the exact displacement in one update") {
  const ModelParams p = ModelParams::from_ratios(0.6, 0.0, 0.0);
  const TubeModel m(p, 40, 1);
  ShiftSettings shift;
  shift.tol = 1e-8;
  const GroundStateResult r = iterative_shift_solve(m, shift, tight());
  REQUIRE(r.shift.has_value());
  REQUIRE(r.shift_history.size() >= 2);
  // phonon displacement of the paired charge pattern: -sum_i n_i g_{i,1} / omega0
  double coupling = 0.0;
  for (int i = 0; i < 4; ++i) coupling += kPairedCharges[static_cast<std::size_t>(i)] * coupling_constant(i + 1, 1, p.g0);
  const double exact = -coupling / p.omega0;
  CHECK(r.shift_history[1].alpha.a == doctest::Approx(exact).epsilon(1e-8));
  CHECK(r.shift->a == doctest::Approx(exact).epsilon(1e-8));
  CHECK(r.shift->a * r.shift->a == doctest::Approx(phonon_number_estimate(kPairedCharges, p.g0, p.omega0)).epsilon(1e-8));
  CHECK(r.shift->b == 0.0);
}

TEST_CASE("no coupling leaves the shift at zero") {
  const TubeModel m(ModelParams::from_ratios(0.0, 0.1, 0.02), 6, 2);
  const GroundStateResult r = iterative_shift_solve(m, ShiftSettings{}, tight());
  REQUIRE(r.shift.has_value());
  CHECK(std::abs(r.shift->a) < 1e-12);
  CHECK(std::abs(r.shift->b) < 1e-12);
}

TEST_CASE("shifted and unshifted frames agree on the ground energy") {
  // The displaced frame needs far fewer phonon states for the same accuracy.
  const TubeModel m(ModelParams::from_ratios(0.5, 0.05, 0.02), 45, 1);
  const GroundStateResult plain = solve_ground_state(m, tight());
  const GroundStateResult shifted = iterative_shift_solve(TubeModel(m.params, 10, 1), ShiftSettings{}, tight());
  CHECK(std::abs(shifted.energy - plain.energy) < 1e-9);
}

TEST_CASE("running out of iterations raises with the best iterate") {
  const TubeModel m(ModelParams::from_ratios(0.3, 0.1, 0.02), 8, 2);
  SolverSettings s;
  s.lanczos.tol = 1e-14;
  s.lanczos.max_iter = 10;
  s.exchange = ExchangeMode::Off;
  try {
    solve_ground_state(m, s);
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(e.best().vector.size() == m.space().size());
    CHECK(std::isfinite(e.best().residual));
    CHECK_FALSE(e.best().converged);
  }
}

TEST_CASE("near-degenerate ground states are flagged") {
  const ModelParams w = ModelParams::from_ratios(0.315, 0.0, 0.02, 4.0);
  const GroundStateResult bell = solve_ground_state(TubeModel(w, 12, 2), tight());
  CHECK(bell.near_degenerate);
  REQUIRE(bell.gap.has_value());
  CHECK(*bell.gap < 1e-6);
  const ModelParams mott = ModelParams::from_ratios(0.1, 0.0, 0.02, 4.0);
  CHECK_FALSE(solve_ground_state(TubeModel(mott, 12, 2), tight()).near_degenerate);
}

TEST_CASE("bad solver input is rejected") {
  const TubeModel m(ModelParams::from_ratios(0.3, 0.1, 0.02), 4, 1);
  const SparseOperator h = m.assemble();
  LanczosSettings s;
  s.tol = 0.0;
  CHECK_THROWS_AS(ground_state_lanczos(h, s), std::invalid_argument);
  std::vector<double> wrong(3, 1.0);
  LanczosStart start;
  start.initial = wrong;
  CHECK_THROWS_AS(ground_state_lanczos(h, LanczosSettings{}, start), std::invalid_argument);
}
