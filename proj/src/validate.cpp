#include "cntsim/validate.hpp"

#include <cmath>
#include <numbers>
#include <sstream>

#include "cntsim/eigensolver.hpp"
#include "cntsim/lang_firsov.hpp"

namespace cntsim {

namespace {

std::string fmt(const char* label, double value) {
  std::ostringstream s;
  s.precision(3);
  s << label << " " << std::scientific << value;
  return s.str();
}

CheckResult critical_couplings() {
  const double base = std::numbers::pi * std::numbers::pi / 32.0;
  double worst = 0.0;
  for (double v : {0.0, 0.01, 0.02, 0.04, 0.5}) {
    const CriticalCouplings c = critical_lambdas(v, 1);
    worst = std::max(worst, std::abs(c.mott_to_bell - base));
    worst = std::max(worst, std::abs(c.bell_to_paired - base * (1.0 + 2.0 * v)));
  }
  return {"atomic critical couplings (single mode)", worst < 1e-9, fmt("max deviation", worst)};
}

CheckResult krylov_vs_dense() {
  double worst = 0.0;
  bool ok = true;
  for (double lambda : {0.1, 0.315, 0.6}) {
    for (double t : {1e-3, 0.05}) {
      const TubeModel m(ModelParams::from_ratios(lambda, t, 0.0), 12, 1);
      const SparseOperator h = m.assemble();
      const double dense = ground_state_dense(h).values(0);
      LanczosSettings s;
      const GroundStateResult k = ground_state_lanczos(h, s);
      const double d = k.energy - dense;
      worst = std::max(worst, std::abs(d));
      ok = ok && std::abs(d) < 1e-8 && d > -1e-10;
    }
  }
  return {"Krylov vs dense ground energy", ok, fmt("max |dE|", worst)};
}

CheckResult atomic_limit() {
  double worst = 0.0;
  for (double lambda : {0.1, 0.3, 0.6}) {
    ModelParams p = ModelParams::from_ratios(lambda, 0.0, 0.0);
    const TubeModel m(p, 40, 1);
    const double dense = ground_state_dense(m.assemble()).values(0);
    double best = 1e300;
    for (const auto& n : charge_configurations()) best = std::min(best, tube_atomic_energy(n, p, 1));
    worst = std::max(worst, std::abs(dense - best));
  }
  return {"t = 0 spectrum vs atomic energies", worst < 1e-8, fmt("max |dE|", worst)};
}

CheckResult factorization() {
  double worst = 0.0;
  for (double lambda : {0.2, 0.5}) {
    const ModelParams p = ModelParams::from_ratios(lambda, 0.02, 0.0);
    SolverSettings s;
    s.exchange = ExchangeMode::Symmetric;
    const double one = solve_ground_state(TubeModel(p, 8, 1), s).energy;
    const double two = solve_ground_state(TubeModel(p, 8, 2), s).energy;
    worst = std::max(worst, std::abs(two - 2.0 * one) / std::abs(2.0 * one));
  }
  return {"V = 0 two-tube energy = 2 x single tube", worst < 1e-8, fmt("max relative deviation", worst)};
}

}  // namespace

std::vector<CheckResult> run_validation() {
  return {critical_couplings(), krylov_vs_dense(), atomic_limit(), factorization()};
}

}  // namespace cntsim
