#pragma once

#include <cstdint>
#include <span>
#include <string>

#include "cntsim/eigensolver.hpp"
#include "cntsim/observables.hpp"

namespace cntsim {

/// One grid point in dimensionless form, plus how to solve it.
struct PointSpec {
  double lambda = 0.0;
  double t_over_u = 1e-3;
  double v_over_u = 0.02;
  double omega0_over_u = kDefaultOmega0OverU;
  int n_ph = 50;  // phonon Fock states per tube
  Statistics mode = Statistics::ChargeOnly;
  bool shift = false;
  std::uint64_t seed = 1;
  int tubes = 2;
  bool timing = false;  // fill wall_ms; output is then no longer reproducible byte for byte
  SolverSettings solver;
  ShiftSettings shift_settings;
  PhaseThresholds thresholds;

  ModelParams params() const;
  void validate() const;
};

struct PointResult {
  ObservableRecord record;
  GroundStateResult ground;
};

/// Solves one point and measures every observable. `warm` is a state in the
/// frame displaced by `warm_shift`; both only seed the solver.
PointResult solve_point(const PointSpec& spec, std::span<const double> warm = {}, const PhononShift& warm_shift = {});

/// Record for a point whose solve failed: parameters filled, observables null.
ObservableRecord failed_record(const PointSpec& spec, const std::string& message,
                               const GroundStateResult* best = nullptr);

}  // namespace cntsim
