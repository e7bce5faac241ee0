#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "cntsim/hamiltonian.hpp"

namespace cntsim {

/// In-place projection onto an invariant subspace of H (for example a tube-exchange sector).
using SectorProjector = std::function<void(std::span<double>)>;

struct LanczosSettings {
  double tol = 1e-10;       // absolute residual ||H psi - E psi||
  int max_iter = 50'000;    // matrix-vector products
  int basis_size = 40;      // Krylov vectors held before a thick restart
  int keep = 12;            // Ritz vectors carried over a restart
  std::uint64_t seed = 1;
  double guide_weight = 0.5;  // share of the atomic-limit guide in the start vector
};

struct LanczosStart {
  std::span<const double> initial;  // warm start; used as given when non-empty
  std::span<const double> guide;    // mixed with a seeded random vector otherwise
  SectorProjector projector;
};

struct ShiftStep {
  PhononShift alpha;
  double mean_a = 0.0;  // <a> on tube A in the displaced frame
  double mean_b = 0.0;
  double energy = 0.0;
};

struct GroundStateResult {
  double energy = 0.0;
  std::vector<double> vector;
  double residual = 0.0;
  int iterations = 0;  // matrix-vector products
  std::optional<double> gap;
  bool near_degenerate = false;
  bool converged = false;
  int exchange_parity = 0;  // +1 / -1 when solved in an exchange sector, 0 otherwise
  std::optional<PhononShift> shift;
  std::vector<ShiftStep> shift_history;
};

/// Thrown when a solver runs out of iterations; carries the best iterate.
class ConvergenceError : public std::runtime_error {
 public:
  ConvergenceError(const std::string& what, GroundStateResult best)
      : std::runtime_error(what), best_(std::move(best)) {}
  const GroundStateResult& best() const { return best_; }

 private:
  GroundStateResult best_;
};

/// Lowest eigenpair by thick-restart Lanczos with full reorthogonalisation
/// (two Gram-Schmidt passes against every stored Krylov vector).
GroundStateResult ground_state_lanczos(const SparseOperator& h, const LanczosSettings& settings,
                                       const LanczosStart& start = {});

double residual_norm(const SparseOperator& h, std::span<const double> psi, double energy);

struct DenseSpectrum {
  Eigen::VectorXd values;   // ascending
  Eigen::MatrixXd vectors;  // columns
};

inline constexpr std::size_t kDenseDimensionCap = 5000;

DenseSpectrum ground_state_dense(const SparseOperator& h, std::size_t max_dimension = kDenseDimensionCap);

// --- model-aware drivers -----------------------------------------------------

enum class ExchangeMode {
  Both,       // solve both tube-exchange sectors and keep the lower
  Symmetric,  // symmetric sector only
  Off,        // no sector restriction
};

std::string to_string(ExchangeMode mode);
ExchangeMode parse_exchange_mode(std::string_view text);

struct SolverSettings {
  LanczosSettings lanczos;
  ExchangeMode exchange = ExchangeMode::Both;
  double degeneracy_threshold = 1e-6;  // in units of U
  std::size_t max_dimension = 40'000'000;
};

struct ShiftSettings {
  double tol = 1e-8;  // on |<a>| in the displaced frame
  int max_outer = 50;
};

/// Coherent-state amplitudes e^{-b^2/2} b^n / sqrt(n!) for n < states.
std::vector<double> coherent_amplitudes(double beta, std::size_t states);

/// Atomic-limit ground manifold dressed with the exact t = 0 phonon
/// displacements, expressed in the frame shifted by `shift`. Members (a, b)
/// with a > b carry the sign `parity`.
std::vector<double> atomic_guide(const TubeModel& model, const PhononShift& shift = {}, int parity = 1);

/// psi -> (psi + parity * X psi) / 2 with X the tube exchange.
void project_exchange(std::span<double> psi, const HilbertSpace& space, int parity);

/// <a> for tube A and tube B in the frame the state is expressed in.
std::pair<double, double> mean_annihilation(std::span<const double> psi, const HilbertSpace& space);

GroundStateResult solve_ground_state(const TubeModel& model, const SolverSettings& settings,
                                     const PhononShift& shift = {}, std::span<const double> warm = {});

/// Self-consistent coherent shift: solve in the frame a -> a + alpha, measure
/// <a>, update alpha <- alpha + <a>, until |<a>| < tol on both tubes.
/// `initial` and `warm` (a state in the frame of `initial`) seed the iteration.
GroundStateResult iterative_shift_solve(const TubeModel& model, const ShiftSettings& shift_settings,
                                        const SolverSettings& settings, const PhononShift& initial = {},
                                        std::span<const double> warm = {});

}  // namespace cntsim
