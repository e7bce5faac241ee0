#pragma once

#include <array>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "cntsim/hamiltonian.hpp"

namespace cntsim {

/// Which of the four tensor factors (eA, eB, pA, pB) are kept.
using FactorMask = std::array<bool, 4>;

inline constexpr FactorMask kKeepTubeA{true, false, true, false};
inline constexpr FactorMask kKeepTubeB{false, true, false, true};
inline constexpr FactorMask kKeepElectronsA{true, false, false, false};
inline constexpr FactorMask kKeepElectronsB{false, true, false, false};
inline constexpr FactorMask kKeepElectrons{true, true, false, false};
inline constexpr FactorMask kKeepPhononsA{false, false, true, false};
inline constexpr FactorMask kKeepPhononsB{false, false, false, true};
inline constexpr FactorMask kKeepPhonons{false, false, true, true};

inline constexpr std::size_t kDensityMatrixCap = 8000;

struct DensityMatrix {
  Eigen::MatrixXd matrix;
  FactorMask kept{};
  std::vector<std::size_t> dims;  // dimensions of the kept factors, in factor order

  std::size_t size() const { return static_cast<std::size_t>(matrix.rows()); }
  double trace() const { return matrix.trace(); }
  Eigen::VectorXd eigenvalues() const;
};

/// Partial trace of |psi><psi| over the factors not in `keep`.
DensityMatrix reduced_density_matrix(std::span<const double> psi, const HilbertSpace& space, const FactorMask& keep,
                                     std::size_t max_dimension = kDensityMatrixCap);

/// -sum p ln p over the spectrum (natural log, 0 ln 0 = 0).
double von_neumann_entropy(const Eigen::MatrixXd& rho);
double von_neumann_entropy(const DensityMatrix& rho);

/// S(A) + S(B) - S(AB) for a density matrix on A (x) B with B the fast index.
double mutual_information(const Eigen::MatrixXd& rho_ab, std::size_t dim_a, std::size_t dim_b);

/// Phonon-phonon mutual information of a two-tube pure state. S(pA pB) is
/// taken from the electronic complement, which has the same spectrum.
double mutual_information_phonons(std::span<const double> psi, const HilbertSpace& space);

/// Partial transpose on the B factor (the fast index).
Eigen::MatrixXd partial_transpose(const Eigen::MatrixXd& rho, std::size_t dim_a, std::size_t dim_b);

/// (||rho^{T_B}||_1 - 1) / 2.
double negativity(const Eigen::MatrixXd& rho, std::size_t dim_a, std::size_t dim_b);

/// Lab: electron-only reduced state as it stands. Polaron: first undo the
/// configuration-dependent coherent displacement of each tube's mode (the
/// exact t = 0 polaron transformation), then trace the phonons.
enum class Frame { Lab, Polaron };

/// <Phi| rho_el |Phi> with |Phi> = (|M,P> + |P,M>)/sqrt(2). In spinful mode the
/// overlap is taken with the span of (|M_s,P> + |P,M_s>)/sqrt(2) over spin patterns s.
double bell_fidelity(std::span<const double> psi, const TubeModel& model, const PhononShift& shift = {},
                     Frame frame = Frame::Polaron);

/// Truncated displacement exp(beta (a^dag - a)) on `states` Fock states.
Eigen::MatrixXd displacement_matrix(double beta, std::size_t states);

enum class Phase { Mott, Bell, Paired, Delocalized };
std::string to_string(Phase phase);
Phase parse_phase(std::string_view text);

struct PhaseThresholds {
  double mott_max_double = 0.25;
  double paired_min_double = 1.75;
  double bell_double_window = 0.25;
  double bell_min_fidelity = 0.8;
  double charge_corr_eps = 0.02;
};

using SiteMatrix = std::array<std::array<double, kSitesPerTube>, kSitesPerTube>;

/// Everything measured at one grid point. Two-tube-only quantities are NaN for a single tube.
struct ObservableRecord {
  double lambda = 0.0;
  double t_over_u = 0.0;
  double v_over_u = 0.0;
  int n_ph = 0;
  Statistics mode = Statistics::ChargeOnly;
  std::uint64_t seed = 0;

  double energy = 0.0;
  double residual = 0.0;
  int iterations = 0;
  bool near_degenerate = false;

  double d_occ_a = 0.0;
  double d_occ_b = 0.0;
  double phonon_n_a = 0.0;
  double phonon_n_b = 0.0;
  double charge_corr_avg_a = 0.0;
  double charge_corr_avg_b = 0.0;
  SiteMatrix charge_corr_matrix_a{};
  SiteMatrix charge_corr_matrix_b{};
  double var_a_a = 0.0;
  double var_a_b = 0.0;
  double mutual_info_phonon = 0.0;
  double ent_entropy_ab = 0.0;
  double negativity_phonon = 0.0;
  double bell_fidelity = 0.0;
  std::optional<Phase> phase;
  std::optional<double> wall_ms;
  std::string status = "ok";

  double mean_double_occupancy() const;
  double mean_charge_corr() const;
};

/// Fills every observable of the record from a converged ground state that is
/// expressed in the frame displaced by `shift`. Solver diagnostics are left to the caller.
ObservableRecord measure_point(std::span<const double> psi, const TubeModel& model, const PhononShift& shift = {},
                               const PhaseThresholds& thresholds = {});

Phase classify_phase(const ObservableRecord& record, const PhaseThresholds& thresholds = {});

/// JSON Lines object with the persisted field names, in persisted order.
nlohmann::ordered_json to_json(const ObservableRecord& record);
ObservableRecord record_from_json(const nlohmann::json& j);

}  // namespace cntsim
