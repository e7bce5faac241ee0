#pragma once

#include <array>
#include <string>
#include <utility>
#include <vector>

#include "cntsim/hamiltonian.hpp"

namespace cntsim {

/// Site charges of one tube at half filling.
using ChargeVector = std::array<int, kSitesPerTube>;

inline constexpr ChargeVector kMottCharges{1, 1, 1, 1};
inline constexpr ChargeVector kPairedCharges{0, 2, 2, 0};
inline constexpr ChargeVector kLeftIntermediateCharges{1, 2, 1, 0};
inline constexpr ChargeVector kRightIntermediateCharges{0, 1, 2, 1};

/// "M", "P", "Il", "Ir" for the named states, otherwise the digits, e.g. "2011".
std::string charge_label(const ChargeVector& n);

/// The 19 half-filled charge patterns with at most two electrons per dot, in
/// the same order as the charge-only electron basis.
const std::vector<ChargeVector>& charge_configurations();

/// Phonon-mediated attraction Ut_{ij} = sum_{mu<=M} g_{i,mu} g_{j,mu} / (mu omega0).
struct EffectiveAttraction {
  std::array<std::array<double, kSitesPerTube>, kSitesPerTube> matrix{};
  int modes = 1;
  /// Upper bound on |Ut_{ij}(infinity) - Ut_{ij}(M)|.
  double tail_bound = 0.0;

  double operator()(int i, int j) const { return matrix[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)]; }
  /// sum_{ij} Ut_{ij} n_i n_j
  double pair_energy(const ChargeVector& n) const;
};

EffectiveAttraction effective_attraction(double g0, double omega0, int modes);

/// (8/pi)^2 g0^2/omega0 * sum_{mu > modes} mu^-4.
double mode_tail_bound(double g0, double omega0, int modes);

void validate_charges(const ChargeVector& n);

/// t = 0 energy of one tube in the polaron frame: U d - sum_{ij} Ut_{ij} n_i n_j.
double tube_atomic_energy(const ChargeVector& n, const ModelParams& params, int modes);

/// t = 0 energy of the two-tube charge pair, including V sum_i n_i^A n_i^B.
double atomic_energy(const ChargeVector& a, const ChargeVector& b, const ModelParams& params, int modes);

using ChargePair = std::pair<ChargeVector, ChargeVector>;

struct AtomicManifold {
  std::vector<ChargePair> members;
  double energy = 0.0;
  std::size_t degeneracy() const { return members.size(); }
  bool contains(const ChargeVector& a, const ChargeVector& b) const;
};

/// Exhaustive minimisation over all 19 x 19 charge pairs.
AtomicManifold atomic_ground_manifold(const ModelParams& params, int modes, double rel_tol = 1e-12);

/// Same, for a single tube (B factor absent).
std::vector<ChargeVector> tube_ground_manifold(const ModelParams& params, int modes, double rel_tol = 1e-12);

struct CriticalCouplings {
  double mott_to_bell = 0.0;    // first lambda at which |M>|M> stops being the ground state (0 if it never is)
  double bell_to_paired = 0.0;  // lambda from which |P>|P> is the ground state
  /// Every change of the ground charge pair along lambda, ascending.
  std::vector<double> breakpoints;
  /// Ground charge pair on each interval; size breakpoints.size() + 1.
  std::vector<ChargePair> ground_pairs;
  double tail_bound = 0.0;  // for g0^2/omega0 = U
};

/// Exact crossings of the lower envelope of the t = 0 energies, which are all
/// linear in lambda at fixed V/U.
CriticalCouplings critical_lambdas(double v_over_u, int modes);

/// Coherent-displacement phonon number (sum_i n_i g_{i,1} / omega0)^2.
double phonon_number_estimate(const ChargeVector& n, double g0, double omega0);

/// omega0 -> k omega0, U -> U / k; lambda, g0, t and V are unchanged.
ModelParams rescale(const ModelParams& params, double k);

}  // namespace cntsim
