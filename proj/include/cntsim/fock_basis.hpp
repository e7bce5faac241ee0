#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace cntsim {

/// How electrons on one tube are represented.
///
/// Spinful keeps (site, spin) occupations with fermionic signs. ChargeOnly keeps
/// only the site charge 0..2 and hops with truncated-boson amplitudes, which
/// gives the 19-state tube basis used for phase-diagram runs.
enum class Statistics { Spinful, ChargeOnly };

std::string to_string(Statistics mode);
Statistics parse_statistics(std::string_view text);

enum class Spin : int { Up = 0, Down = 1 };

inline constexpr int kSitesPerTube = 4;
inline constexpr int kMaxSites = 8;
inline constexpr int kMaxSiteCharge = 2;

/// Occupation-number configuration of a single tube.
///
/// The code is the canonical encoding:
///  - Spinful: bit (2*site + spin) is set when that mode is occupied. The bit
///    order is the fermion ordering (site-major, spin-minor).
///  - ChargeOnly: two bits per site, bits [2*site, 2*site+1] hold the charge.
class ElectronConfig {
 public:
  ElectronConfig(Statistics mode, int sites, std::uint32_t code);

  static ElectronConfig from_charges(std::span<const int> charges);
  static ElectronConfig from_spins(std::span<const int> up, std::span<const int> down);

  Statistics statistics() const { return mode_; }
  int sites() const { return sites_; }
  std::uint32_t code() const { return code_; }

  int charge(int site) const;
  bool occupied(int site, Spin spin) const;
  int total() const;
  int doubly_occupied() const;
  std::vector<int> charges() const;

  bool operator==(const ElectronConfig&) const = default;

 private:
  Statistics mode_;
  int sites_;
  std::uint32_t code_;
};

struct Sector {
  Statistics mode = Statistics::ChargeOnly;
  int n_up = 0;
  int n_down = 0;
  int charge = 0;

  static Sector spinful(int n_up, int n_down) { return {Statistics::Spinful, n_up, n_down, n_up + n_down}; }
  static Sector charge_only(int total) { return {Statistics::ChargeOnly, 0, 0, total}; }
  int electrons() const { return charge; }
};

struct HopResult {
  ElectronConfig config;
  double amplitude;  // fermionic sign (spinful) or sqrt(n_from * (n_to + 1)) (charge-only)
};

/// Matrix element of c^dag_{to,spin} c_{from,spin} on `config`.
/// Empty when the source is empty or the target is blocked. Sites must be
/// nearest neighbours on the open chain. `spin` is ignored in charge-only mode.
std::optional<HopResult> hop_apply(const ElectronConfig& config, int from, int to, Spin spin = Spin::Up);

/// Deterministically ordered basis of one particle-number sector.
class ElectronBasis {
 public:
  ElectronBasis(int sites, const Sector& sector);

  std::size_t size() const { return configs_.size(); }
  const ElectronConfig& operator[](std::size_t i) const { return configs_[i]; }
  auto begin() const { return configs_.begin(); }
  auto end() const { return configs_.end(); }

  int sites() const { return sites_; }
  const Sector& sector() const { return sector_; }
  Statistics statistics() const { return sector_.mode; }

  std::optional<std::size_t> find(const ElectronConfig& config) const;
  /// Throws std::out_of_range when the configuration is not in the sector.
  std::size_t index(const ElectronConfig& config) const;

  /// All basis indices whose charge pattern equals `charges` (several in spinful mode).
  std::vector<std::size_t> indices_with_charges(std::span<const int> charges) const;

 private:
  int sites_;
  Sector sector_;
  std::vector<ElectronConfig> configs_;
  std::vector<std::int32_t> lookup_;  // code -> index, -1 when absent
};

ElectronBasis enumerate_sector(int sites, const Sector& sector);

/// Truncated single-mode phonon space |0>..|cutoff>.
class PhononBasis {
 public:
  explicit PhononBasis(int cutoff);
  static PhononBasis with_states(int states) { return PhononBasis(states - 1); }

  int cutoff() const { return cutoff_; }
  std::size_t size() const { return static_cast<std::size_t>(cutoff_) + 1; }

 private:
  int cutoff_;
};

/// (electrons A) x (electrons B) x (phonons A) x (phonons B), row-major.
/// A single tube is the same space with unit B factors.
class HilbertSpace {
 public:
  enum Factor : int { ElectronsA = 0, ElectronsB = 1, PhononsA = 2, PhononsB = 3 };
  using Factors = std::array<std::size_t, 4>;

  explicit HilbertSpace(Factors dims);
  static HilbertSpace single_tube(std::size_t electrons, std::size_t phonons) {
    return HilbertSpace({electrons, 1, phonons, 1});
  }
  static HilbertSpace two_tube(std::size_t electrons, std::size_t phonons) {
    return HilbertSpace({electrons, electrons, phonons, phonons});
  }

  std::size_t dim(Factor f) const { return dims_[f]; }
  const Factors& dims() const { return dims_; }
  std::size_t size() const { return size_; }
  bool has_second_tube() const { return dims_[ElectronsB] > 1 || dims_[PhononsB] > 1; }

  std::size_t index(const Factors& f) const;
  Factors factors(std::size_t global) const;

 private:
  Factors dims_;
  std::size_t size_;
};

std::size_t composite_index(std::size_t ea, std::size_t eb, std::size_t pa, std::size_t pb, const HilbertSpace& space);

}  // namespace cntsim
