#include "cntsim/fock_basis.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <limits>
#include <stdexcept>

namespace cntsim {

namespace {

void check_sites(int sites) {
  if (sites < 1 || sites > kMaxSites) {
    throw std::invalid_argument("site count must be in [1, " + std::to_string(kMaxSites) + "], got " +
                                std::to_string(sites));
  }
}

std::uint32_t mode_bit(int site, Spin spin) { return 1u << (2 * site + static_cast<int>(spin)); }

}  // namespace

std::string to_string(Statistics mode) { return mode == Statistics::Spinful ? "spinful" : "charge"; }

Statistics parse_statistics(std::string_view text) {
  if (text == "spinful") return Statistics::Spinful;
  if (text == "charge" || text == "charge-only") return Statistics::ChargeOnly;
  throw std::invalid_argument("unknown statistics mode '" + std::string(text) + "' (expected spinful|charge)");
}

ElectronConfig::ElectronConfig(Statistics mode, int sites, std::uint32_t code) : mode_(mode), sites_(sites), code_(code) {
  check_sites(sites);
  if (sites < 16 && (code >> (2 * sites)) != 0) throw std::invalid_argument("configuration code has bits beyond the last site");
  if (mode == Statistics::ChargeOnly) {
    for (int s = 0; s < sites; ++s) {
      if (charge(s) > kMaxSiteCharge) throw std::invalid_argument("site charge above 2");
    }
  }
}

ElectronConfig ElectronConfig::from_charges(std::span<const int> charges) {
  std::uint32_t code = 0;
  for (std::size_t s = 0; s < charges.size(); ++s) {
    if (charges[s] < 0 || charges[s] > kMaxSiteCharge) throw std::invalid_argument("site charge must be 0, 1 or 2");
    code |= static_cast<std::uint32_t>(charges[s]) << (2 * s);
  }
  return ElectronConfig(Statistics::ChargeOnly, static_cast<int>(charges.size()), code);
}

ElectronConfig ElectronConfig::from_spins(std::span<const int> up, std::span<const int> down) {
  if (up.size() != down.size()) throw std::invalid_argument("spin occupation vectors differ in length");
  std::uint32_t code = 0;
  for (std::size_t s = 0; s < up.size(); ++s) {
    if ((up[s] | down[s]) & ~1) throw std::invalid_argument("spin occupations must be 0 or 1");
    if (up[s]) code |= mode_bit(static_cast<int>(s), Spin::Up);
    if (down[s]) code |= mode_bit(static_cast<int>(s), Spin::Down);
  }
  return ElectronConfig(Statistics::Spinful, static_cast<int>(up.size()), code);
}

int ElectronConfig::charge(int site) const {
  if (site < 0 || site >= sites_) throw std::out_of_range("site index out of range");
  const std::uint32_t pair = (code_ >> (2 * site)) & 3u;
  if (mode_ == Statistics::ChargeOnly) return static_cast<int>(pair);
  return std::popcount(pair);
}

bool ElectronConfig::occupied(int site, Spin spin) const {
  if (mode_ != Statistics::Spinful) throw std::logic_error("spin occupation queried on a charge-only configuration");
  if (site < 0 || site >= sites_) throw std::out_of_range("site index out of range");
  return (code_ & mode_bit(site, spin)) != 0;
}

int ElectronConfig::total() const {
  int n = 0;
  for (int s = 0; s < sites_; ++s) n += charge(s);
  return n;
}

int ElectronConfig::doubly_occupied() const {
  int d = 0;
  for (int s = 0; s < sites_; ++s) d += charge(s) == 2 ? 1 : 0;
  return d;
}

std::vector<int> ElectronConfig::charges() const {
  std::vector<int> out(static_cast<std::size_t>(sites_));
  for (int s = 0; s < sites_; ++s) out[static_cast<std::size_t>(s)] = charge(s);
  return out;
}

std::optional<HopResult> hop_apply(const ElectronConfig& config, int from, int to, Spin spin) {
  const int sites = config.sites();
  if (from < 0 || from >= sites || to < 0 || to >= sites) throw std::out_of_range("hop site out of range");
  if (std::abs(from - to) != 1) {
    throw std::invalid_argument("hop between non-adjacent sites " + std::to_string(from) + " and " + std::to_string(to));
  }

  if (config.statistics() == Statistics::ChargeOnly) {
    const int n_from = config.charge(from);
    const int n_to = config.charge(to);
    if (n_from == 0 || n_to == kMaxSiteCharge) return std::nullopt;
    std::uint32_t code = config.code();
    code -= 1u << (2 * from);
    code += 1u << (2 * to);
    return HopResult{ElectronConfig(Statistics::ChargeOnly, sites, code),
                     std::sqrt(static_cast<double>(n_from * (n_to + 1)))};
  }

  const std::uint32_t src = mode_bit(from, spin);
  const std::uint32_t dst = mode_bit(to, spin);
  const std::uint32_t code = config.code();
  if ((code & src) == 0 || (code & dst) != 0) return std::nullopt;

  // Sign of c^dag_to c_from is (-1)^(occupied modes strictly between the two).
  const std::uint32_t lo = std::min(src, dst);
  const std::uint32_t hi = std::max(src, dst);
  const std::uint32_t between = (hi - 1) & ~((lo << 1) - 1);
  const int crossed = std::popcount(code & between);
  return HopResult{ElectronConfig(Statistics::Spinful, sites, (code & ~src) | dst), (crossed & 1) ? -1.0 : 1.0};
}

ElectronBasis::ElectronBasis(int sites, const Sector& sector) : sites_(sites), sector_(sector) {
  check_sites(sites);
  if (sector.mode == Statistics::Spinful) {
    if (sector.n_up < 0 || sector.n_down < 0 || sector.n_up > sites || sector.n_down > sites) {
      throw std::invalid_argument("spin sector (" + std::to_string(sector.n_up) + " up, " +
                                  std::to_string(sector.n_down) + " down) does not fit on " + std::to_string(sites) +
                                  " sites");
    }
    if (sector.charge != sector.n_up + sector.n_down) throw std::invalid_argument("spin sector charge is inconsistent");
  } else if (sector.charge < 0 || sector.charge > kMaxSiteCharge * sites) {
    throw std::invalid_argument("charge " + std::to_string(sector.charge) + " does not fit on " +
                                std::to_string(sites) + " sites");
  }

  const std::uint32_t n_codes = 1u << (2 * sites);
  lookup_.assign(n_codes, -1);
  // Ascending code order is the lexicographic order on the canonical encoding.
  for (std::uint32_t code = 0; code < n_codes; ++code) {
    bool ok = true;
    if (sector.mode == Statistics::Spinful) {
      int up = 0, down = 0;
      for (int s = 0; s < sites; ++s) {
        up += (code >> (2 * s)) & 1u;
        down += (code >> (2 * s + 1)) & 1u;
      }
      ok = up == sector.n_up && down == sector.n_down;
    } else {
      int total = 0;
      for (int s = 0; s < sites && ok; ++s) {
        const int c = static_cast<int>((code >> (2 * s)) & 3u);
        ok = c <= kMaxSiteCharge;
        total += c;
      }
      ok = ok && total == sector.charge;
    }
    if (!ok) continue;
    lookup_[code] = static_cast<std::int32_t>(configs_.size());
    configs_.emplace_back(sector.mode, sites, code);
  }
}

std::optional<std::size_t> ElectronBasis::find(const ElectronConfig& config) const {
  if (config.statistics() != sector_.mode || config.sites() != sites_) return std::nullopt;
  const std::int32_t i = lookup_[config.code()];
  if (i < 0) return std::nullopt;
  return static_cast<std::size_t>(i);
}

std::size_t ElectronBasis::index(const ElectronConfig& config) const {
  auto i = find(config);
  if (!i) throw std::out_of_range("configuration is not in this basis sector");
  return *i;
}

std::vector<std::size_t> ElectronBasis::indices_with_charges(std::span<const int> charges) const {
  std::vector<std::size_t> out;
  if (charges.size() != static_cast<std::size_t>(sites_)) return out;
  for (std::size_t i = 0; i < configs_.size(); ++i) {
    bool match = true;
    for (int s = 0; s < sites_ && match; ++s) match = configs_[i].charge(s) == charges[static_cast<std::size_t>(s)];
    if (match) out.push_back(i);
  }
  return out;
}

ElectronBasis enumerate_sector(int sites, const Sector& sector) { return ElectronBasis(sites, sector); }

PhononBasis::PhononBasis(int cutoff) : cutoff_(cutoff) {
  if (cutoff < 1) throw std::invalid_argument("phonon cutoff must be at least 1 (two basis states)");
}

HilbertSpace::HilbertSpace(Factors dims) : dims_(dims), size_(1) {
  for (std::size_t d : dims) {
    if (d == 0) throw std::invalid_argument("Hilbert space factor of dimension zero");
    if (size_ > std::numeric_limits<std::size_t>::max() / d) throw std::overflow_error("Hilbert space dimension overflows");
    size_ *= d;
  }
}

std::size_t HilbertSpace::index(const Factors& f) const {
  for (int k = 0; k < 4; ++k) {
    if (f[k] >= dims_[k]) {
      throw std::out_of_range("factor index " + std::to_string(f[k]) + " out of range for factor " + std::to_string(k) +
                              " of dimension " + std::to_string(dims_[k]));
    }
  }
  return ((f[0] * dims_[1] + f[1]) * dims_[2] + f[2]) * dims_[3] + f[3];
}

HilbertSpace::Factors HilbertSpace::factors(std::size_t global) const {
  if (global >= size_) throw std::out_of_range("global index out of range");
  Factors f{};
  for (int k = 3; k >= 0; --k) {
    f[k] = global % dims_[k];
    global /= dims_[k];
  }
  return f;
}

std::size_t composite_index(std::size_t ea, std::size_t eb, std::size_t pa, std::size_t pb, const HilbertSpace& space) {
  return space.index({ea, eb, pa, pb});
}

}  // namespace cntsim
