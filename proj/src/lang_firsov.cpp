#include "cntsim/lang_firsov.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>

namespace cntsim {

std::string charge_label(const ChargeVector& n) {
  if (n == kMottCharges) return "M";
  if (n == kPairedCharges) return "P";
  if (n == kLeftIntermediateCharges) return "Il";
  if (n == kRightIntermediateCharges) return "Ir";
  std::string s;
  for (int c : n) s += static_cast<char>('0' + c);
  return s;
}

const std::vector<ChargeVector>& charge_configurations() {
  static const std::vector<ChargeVector> configs = [] {
    std::vector<ChargeVector> out;
    const ElectronBasis basis(kSitesPerTube, Sector::charge_only(kSitesPerTube));
    for (const auto& c : basis) {
      ChargeVector n{};
      for (int i = 0; i < kSitesPerTube; ++i) n[static_cast<std::size_t>(i)] = c.charge(i);
      out.push_back(n);
    }
    return out;
  }();
  return configs;
}

double EffectiveAttraction::pair_energy(const ChargeVector& n) const {
  double e = 0.0;
  for (int i = 0; i < kSitesPerTube; ++i) {
    for (int j = 0; j < kSitesPerTube; ++j) e += (*this)(i, j) * n[static_cast<std::size_t>(i)] * n[static_cast<std::size_t>(j)];
  }
  return e;
}

double mode_tail_bound(double g0, double omega0, int modes) {
  using std::numbers::pi;
  // zeta(4) minus the partial sum, accumulated from the small end for accuracy.
  double partial = 0.0;
  for (int mu = modes; mu >= 1; --mu) partial += std::pow(static_cast<double>(mu), -4.0);
  const double tail = std::max(0.0, std::pow(pi, 4) / 90.0 - partial);
  return (8.0 / pi) * (8.0 / pi) * g0 * g0 / omega0 * tail;
}

EffectiveAttraction effective_attraction(double g0, double omega0, int modes) {
  if (modes < 1) throw std::invalid_argument("mode cutoff must be at least 1");
  if (!(omega0 > 0.0)) throw std::invalid_argument("omega0 must be positive");
  EffectiveAttraction ut;
  ut.modes = modes;
  // Sum the smallest terms first.
  for (int mu = modes; mu >= 1; --mu) {
    std::array<double, kSitesPerTube> g{};
    for (int i = 0; i < kSitesPerTube; ++i) g[static_cast<std::size_t>(i)] = coupling_constant(i + 1, mu, g0);
    const double w = mu * omega0;
    for (std::size_t i = 0; i < kSitesPerTube; ++i) {
      for (std::size_t j = 0; j < kSitesPerTube; ++j) ut.matrix[i][j] += g[i] * g[j] / w;
    }
  }
  ut.tail_bound = mode_tail_bound(g0, omega0, modes);
  return ut;
}

void validate_charges(const ChargeVector& n) {
  int total = 0;
  for (int c : n) {
    if (c < 0 || c > kMaxSiteCharge) throw std::invalid_argument("site charge must be 0, 1 or 2");
    total += c;
  }
  if (total != kSitesPerTube) throw std::invalid_argument("tube charge must be 4 (half filling), got " + std::to_string(total));
}

namespace {

int doubles(const ChargeVector& n) {
  return static_cast<int>(std::count(n.begin(), n.end(), 2));
}

int overlap(const ChargeVector& a, const ChargeVector& b) {
  int s = 0;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s;
}

}  // namespace

double tube_atomic_energy(const ChargeVector& n, const ModelParams& params, int modes) {
  validate_charges(n);
  const EffectiveAttraction ut = effective_attraction(params.g0, params.omega0, modes);
  return params.U * doubles(n) - ut.pair_energy(n);
}

double atomic_energy(const ChargeVector& a, const ChargeVector& b, const ModelParams& params, int modes) {
  validate_charges(a);
  validate_charges(b);
  const EffectiveAttraction ut = effective_attraction(params.g0, params.omega0, modes);
  return params.U * (doubles(a) + doubles(b)) - ut.pair_energy(a) - ut.pair_energy(b) + params.V * overlap(a, b);
}

bool AtomicManifold::contains(const ChargeVector& a, const ChargeVector& b) const {
  return std::find(members.begin(), members.end(), ChargePair{a, b}) != members.end();
}

AtomicManifold atomic_ground_manifold(const ModelParams& params, int modes, double rel_tol) {
  params.validate();
  const EffectiveAttraction ut = effective_attraction(params.g0, params.omega0, modes);
  const auto& configs = charge_configurations();
  std::vector<double> tube(configs.size());
  for (std::size_t k = 0; k < configs.size(); ++k) tube[k] = params.U * doubles(configs[k]) - ut.pair_energy(configs[k]);

  std::vector<std::pair<double, ChargePair>> all;
  all.reserve(configs.size() * configs.size());
  double emin = std::numeric_limits<double>::infinity();
  double scale = 0.0;
  for (std::size_t i = 0; i < configs.size(); ++i) {
    for (std::size_t j = 0; j < configs.size(); ++j) {
      const double e = tube[i] + tube[j] + params.V * overlap(configs[i], configs[j]);
      all.emplace_back(e, ChargePair{configs[i], configs[j]});
      emin = std::min(emin, e);
      scale = std::max(scale, std::abs(e));
    }
  }
  AtomicManifold m;
  m.energy = emin;
  const double tol = rel_tol * std::max({scale, std::abs(params.U), 1e-300});
  for (const auto& [e, pair] : all) {
    if (e - emin <= tol) m.members.push_back(pair);
  }
  return m;
}

std::vector<ChargeVector> tube_ground_manifold(const ModelParams& params, int modes, double rel_tol) {
  params.validate();
  const EffectiveAttraction ut = effective_attraction(params.g0, params.omega0, modes);
  const auto& configs = charge_configurations();
  std::vector<double> e(configs.size());
  double scale = 0.0;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    e[k] = params.U * doubles(configs[k]) - ut.pair_energy(configs[k]);
    scale = std::max(scale, std::abs(e[k]));
  }
  const double emin = *std::min_element(e.begin(), e.end());
  const double tol = rel_tol * std::max({scale, std::abs(params.U), 1e-300});
  std::vector<ChargeVector> out;
  for (std::size_t k = 0; k < configs.size(); ++k) {
    if (e[k] - emin <= tol) out.push_back(configs[k]);
  }
  return out;
}

CriticalCouplings critical_lambdas(double v_over_u, int modes) {
  if (!(v_over_u >= 0.0)) throw std::invalid_argument("V/U must be non-negative");
  // Units U = 1 and g0^2/omega0 = 1, so the polaron term carries lambda directly.
  const EffectiveAttraction ut = effective_attraction(1.0, 1.0, modes);
  const auto& configs = charge_configurations();

  struct Line {
    double offset;
    double slope;
    ChargePair pair;
  };
  std::vector<Line> lines;
  for (const auto& a : configs) {
    for (const auto& b : configs) {
      lines.push_back({static_cast<double>(doubles(a) + doubles(b)) + v_over_u * overlap(a, b),
                       -(ut.pair_energy(a) + ut.pair_energy(b)), ChargePair{a, b}});
    }
  }

  auto same = [](double x, double y) { return std::abs(x - y) <= 1e-12 * std::max({1.0, std::abs(x), std::abs(y)}); };

  // Lower envelope walk from lambda = 0.
  std::size_t cur = 0;
  for (std::size_t k = 1; k < lines.size(); ++k) {
    const auto& c = lines[cur];
    const auto& l = lines[k];
    if (l.offset < c.offset && !same(l.offset, c.offset)) cur = k;
    else if (same(l.offset, c.offset) && l.slope < c.slope && !same(l.slope, c.slope)) cur = k;
  }

  CriticalCouplings out;
  out.tail_bound = mode_tail_bound(1.0, 1.0, modes);
  out.ground_pairs.push_back(lines[cur].pair);
  double at = 0.0;
  for (;;) {
    std::size_t next = lines.size();
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < lines.size(); ++k) {
      const auto& l = lines[k];
      const auto& c = lines[cur];
      if (!(l.slope < c.slope) || same(l.slope, c.slope)) continue;
      const double x = std::max(at, (l.offset - c.offset) / (c.slope - l.slope));
      if (next == lines.size() || (x < best && !same(x, best)) || (same(x, best) && l.slope < lines[next].slope)) {
        best = x;
        next = k;
      }
    }
    if (next == lines.size()) break;
    out.breakpoints.push_back(best);
    out.ground_pairs.push_back(lines[next].pair);
    cur = next;
    at = best;
  }

  const ChargePair mm{kMottCharges, kMottCharges};
  const ChargePair pp{kPairedCharges, kPairedCharges};
  // P,P has the steepest line, so it always ends the envelope.
  if (out.ground_pairs.back() != pp || out.breakpoints.empty()) {
    throw std::logic_error("atomic envelope does not end in the paired state");
  }
  // From V >= U a staggered pair ties M,M at lambda = 0 and M,M is never the
  // unique ground state; the Mott region then has zero width.
  out.mott_to_bell = out.ground_pairs.front() == mm ? out.breakpoints.front() : 0.0;
  out.bell_to_paired = out.breakpoints.back();
  return out;
}

double phonon_number_estimate(const ChargeVector& n, double g0, double omega0) {
  validate_charges(n);
  if (!(omega0 > 0.0)) throw std::invalid_argument("omega0 must be positive");
  double s = 0.0;
  for (int i = 0; i < kSitesPerTube; ++i) s += n[static_cast<std::size_t>(i)] * coupling_constant(i + 1, 1, g0);
  const double alpha = s / omega0;
  return alpha * alpha;
}

ModelParams rescale(const ModelParams& params, double k) {
  if (!(k > 0.0)) throw std::invalid_argument("rescaling factor must be positive");
  ModelParams out = params;
  out.omega0 = params.omega0 * k;
  out.U = params.U / k;
  return out;
}

}  // namespace cntsim
