#include "cntsim/eigensolver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "cntsim/lang_firsov.hpp"
#include "cntsim/linalg.hpp"

namespace cntsim {

namespace {

using Eigen::Index;
using Vec = Eigen::VectorXd;
using Map = Eigen::Map<Vec>;
using ConstMap = Eigen::Map<const Vec>;

std::span<double> as_span(Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }
std::span<const double> as_span(const Vec& v) { return {v.data(), static_cast<std::size_t>(v.size())}; }

Vec start_vector(std::size_t n, const LanczosSettings& settings, const LanczosStart& start) {
  auto finish = [&](Vec v) -> Vec {
    if (start.projector) start.projector(as_span(v));
    return v;
  };
  if (!start.initial.empty()) {
    if (start.initial.size() != n) throw std::invalid_argument("warm-start vector has the wrong length");
    Vec v = finish(ConstMap(start.initial.data(), static_cast<Index>(n)));
    const double nv = v.norm();
    if (nv > 1e-6) return v / nv;
  }
  Vec v = ConstMap(linalg::random_vector(n, settings.seed).data(), static_cast<Index>(n));
  v /= v.norm();
  if (!start.guide.empty() && settings.guide_weight > 0.0) {
    if (start.guide.size() != n) throw std::invalid_argument("guide vector has the wrong length");
    ConstMap g(start.guide.data(), static_cast<Index>(n));
    const double ng = g.norm();
    if (ng > 0.0) v = (1.0 - settings.guide_weight) * v + (settings.guide_weight / ng) * g;
  }
  v = finish(std::move(v));
  const double nv = v.norm();
  if (!(nv > 1e-12)) throw std::invalid_argument("start vector has no component in the requested sector");
  return v / nv;
}

}  // namespace

double residual_norm(const SparseOperator& h, std::span<const double> psi, double energy) {
  std::vector<double> r = matvec(h, psi);
  linalg::axpy(-energy, psi, r);
  return linalg::norm(r);
}

GroundStateResult ground_state_lanczos(const SparseOperator& h, const LanczosSettings& settings,
                                       const LanczosStart& start) {
  if (!(settings.tol > 0.0)) throw std::invalid_argument("Lanczos tolerance must be positive");
  const std::size_t n = h.dimension();
  if (n == 0) throw std::invalid_argument("empty operator");

  const Index m = static_cast<Index>(std::min<std::size_t>(std::max(settings.basis_size, 3), n));
  const Index keep = std::clamp<Index>(settings.keep, 1, std::max<Index>(1, m - 2));

  Eigen::MatrixXd basis(static_cast<Index>(n), m);
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(m, m);
  basis.col(0) = start_vector(n, settings, start);

  Vec w(static_cast<Index>(n));
  GroundStateResult best;
  best.residual = std::numeric_limits<double>::infinity();
  int matvecs = 0;
  Index filled = 0;  // columns 0..filled-1 are expanded

  auto finalize = [&](Vec psi) {
    if (start.projector) start.projector(as_span(psi));
    psi /= psi.norm();
    Vec hpsi(static_cast<Index>(n));
    h.apply(as_span(psi), as_span(hpsi));
    ++matvecs;
    const double e = linalg::dot(as_span(psi), as_span(hpsi));
    linalg::axpy(-e, as_span(psi), as_span(hpsi));
    GroundStateResult r;
    r.energy = e;
    r.residual = linalg::norm(as_span(hpsi));
    r.vector.assign(psi.data(), psi.data() + psi.size());
    r.iterations = matvecs;
    return r;
  };

  for (;;) {
    double beta = 0.0;
    Index size = m;
    for (Index j = filled; j < m; ++j) {
      h.apply(as_span(basis.col(j).eval()), as_span(w));
      ++matvecs;
      if (start.projector) start.projector(as_span(w));
      auto vj = basis.leftCols(j + 1);
      Vec coef = vj.transpose() * w;
      w.noalias() -= vj * coef;
      Vec again = vj.transpose() * w;
      w.noalias() -= vj * again;
      coef += again;
      t.col(j).head(j + 1) = coef;
      t.row(j).head(j + 1) = coef.transpose();
      beta = w.norm();
      const double scale = std::max(1.0, t.topLeftCorner(j + 1, j + 1).cwiseAbs().maxCoeff());
      if (beta <= 1e-14 * scale) {
        // Invariant subspace: the Ritz pairs of the current basis are exact.
        size = j + 1;
        beta = 0.0;
        break;
      }
      if (j + 1 < m) {
        basis.col(j + 1) = w / beta;
        t(j + 1, j) = beta;
        t(j, j + 1) = beta;
      }
    }

    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ritz(t.topLeftCorner(size, size));
    const Vec& theta = ritz.eigenvalues();
    const Eigen::MatrixXd& s = ritz.eigenvectors();
    const double estimate = beta * std::abs(s(size - 1, 0));

    if (estimate <= settings.tol || beta == 0.0 || matvecs >= settings.max_iter) {
      GroundStateResult r = finalize(basis.leftCols(size) * s.col(0));
      if (size > 1) r.gap = theta(1) - theta(0);
      if (r.residual < best.residual) best = r;
      if (r.residual <= settings.tol) {
        r.converged = true;
        return r;
      }
      if (beta == 0.0 || matvecs >= settings.max_iter) {
        throw ConvergenceError("Lanczos did not reach residual " + std::to_string(settings.tol) + " within " +
                                   std::to_string(matvecs) + " matrix-vector products (best " +
                                   std::to_string(best.residual) + ")",
                               best);
      }
      // Estimated and true residual disagree (lost orthogonality); restart anyway.
    }

    // Thick restart: keep the lowest Ritz vectors plus the residual direction.
    const Index k = std::min(keep, size - 1);
    Eigen::MatrixXd kept = basis.leftCols(size) * s.leftCols(k);
    basis.leftCols(k) = kept;
    basis.col(k) = w / beta;
    t.setZero();
    for (Index i = 0; i < k; ++i) {
      t(i, i) = theta(i);
      t(i, k) = t(k, i) = beta * s(size - 1, i);
    }
    filled = k;
  }
}

DenseSpectrum ground_state_dense(const SparseOperator& h, std::size_t max_dimension) {
  if (h.dimension() > max_dimension) {
    throw std::length_error("dense diagonalisation limited to dimension " + std::to_string(max_dimension) + ", got " +
                            std::to_string(h.dimension()));
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(h.to_dense());
  if (solver.info() != Eigen::Success) throw std::runtime_error("dense eigensolver failed");
  return {solver.eigenvalues(), solver.eigenvectors()};
}

std::string to_string(ExchangeMode mode) {
  switch (mode) {
    case ExchangeMode::Both: return "both";
    case ExchangeMode::Symmetric: return "symmetric";
    case ExchangeMode::Off: return "off";
  }
  return "both";
}

ExchangeMode parse_exchange_mode(std::string_view text) {
  if (text == "both") return ExchangeMode::Both;
  if (text == "symmetric") return ExchangeMode::Symmetric;
  if (text == "off") return ExchangeMode::Off;
  throw std::invalid_argument("unknown exchange mode '" + std::string(text) + "' (expected both|symmetric|off)");
}

std::vector<double> coherent_amplitudes(double beta, std::size_t states) {
  std::vector<double> c(states);
  if (states == 0) return c;
  c[0] = std::exp(-0.5 * beta * beta);
  for (std::size_t k = 1; k < states; ++k) c[k] = c[k - 1] * beta / std::sqrt(static_cast<double>(k));
  return c;
}

namespace {

double tube_coupling(const ChargeVector& n, double g0) {
  double s = 0.0;
  for (int i = 0; i < kSitesPerTube; ++i) s += n[static_cast<std::size_t>(i)] * coupling_constant(i + 1, 1, g0);
  return s;
}

std::vector<std::size_t> electron_indices(const ElectronBasis& basis, const ChargeVector& n) {
  return basis.indices_with_charges(std::span<const int>(n.data(), n.size()));
}

}  // namespace

std::vector<double> atomic_guide(const TubeModel& model, const PhononShift& shift, int parity) {
  const HilbertSpace space = model.space();
  const std::size_t np = model.phonons.size();
  const ModelParams& p = model.params;
  std::vector<double> guide(space.size(), 0.0);

  if (model.tubes == 1) {
    for (const auto& n : tube_ground_manifold(p, 1)) {
      const auto amp = coherent_amplitudes(-tube_coupling(n, p.g0) / p.omega0 - shift.a, np);
      for (std::size_t e : electron_indices(model.electrons, n)) {
        for (std::size_t q = 0; q < np; ++q) guide[space.index({e, 0, q, 0})] += amp[q];
      }
    }
    return guide;
  }

  for (const auto& [a, b] : atomic_ground_manifold(p, 1).members) {
    const double sign = a > b ? static_cast<double>(parity) : 1.0;
    const auto amp_a = coherent_amplitudes(-tube_coupling(a, p.g0) / p.omega0 - shift.a, np);
    const auto amp_b = coherent_amplitudes(-tube_coupling(b, p.g0) / p.omega0 - shift.b, np);
    for (std::size_t ea : electron_indices(model.electrons, a)) {
      for (std::size_t eb : electron_indices(model.electrons, b)) {
        for (std::size_t qa = 0; qa < np; ++qa) {
          const std::size_t base = space.index({ea, eb, qa, 0});
          for (std::size_t qb = 0; qb < np; ++qb) guide[base + qb] += sign * amp_a[qa] * amp_b[qb];
        }
      }
    }
  }
  return guide;
}

void project_exchange(std::span<double> psi, const HilbertSpace& space, int parity) {
  const auto& d = space.dims();
  if (d[0] != d[1] || d[2] != d[3]) throw std::invalid_argument("tube exchange needs identical tube factors");
  if (psi.size() != space.size()) throw std::invalid_argument("state length does not match the space");
  const double sgn = parity >= 0 ? 1.0 : -1.0;
  const std::size_t ne = d[0], np = d[2];
  for (std::size_t ea = 0; ea < ne; ++ea) {
    for (std::size_t eb = ea; eb < ne; ++eb) {
      for (std::size_t pa = 0; pa < np; ++pa) {
        for (std::size_t pb = (ea == eb ? pa : 0); pb < np; ++pb) {
          const std::size_t i = ((ea * ne + eb) * np + pa) * np + pb;
          const std::size_t j = ((eb * ne + ea) * np + pb) * np + pa;
          if (i == j) {
            if (sgn < 0) psi[i] = 0.0;
            continue;
          }
          const double s = 0.5 * (psi[i] + sgn * psi[j]);
          psi[i] = s;
          psi[j] = sgn * s;
        }
      }
    }
  }
}

std::pair<double, double> mean_annihilation(std::span<const double> psi, const HilbertSpace& space) {
  const auto& d = space.dims();
  if (psi.size() != space.size()) throw std::invalid_argument("state length does not match the space");
  double ma = 0.0, mb = 0.0;
  const std::size_t ne = d[0] * d[1];
  const std::size_t npa = d[2], npb = d[3];
  for (std::size_t e = 0; e < ne; ++e) {
    const double* block = psi.data() + e * npa * npb;
    for (std::size_t pa = 0; pa < npa; ++pa) {
      for (std::size_t pb = 0; pb < npb; ++pb) {
        const double x = block[pa * npb + pb];
        // <a> = sum_n sqrt(n) psi(n-1) psi(n)
        if (pa > 0) ma += std::sqrt(static_cast<double>(pa)) * block[(pa - 1) * npb + pb] * x;
        if (pb > 0) mb += std::sqrt(static_cast<double>(pb)) * block[pa * npb + pb - 1] * x;
      }
    }
  }
  return {ma, mb};
}

namespace {

GroundStateResult solve_sector(const TubeModel& model, const SparseOperator& h, const SolverSettings& settings,
                               const PhononShift& shift, std::span<const double> warm, int parity) {
  const HilbertSpace space = model.space();
  const std::vector<double> guide = atomic_guide(model, shift, parity == 0 ? 1 : parity);
  LanczosStart start;
  start.initial = warm;
  start.guide = guide;
  if (parity != 0) start.projector = [space, parity](std::span<double> v) { project_exchange(v, space, parity); };
  GroundStateResult r = ground_state_lanczos(h, settings.lanczos, start);
  r.exchange_parity = parity;
  return r;
}

void flag_degeneracy(GroundStateResult& r, const SolverSettings& settings, double u) {
  r.near_degenerate = r.gap.has_value() && *r.gap < settings.degeneracy_threshold * u;
}

}  // namespace

GroundStateResult solve_ground_state(const TubeModel& model, const SolverSettings& settings, const PhononShift& shift,
                                     std::span<const double> warm) {
  const SparseOperator h = model.assemble(shift, settings.max_dimension);
  const double u = model.params.U;
  if (model.tubes == 1 || settings.exchange == ExchangeMode::Off) {
    GroundStateResult r = solve_sector(model, h, settings, shift, warm, 0);
    flag_degeneracy(r, settings, u);
    return r;
  }
  GroundStateResult sym = solve_sector(model, h, settings, shift, warm, +1);
  if (settings.exchange == ExchangeMode::Symmetric) {
    flag_degeneracy(sym, settings, u);
    return sym;
  }
  GroundStateResult anti = solve_sector(model, h, settings, shift, {}, -1);
  const double tie = 10.0 * settings.lanczos.tol;
  GroundStateResult& low = anti.energy < sym.energy - tie ? anti : sym;
  const GroundStateResult& high = &low == &sym ? anti : sym;
  const double cross = std::abs(high.energy - low.energy);
  low.gap = low.gap ? std::min(*low.gap, cross) : cross;
  low.iterations += high.iterations;
  flag_degeneracy(low, settings, u);
  return std::move(low);
}

GroundStateResult iterative_shift_solve(const TubeModel& model, const ShiftSettings& shift_settings,
                                        const SolverSettings& settings, const PhononShift& initial,
                                        std::span<const double> warm_start) {
  if (!(shift_settings.tol > 0.0)) throw std::invalid_argument("shift tolerance must be positive");
  const HilbertSpace space = model.space();
  const bool paired_tubes = model.tubes == 2 && settings.exchange != ExchangeMode::Off;

  SolverSettings inner = settings;
  if (paired_tubes && settings.exchange == ExchangeMode::Both) inner.exchange = ExchangeMode::Symmetric;
  int parity = paired_tubes ? 1 : 0;
  bool sector_checked = !(paired_tubes && settings.exchange == ExchangeMode::Both);

  PhononShift alpha = initial;
  if (model.tubes != 2) alpha.b = 0.0;
  std::vector<ShiftStep> history;
  std::vector<double> warm(warm_start.begin(), warm_start.end());
  GroundStateResult last;
  int total_matvecs = 0;

  auto solve_at = [&](const PhononShift& a, std::span<const double> w, int par) {
    const SparseOperator h = model.assemble(a, settings.max_dimension);
    GroundStateResult r = solve_sector(model, h, inner, a, w, model.tubes == 2 ? par : 0);
    total_matvecs += r.iterations;
    return r;
  };

  for (int outer = 0; outer < shift_settings.max_outer; ++outer) {
    last = solve_at(alpha, warm, parity);
    auto [ma, mb] = mean_annihilation(last.vector, space);
    if (paired_tubes) ma = mb = 0.5 * (ma + mb);
    history.push_back({alpha, ma, mb, last.energy});

    if (std::max(std::abs(ma), std::abs(mb)) < shift_settings.tol) {
      if (!sector_checked) {
        sector_checked = true;
        GroundStateResult other = solve_at(alpha, {}, -parity);
        const double cross = std::abs(other.energy - last.energy);
        if (other.energy < last.energy - 10.0 * settings.lanczos.tol) {
          parity = -parity;
          warm = other.vector;
          continue;
        }
        last.gap = last.gap ? std::min(*last.gap, cross) : cross;
      }
      last.shift = alpha;
      last.shift_history = std::move(history);
      last.iterations = total_matvecs;
      flag_degeneracy(last, settings, model.params.U);
      return last;
    }
    alpha.a += ma;
    alpha.b = model.tubes == 2 ? alpha.b + mb : 0.0;
    warm = last.vector;
  }
  last.shift = alpha;
  last.shift_history = std::move(history);
  last.iterations = total_matvecs;
  throw ConvergenceError("shift iteration did not converge within " + std::to_string(shift_settings.max_outer) +
                             " outer iterations",
                         last);
}

}  // namespace cntsim
