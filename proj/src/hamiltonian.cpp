#include "cntsim/hamiltonian.hpp"

#include <algorithm>
#include <climits>
#include <cmath>
#include <numbers>
#include <ostream>
#include <stdexcept>
#include <string>
#include <utility>

namespace cntsim {

void ModelParams::validate() const {
  if (!(U > 0.0)) throw std::invalid_argument("U must be positive");
  if (!(omega0 > 0.0)) throw std::invalid_argument("omega0 must be positive");
  if (!(g0 >= 0.0)) throw std::invalid_argument("g0 must be non-negative");
  if (!(t >= 0.0)) throw std::invalid_argument("t must be non-negative");
  if (!(V >= 0.0)) throw std::invalid_argument("V must be non-negative");
  if (modes < 1) throw std::invalid_argument("mode count must be at least 1");
}

ModelParams ModelParams::from_ratios(double lambda, double t_over_u, double v_over_u, double omega0_over_u, double U) {
  if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be non-negative");
  ModelParams p;
  p.U = U;
  p.t = t_over_u * U;
  p.V = v_over_u * U;
  p.omega0 = omega0_over_u * U;
  p.g0 = std::sqrt(lambda * U * p.omega0);
  p.validate();
  return p;
}

double coupling_constant(int site, int mode, double g0) {
  if (site < 1 || site > kSitesPerTube) throw std::out_of_range("coupling site must be in 1..4");
  if (mode < 1) throw std::out_of_range("mode index must be >= 1");
  using std::numbers::pi;
  // sin(pi*mu/8) vanishes exactly for mu = 0 mod 8; avoid the rounding residue.
  if (mode % 8 == 0) return 0.0;
  const double mu = static_cast<double>(mode);
  return g0 * (8.0 / pi) * std::pow(mu, -1.5) * std::sin(pi * mu * (2.0 * site - 1.0) / 8.0) * std::sin(pi * mu / 8.0);
}

SparseOperator::SparseOperator(std::size_t dimension, std::vector<std::int64_t> row_ptr,
                               std::vector<std::int32_t> cols, std::vector<double> values)
    : dimension_(dimension), row_ptr_(std::move(row_ptr)), cols_(std::move(cols)), values_(std::move(values)) {
  if (row_ptr_.size() != dimension_ + 1 || cols_.size() != values_.size() ||
      static_cast<std::size_t>(row_ptr_.back()) != values_.size()) {
    throw std::invalid_argument("inconsistent compressed-row arrays");
  }
}

double SparseOperator::entry(std::size_t row, std::size_t col) const {
  if (row >= dimension_ || col >= dimension_) throw std::out_of_range("operator entry out of range");
  const auto first = cols_.begin() + row_ptr_[row];
  const auto last = cols_.begin() + row_ptr_[row + 1];
  const auto it = std::lower_bound(first, last, static_cast<std::int32_t>(col));
  if (it == last || *it != static_cast<std::int32_t>(col)) return 0.0;
  return values_[static_cast<std::size_t>(it - cols_.begin())];
}

double SparseOperator::asymmetry() const {
  double worst = 0.0;
  for (std::size_t r = 0; r < dimension_; ++r) {
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      const auto c = static_cast<std::size_t>(cols_[static_cast<std::size_t>(k)]);
      worst = std::max(worst, std::abs(values_[static_cast<std::size_t>(k)] - entry(c, r)));
    }
  }
  return worst;
}

void SparseOperator::apply(std::span<const double> x, std::span<double> y) const {
  if (x.size() != dimension_ || y.size() != dimension_) {
    throw std::invalid_argument("matvec length mismatch: operator dimension " + std::to_string(dimension_) +
                                ", input " + std::to_string(x.size()) + ", output " + std::to_string(y.size()));
  }
  const std::int64_t* rp = row_ptr_.data();
  const std::int32_t* ci = cols_.data();
  const double* va = values_.data();
#pragma omp parallel for schedule(static)
  for (std::ptrdiff_t r = 0; r < static_cast<std::ptrdiff_t>(dimension_); ++r) {
    double s = 0.0;
    for (std::int64_t k = rp[r]; k < rp[r + 1]; ++k) s += va[k] * x[static_cast<std::size_t>(ci[k])];
    y[static_cast<std::size_t>(r)] = s;
  }
}

Eigen::MatrixXd SparseOperator::to_dense() const {
  Eigen::MatrixXd m = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(dimension_), static_cast<Eigen::Index>(dimension_));
  for (std::size_t r = 0; r < dimension_; ++r) {
    for (auto k = row_ptr_[r]; k < row_ptr_[r + 1]; ++k) {
      m(static_cast<Eigen::Index>(r), cols_[static_cast<std::size_t>(k)]) = values_[static_cast<std::size_t>(k)];
    }
  }
  return m;
}

std::vector<double> matvec(const SparseOperator& h, std::span<const double> x) {
  std::vector<double> y(x.size());
  h.apply(x, y);
  return y;
}

void matvec(const SparseOperator& h, std::span<const double> x, std::span<double> y) { h.apply(x, y); }

namespace {

// Per-configuration quantities of one tube, precomputed once per build.
struct TubeTables {
  std::vector<int> doubles;
  std::vector<double> coupling;  // sum_i g_{i,1} n_i
  std::vector<std::array<int, kSitesPerTube>> charges;
  std::vector<std::vector<std::pair<std::int32_t, double>>> hops;  // (target, -t * amplitude)
};

TubeTables tabulate(const ModelParams& params, const ElectronBasis& basis) {
  if (basis.sites() != kSitesPerTube) throw std::invalid_argument("the tube Hamiltonian is defined for 4 dots");
  if (basis.statistics() != params.statistics) {
    throw std::invalid_argument("basis statistics (" + to_string(basis.statistics()) +
                                ") differ from the model flag (" + to_string(params.statistics) + ")");
  }
  std::array<double, kSitesPerTube> g{};
  for (int i = 0; i < kSitesPerTube; ++i) g[static_cast<std::size_t>(i)] = coupling_constant(i + 1, 1, params.g0);

  TubeTables tab;
  const std::size_t n = basis.size();
  tab.doubles.resize(n);
  tab.coupling.resize(n);
  tab.charges.resize(n);
  tab.hops.resize(n);
  const int spins = basis.statistics() == Statistics::Spinful ? 2 : 1;
  for (std::size_t k = 0; k < n; ++k) {
    const ElectronConfig& c = basis[k];
    tab.doubles[k] = c.doubly_occupied();
    double gsum = 0.0;
    for (int i = 0; i < kSitesPerTube; ++i) {
      tab.charges[k][static_cast<std::size_t>(i)] = c.charge(i);
      gsum += g[static_cast<std::size_t>(i)] * c.charge(i);
    }
    tab.coupling[k] = gsum;
    if (params.t == 0.0) continue;
    for (int bond = 0; bond + 1 < kSitesPerTube; ++bond) {
      for (int s = 0; s < spins; ++s) {
        for (auto [from, to] : {std::pair{bond, bond + 1}, std::pair{bond + 1, bond}}) {
          auto hop = hop_apply(c, from, to, static_cast<Spin>(s));
          if (!hop) continue;
          tab.hops[k].emplace_back(static_cast<std::int32_t>(basis.index(hop->config)), -params.t * hop->amplitude);
        }
      }
    }
  }
  return tab;
}

SparseOperator assemble(const ModelParams& params, const TubeTables& ta, const TubeTables* tb, std::size_t dim_pa,
                        std::size_t dim_pb, const BuildOptions& options) {
  params.validate();
  const std::size_t dim_ea = ta.doubles.size();
  const std::size_t dim_eb = tb ? tb->doubles.size() : 1;
  const HilbertSpace space({dim_ea, dim_eb, dim_pa, dim_pb});
  const std::size_t dim = space.size();
  if (dim > options.max_dimension || dim > static_cast<std::size_t>(INT32_MAX)) {
    throw std::length_error("Hilbert space dimension " + std::to_string(dim) + " exceeds the configured cap of " +
                            std::to_string(options.max_dimension) + "; lower the phonon cutoff or use the shift solver");
  }

  const double w = params.omega0;
  const double alpha_a = options.shift.a;
  const double alpha_b = tb ? options.shift.b : 0.0;

  std::vector<std::int64_t> row_ptr;
  std::vector<std::int32_t> cols;
  std::vector<double> vals;
  row_ptr.reserve(dim + 1);
  row_ptr.push_back(0);
  const std::size_t per_row = 5 + 2 * 12;
  cols.reserve(dim * per_row / 2);
  vals.reserve(dim * per_row / 2);

  std::vector<std::pair<std::int32_t, double>> row;
  auto at = [&](std::size_t ea, std::size_t eb, std::size_t pa, std::size_t pb) {
    return static_cast<std::int32_t>(((ea * dim_eb + eb) * dim_pa + pa) * dim_pb + pb);
  };

  for (std::size_t ea = 0; ea < dim_ea; ++ea) {
    for (std::size_t eb = 0; eb < dim_eb; ++eb) {
      double electronic = params.U * ta.doubles[ea];
      double inter = 0.0;
      if (tb) {
        electronic += params.U * tb->doubles[eb];
        for (int i = 0; i < kSitesPerTube; ++i) {
          inter += ta.charges[ea][static_cast<std::size_t>(i)] * tb->charges[eb][static_cast<std::size_t>(i)];
        }
        electronic += params.V * inter;
      }
      const double ga = ta.coupling[ea];
      const double gb = tb ? tb->coupling[eb] : 0.0;
      // omega0 (a^dag + alpha)(a + alpha) + G (a^dag + a + 2 alpha)
      const double shift_diag = w * alpha_a * alpha_a + 2.0 * alpha_a * ga + w * alpha_b * alpha_b + 2.0 * alpha_b * gb;
      const double ca = w * alpha_a + ga;
      const double cb = w * alpha_b + gb;

      for (std::size_t pa = 0; pa < dim_pa; ++pa) {
        for (std::size_t pb = 0; pb < dim_pb; ++pb) {
          row.clear();
          row.emplace_back(at(ea, eb, pa, pb), electronic + shift_diag + w * static_cast<double>(pa + pb));
          for (const auto& [target, amp] : ta.hops[ea]) row.emplace_back(at(target, eb, pa, pb), amp);
          if (tb) {
            for (const auto& [target, amp] : tb->hops[eb]) row.emplace_back(at(ea, target, pa, pb), amp);
          }
          if (pa > 0) row.emplace_back(at(ea, eb, pa - 1, pb), ca * std::sqrt(static_cast<double>(pa)));
          if (pa + 1 < dim_pa) row.emplace_back(at(ea, eb, pa + 1, pb), ca * std::sqrt(static_cast<double>(pa + 1)));
          if (tb) {
            if (pb > 0) row.emplace_back(at(ea, eb, pa, pb - 1), cb * std::sqrt(static_cast<double>(pb)));
            if (pb + 1 < dim_pb) row.emplace_back(at(ea, eb, pa, pb + 1), cb * std::sqrt(static_cast<double>(pb + 1)));
          }
          std::sort(row.begin(), row.end(), [](const auto& x, const auto& y) { return x.first < y.first; });
          std::size_t k = 0;
          while (k < row.size()) {
            const std::int32_t c = row[k].first;
            double v = 0.0;
            while (k < row.size() && row[k].first == c) v += row[k++].second;
            if (v != 0.0) {
              cols.push_back(c);
              vals.push_back(v);
            }
          }
          row_ptr.push_back(static_cast<std::int64_t>(vals.size()));
        }
      }
    }
  }
  return SparseOperator(dim, std::move(row_ptr), std::move(cols), std::move(vals));
}

}  // namespace

SparseOperator build_single_tube(const ModelParams& params, const ElectronBasis& electrons, const PhononBasis& phonons,
                                 const BuildOptions& options) {
  const TubeTables ta = tabulate(params, electrons);
  return assemble(params, ta, nullptr, phonons.size(), 1, options);
}

SparseOperator build_two_tube(const ModelParams& params, const ElectronBasis& electrons_a,
                              const ElectronBasis& electrons_b, const PhononBasis& phonons_a,
                              const PhononBasis& phonons_b, const BuildOptions& options) {
  const TubeTables ta = tabulate(params, electrons_a);
  const TubeTables tb = tabulate(params, electrons_b);
  return assemble(params, ta, &tb, phonons_a.size(), phonons_b.size(), options);
}

void write_coordinate(const SparseOperator& h, std::ostream& out) {
  const auto rp = h.row_ptr();
  const auto cols = h.cols();
  const auto vals = h.values();
  const auto old_precision = out.precision(17);
  for (std::size_t r = 0; r < h.dimension(); ++r) {
    for (auto k = rp[r]; k < rp[r + 1]; ++k) {
      out << r << ' ' << cols[static_cast<std::size_t>(k)] << ' ' << vals[static_cast<std::size_t>(k)] << '\n';
    }
  }
  out.precision(old_precision);
}

Sector half_filling_sector(Statistics mode) {
  return mode == Statistics::Spinful ? Sector::spinful(2, 2) : Sector::charge_only(kSitesPerTube);
}

TubeModel::TubeModel(const ModelParams& p, int phonon_states, int tube_count)
    : params(p),
      electrons(enumerate_sector(kSitesPerTube, half_filling_sector(p.statistics))),
      phonons(PhononBasis::with_states(phonon_states)),
      tubes(tube_count) {
  params.validate();
  if (tubes != 1 && tubes != 2) throw std::invalid_argument("tube count must be 1 or 2");
}

HilbertSpace TubeModel::space() const {
  return tubes == 2 ? HilbertSpace::two_tube(electrons.size(), phonons.size())
                    : HilbertSpace::single_tube(electrons.size(), phonons.size());
}

SparseOperator TubeModel::assemble(const PhononShift& shift, std::size_t max_dimension) const {
  BuildOptions opts;
  opts.max_dimension = max_dimension;
  opts.shift = shift;
  if (tubes == 1) return build_single_tube(params, electrons, phonons, opts);
  return build_two_tube(params, electrons, electrons, phonons, phonons, opts);
}

}  // namespace cntsim
