#pragma once

#include <cstddef>
#include <cstdint>
#include <iosfwd>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "cntsim/fock_basis.hpp"

namespace cntsim {

/// Phonon frequency in units of U used for the rescaled working regime. At
/// lambda = 0.5 it puts the paired-phase phonon number near 10.
inline constexpr double kDefaultOmega0OverU = 0.65;

/// Hamiltonian couplings. Energies are in units of U unless stated.
struct ModelParams {
  double t = 0.0;       // hopping
  double U = 1.0;       // on-site repulsion per doubly occupied dot
  double V = 0.0;       // inter-tube repulsion between opposing dots
  double g0 = 0.0;      // electron-phonon coupling scale
  double omega0 = 1.0;  // fundamental flexural frequency
  int modes = 1;        // mode count for the analytic engine; numerics use mode 1 only
  Statistics statistics = Statistics::ChargeOnly;

  double lambda() const { return g0 * g0 / (U * omega0); }
  void validate() const;

  /// U = `U`, omega0 = omega0_over_u * U, g0 = sqrt(lambda * U * omega0).
  static ModelParams from_ratios(double lambda, double t_over_u, double v_over_u,
                                 double omega0_over_u = kDefaultOmega0OverU, double U = 1.0);
};

/// g_{i,mu} = g0 (8/pi) mu^{-3/2} sin[pi mu (2i-1)/8] sin[pi mu/8], site i in 1..4.
double coupling_constant(int site, int mode, double g0);

/// Real symmetric matrix in compressed-row form; columns sorted, no stored zeros.
class SparseOperator {
 public:
  SparseOperator() = default;
  SparseOperator(std::size_t dimension, std::vector<std::int64_t> row_ptr, std::vector<std::int32_t> cols,
                 std::vector<double> values);

  std::size_t dimension() const { return dimension_; }
  std::size_t nnz() const { return values_.size(); }
  std::span<const std::int64_t> row_ptr() const { return row_ptr_; }
  std::span<const std::int32_t> cols() const { return cols_; }
  std::span<const double> values() const { return values_; }

  double entry(std::size_t row, std::size_t col) const;
  double diagonal(std::size_t row) const { return entry(row, row); }
  /// Largest |A(r,c) - A(c,r)| over stored entries.
  double asymmetry() const;

  void apply(std::span<const double> x, std::span<double> y) const;
  Eigen::MatrixXd to_dense() const;

 private:
  std::size_t dimension_ = 0;
  std::vector<std::int64_t> row_ptr_{0};
  std::vector<std::int32_t> cols_;
  std::vector<double> values_;
};

/// y = H x. Rows are independent, so the result is identical for any thread count.
std::vector<double> matvec(const SparseOperator& h, std::span<const double> x);
void matvec(const SparseOperator& h, std::span<const double> x, std::span<double> y);

/// Frame displacement a -> a + alpha for each tube's phonon mode.
struct PhononShift {
  double a = 0.0;
  double b = 0.0;
  bool operator==(const PhononShift&) const = default;
};

struct BuildOptions {
  std::size_t max_dimension = 40'000'000;
  PhononShift shift{};
};

SparseOperator build_single_tube(const ModelParams& params, const ElectronBasis& electrons, const PhononBasis& phonons,
                                 const BuildOptions& options = {});

SparseOperator build_two_tube(const ModelParams& params, const ElectronBasis& electrons_a,
                              const ElectronBasis& electrons_b, const PhononBasis& phonons_a,
                              const PhononBasis& phonons_b, const BuildOptions& options = {});

/// Coordinate dump, one `row col value` line per stored entry, row-major order.
void write_coordinate(const SparseOperator& h, std::ostream& out);

/// One or two identical tubes with their bases; the unit every solver works on.
struct TubeModel {
  ModelParams params;
  ElectronBasis electrons;
  PhononBasis phonons;
  int tubes = 2;

  TubeModel(const ModelParams& p, int phonon_states, int tube_count = 2);

  HilbertSpace space() const;
  SparseOperator assemble(const PhononShift& shift = {}, std::size_t max_dimension = 40'000'000) const;
};

/// Sector used for each tube: 2 up + 2 down (spinful) or total charge 4.
Sector half_filling_sector(Statistics mode);

}  // namespace cntsim
