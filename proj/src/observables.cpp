#include "cntsim/observables.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include <unsupported/Eigen/MatrixFunctions>

#include "cntsim/lang_firsov.hpp"

namespace cntsim {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

double entropy_from_spectrum(const Eigen::VectorXd& p) {
  double s = 0.0;
  for (Eigen::Index i = 0; i < p.size(); ++i) {
    if (p(i) > 1e-300) s -= p(i) * std::log(p(i));
  }
  return std::max(0.0, s);
}

double tube_coupling(const ChargeVector& n, double g0) {
  double s = 0.0;
  for (int i = 0; i < kSitesPerTube; ++i) s += n[static_cast<std::size_t>(i)] * coupling_constant(i + 1, 1, g0);
  return s;
}

}  // namespace

Eigen::VectorXd DensityMatrix::eigenvalues() const {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(matrix, Eigen::EigenvaluesOnly);
  return es.eigenvalues();
}

DensityMatrix reduced_density_matrix(std::span<const double> psi, const HilbertSpace& space, const FactorMask& keep,
                                     std::size_t max_dimension) {
  if (psi.size() != space.size()) throw std::invalid_argument("state length does not match the Hilbert space");
  const auto& d = space.dims();
  std::size_t dim_keep = 1, dim_trace = 1;
  DensityMatrix out;
  out.kept = keep;
  for (int q = 0; q < 4; ++q) {
    if (keep[q]) {
      dim_keep *= d[q];
      out.dims.push_back(d[q]);
    } else {
      dim_trace *= d[q];
    }
  }
  if (dim_keep > max_dimension) {
    throw std::length_error("reduced density matrix of dimension " + std::to_string(dim_keep) +
                            " exceeds the cap of " + std::to_string(max_dimension));
  }

  Eigen::MatrixXd amp(static_cast<Eigen::Index>(dim_keep), static_cast<Eigen::Index>(dim_trace));
  std::size_t g = 0;
  for (std::size_t f0 = 0; f0 < d[0]; ++f0) {
    for (std::size_t f1 = 0; f1 < d[1]; ++f1) {
      for (std::size_t f2 = 0; f2 < d[2]; ++f2) {
        for (std::size_t f3 = 0; f3 < d[3]; ++f3, ++g) {
          const std::array<std::size_t, 4> f{f0, f1, f2, f3};
          std::size_t k = 0, t = 0;
          for (int q = 0; q < 4; ++q) {
            if (keep[q]) k = k * d[q] + f[q];
            else t = t * d[q] + f[q];
          }
          amp(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(t)) = psi[g];
        }
      }
    }
  }
  out.matrix = Eigen::MatrixXd::Zero(amp.rows(), amp.rows());
  out.matrix.selfadjointView<Eigen::Lower>().rankUpdate(amp);
  out.matrix.triangularView<Eigen::StrictlyUpper>() = out.matrix.transpose();
  return out;
}

double von_neumann_entropy(const Eigen::MatrixXd& rho) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(rho, Eigen::EigenvaluesOnly);
  return entropy_from_spectrum(es.eigenvalues());
}

double von_neumann_entropy(const DensityMatrix& rho) { return von_neumann_entropy(rho.matrix); }

double mutual_information(const Eigen::MatrixXd& rho_ab, std::size_t dim_a, std::size_t dim_b) {
  if (static_cast<std::size_t>(rho_ab.rows()) != dim_a * dim_b) throw std::invalid_argument("dimension mismatch");
  const auto na = static_cast<Eigen::Index>(dim_a);
  const auto nb = static_cast<Eigen::Index>(dim_b);
  Eigen::MatrixXd ra = Eigen::MatrixXd::Zero(na, na);
  Eigen::MatrixXd rb = Eigen::MatrixXd::Zero(nb, nb);
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) {
      for (Eigen::Index k = 0; k < nb; ++k) ra(i, j) += rho_ab(i * nb + k, j * nb + k);
    }
  }
  for (Eigen::Index k = 0; k < nb; ++k) {
    for (Eigen::Index l = 0; l < nb; ++l) {
      for (Eigen::Index i = 0; i < na; ++i) rb(k, l) += rho_ab(i * nb + k, i * nb + l);
    }
  }
  return von_neumann_entropy(ra) + von_neumann_entropy(rb) - von_neumann_entropy(rho_ab);
}

double mutual_information_phonons(std::span<const double> psi, const HilbertSpace& space) {
  const double sa = von_neumann_entropy(reduced_density_matrix(psi, space, kKeepPhononsA));
  const double sb = von_neumann_entropy(reduced_density_matrix(psi, space, kKeepPhononsB));
  const double sab = von_neumann_entropy(reduced_density_matrix(psi, space, kKeepElectrons));
  return sa + sb - sab;
}

Eigen::MatrixXd partial_transpose(const Eigen::MatrixXd& rho, std::size_t dim_a, std::size_t dim_b) {
  if (static_cast<std::size_t>(rho.rows()) != dim_a * dim_b || rho.rows() != rho.cols()) {
    throw std::invalid_argument("partial transpose: dimensions do not multiply to the matrix size");
  }
  const auto na = static_cast<Eigen::Index>(dim_a);
  const auto nb = static_cast<Eigen::Index>(dim_b);
  Eigen::MatrixXd out(rho.rows(), rho.cols());
  for (Eigen::Index i = 0; i < na; ++i) {
    for (Eigen::Index j = 0; j < na; ++j) {
      out.block(i * nb, j * nb, nb, nb) = rho.block(i * nb, j * nb, nb, nb).transpose();
    }
  }
  return out;
}

double negativity(const Eigen::MatrixXd& rho, std::size_t dim_a, std::size_t dim_b) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(partial_transpose(rho, dim_a, dim_b), Eigen::EigenvaluesOnly);
  const double trace_norm = es.eigenvalues().cwiseAbs().sum();
  return std::max(0.0, 0.5 * (trace_norm - rho.trace()));
}

Eigen::MatrixXd displacement_matrix(double beta, std::size_t states) {
  // Exponentiate in a padded space so the kept block is free of edge effects.
  const auto pad = static_cast<std::size_t>(40.0 + beta * beta + 8.0 * std::abs(beta));
  const auto n = static_cast<Eigen::Index>(states + pad);
  Eigen::MatrixXd gen = Eigen::MatrixXd::Zero(n, n);
  for (Eigen::Index k = 1; k < n; ++k) {
    const double s = std::sqrt(static_cast<double>(k));
    gen(k, k - 1) = beta * s;   // a^dag
    gen(k - 1, k) = -beta * s;  // -a
  }
  const Eigen::MatrixXd full = gen.exp();
  return full.topLeftCorner(static_cast<Eigen::Index>(states), static_cast<Eigen::Index>(states));
}

double bell_fidelity(std::span<const double> psi, const TubeModel& model, const PhononShift& shift, Frame frame) {
  if (model.tubes != 2) return kNaN;
  const HilbertSpace space = model.space();
  if (psi.size() != space.size()) throw std::invalid_argument("state length does not match the Hilbert space");
  const std::size_t ne = model.electrons.size();
  const std::size_t np = model.phonons.size();
  const auto nps = static_cast<Eigen::Index>(np);
  const auto mott = model.electrons.indices_with_charges(std::span<const int>(kMottCharges.data(), kSitesPerTube));
  const auto paired = model.electrons.indices_with_charges(std::span<const int>(kPairedCharges.data(), kSitesPerTube));

  const ModelParams& p = model.params;
  const bool polaron = frame == Frame::Polaron;
  const double gm = tube_coupling(kMottCharges, p.g0) / p.omega0;
  const double gp = tube_coupling(kPairedCharges, p.g0) / p.omega0;
  Eigen::MatrixXd dam, dap, dbm, dbp;
  if (polaron) {
    dam = displacement_matrix(gm + shift.a, np);
    dap = displacement_matrix(gp + shift.a, np);
    dbm = displacement_matrix(gm + shift.b, np);
    dbp = displacement_matrix(gp + shift.b, np);
  }

  auto block = [&](std::size_t ea, std::size_t eb) {
    return Eigen::Map<const RowMajorMatrix>(psi.data() + (ea * ne + eb) * np * np, nps, nps);
  };

  double f = 0.0;
  for (std::size_t s : mott) {
    for (std::size_t q : paired) {
      Eigen::MatrixXd x = block(s, q);
      Eigen::MatrixXd y = block(q, s);
      if (polaron) {
        x = dam * x * dbp.transpose();
        y = dap * y * dbm.transpose();
      }
      f += 0.5 * (x + y).squaredNorm();
    }
  }
  return std::clamp(f, 0.0, 1.0);
}

std::string to_string(Phase phase) {
  switch (phase) {
    case Phase::Mott: return "Mott";
    case Phase::Bell: return "Bell";
    case Phase::Paired: return "Paired";
    case Phase::Delocalized: return "Delocalized";
  }
  return "Delocalized";
}

Phase parse_phase(std::string_view text) {
  if (text == "Mott") return Phase::Mott;
  if (text == "Bell") return Phase::Bell;
  if (text == "Paired") return Phase::Paired;
  if (text == "Delocalized") return Phase::Delocalized;
  throw std::invalid_argument("unknown phase label '" + std::string(text) + "'");
}

double ObservableRecord::mean_double_occupancy() const {
  return std::isnan(d_occ_b) ? d_occ_a : 0.5 * (d_occ_a + d_occ_b);
}

double ObservableRecord::mean_charge_corr() const {
  return std::isnan(charge_corr_avg_b) ? charge_corr_avg_a : 0.5 * (charge_corr_avg_a + charge_corr_avg_b);
}

Phase classify_phase(const ObservableRecord& r, const PhaseThresholds& th) {
  const double d = r.mean_double_occupancy();
  const bool uncorrelated = std::abs(r.mean_charge_corr()) < th.charge_corr_eps;
  if (d < th.mott_max_double && uncorrelated) return Phase::Mott;
  if (d > th.paired_min_double && uncorrelated) return Phase::Paired;
  if (std::abs(d - 1.0) < th.bell_double_window && r.bell_fidelity > th.bell_min_fidelity) return Phase::Bell;
  return Phase::Delocalized;
}

namespace {

struct TubeStats {
  double doubles = 0.0;
  double phonons = 0.0;
  double var_a = 0.0;
  SiteMatrix corr{};
  double corr_avg = 0.0;
};

TubeStats tube_stats(std::span<const double> psi, const TubeModel& model, const FactorMask& electrons,
                     const FactorMask& phonons, double alpha) {
  const HilbertSpace space = model.space();
  TubeStats out;

  const DensityMatrix rho_e = reduced_density_matrix(psi, space, electrons);
  std::array<double, kSitesPerTube> n{};
  SiteMatrix nn{};
  for (std::size_t c = 0; c < model.electrons.size(); ++c) {
    const double prob = rho_e.matrix(static_cast<Eigen::Index>(c), static_cast<Eigen::Index>(c));
    const ElectronConfig& cfg = model.electrons[c];
    out.doubles += prob * cfg.doubly_occupied();
    for (int i = 0; i < kSitesPerTube; ++i) {
      n[static_cast<std::size_t>(i)] += prob * cfg.charge(i);
      for (int j = 0; j < kSitesPerTube; ++j) {
        nn[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)] += prob * cfg.charge(i) * cfg.charge(j);
      }
    }
  }
  double pair_sum = 0.0;
  for (std::size_t i = 0; i < kSitesPerTube; ++i) {
    for (std::size_t j = 0; j < kSitesPerTube; ++j) {
      out.corr[i][j] = nn[i][j] - n[i] * n[j];
      if (i < j) pair_sum += out.corr[i][j];
    }
  }
  out.corr_avg = pair_sum / 6.0;

  const DensityMatrix rho_p = reduced_density_matrix(psi, space, phonons);
  double number = 0.0, mean_a = 0.0;
  for (Eigen::Index k = 0; k < rho_p.matrix.rows(); ++k) {
    number += static_cast<double>(k) * rho_p.matrix(k, k);
    if (k > 0) mean_a += std::sqrt(static_cast<double>(k)) * rho_p.matrix(k, k - 1);
  }
  out.var_a = std::max(0.0, number - mean_a * mean_a);
  // Lab frame: a_lab = a + alpha.
  out.phonons = number + 2.0 * alpha * mean_a + alpha * alpha;
  return out;
}

}  // namespace

ObservableRecord measure_point(std::span<const double> psi, const TubeModel& model, const PhononShift& shift,
                               const PhaseThresholds& thresholds) {
  const HilbertSpace space = model.space();
  if (psi.size() != space.size()) throw std::invalid_argument("state length does not match the Hilbert space");
  const ModelParams& p = model.params;

  ObservableRecord r;
  r.lambda = p.lambda();
  r.t_over_u = p.t / p.U;
  r.v_over_u = p.V / p.U;
  r.n_ph = static_cast<int>(model.phonons.size());
  r.mode = p.statistics;

  const TubeStats a = tube_stats(psi, model, kKeepElectronsA, kKeepPhononsA, shift.a);
  r.d_occ_a = a.doubles;
  r.phonon_n_a = a.phonons;
  r.var_a_a = a.var_a;
  r.charge_corr_matrix_a = a.corr;
  r.charge_corr_avg_a = a.corr_avg;

  if (model.tubes == 2) {
    const TubeStats b = tube_stats(psi, model, kKeepElectronsB, kKeepPhononsB, shift.b);
    r.d_occ_b = b.doubles;
    r.phonon_n_b = b.phonons;
    r.var_a_b = b.var_a;
    r.charge_corr_matrix_b = b.corr;
    r.charge_corr_avg_b = b.corr_avg;

    r.ent_entropy_ab = von_neumann_entropy(reduced_density_matrix(psi, space, kKeepTubeA));
    r.mutual_info_phonon = std::max(0.0, mutual_information_phonons(psi, space));
    const std::size_t np = model.phonons.size();
    r.negativity_phonon = negativity(reduced_density_matrix(psi, space, kKeepPhonons).matrix, np, np);
    r.bell_fidelity = bell_fidelity(psi, model, shift, Frame::Polaron);
  } else {
    r.d_occ_b = r.phonon_n_b = r.var_a_b = r.charge_corr_avg_b = kNaN;
    for (auto& row : r.charge_corr_matrix_b) row.fill(kNaN);
    r.ent_entropy_ab = r.mutual_info_phonon = r.negativity_phonon = r.bell_fidelity = kNaN;
  }
  r.phase = classify_phase(r, thresholds);
  return r;
}

namespace {

nlohmann::ordered_json number(double x) {
  if (std::isfinite(x)) return x;
  return nullptr;
}

nlohmann::ordered_json matrix_json(const SiteMatrix& m) {
  nlohmann::ordered_json out = nlohmann::ordered_json::array();
  for (const auto& row : m) {
    nlohmann::ordered_json r = nlohmann::ordered_json::array();
    for (double x : row) r.push_back(number(x));
    out.push_back(r);
  }
  return out;
}

double read_number(const nlohmann::json& j, const char* key) {
  const auto& v = j.at(key);
  return v.is_null() ? kNaN : v.get<double>();
}

SiteMatrix read_matrix(const nlohmann::json& j, const char* key) {
  SiteMatrix m{};
  const auto& rows = j.at(key);
  for (std::size_t i = 0; i < kSitesPerTube; ++i) {
    for (std::size_t k = 0; k < kSitesPerTube; ++k) {
      const auto& v = rows.at(i).at(k);
      m[i][k] = v.is_null() ? kNaN : v.get<double>();
    }
  }
  return m;
}

}  // namespace

nlohmann::ordered_json to_json(const ObservableRecord& r) {
  nlohmann::ordered_json j;
  j["lambda"] = r.lambda;
  j["t_over_u"] = r.t_over_u;
  j["v_over_u"] = r.v_over_u;
  j["n_ph"] = r.n_ph;
  j["mode"] = to_string(r.mode);
  j["energy"] = number(r.energy);
  j["residual"] = number(r.residual);
  j["iterations"] = r.iterations;
  j["near_degenerate"] = r.near_degenerate;
  j["d_occ_a"] = number(r.d_occ_a);
  j["d_occ_b"] = number(r.d_occ_b);
  j["phonon_n_a"] = number(r.phonon_n_a);
  j["phonon_n_b"] = number(r.phonon_n_b);
  j["charge_corr_avg_a"] = number(r.charge_corr_avg_a);
  j["charge_corr_avg_b"] = number(r.charge_corr_avg_b);
  j["charge_corr_matrix_a"] = matrix_json(r.charge_corr_matrix_a);
  j["charge_corr_matrix_b"] = matrix_json(r.charge_corr_matrix_b);
  j["var_a_a"] = number(r.var_a_a);
  j["var_a_b"] = number(r.var_a_b);
  j["mutual_info_phonon"] = number(r.mutual_info_phonon);
  j["ent_entropy_ab"] = number(r.ent_entropy_ab);
  j["negativity_phonon"] = number(r.negativity_phonon);
  j["bell_fidelity"] = number(r.bell_fidelity);
  j["phase"] = r.phase ? nlohmann::ordered_json(to_string(*r.phase)) : nlohmann::ordered_json(nullptr);
  j["wall_ms"] = r.wall_ms ? nlohmann::ordered_json(*r.wall_ms) : nlohmann::ordered_json(nullptr);
  j["status"] = r.status;
  return j;
}

ObservableRecord record_from_json(const nlohmann::json& j) {
  ObservableRecord r;
  r.lambda = j.at("lambda").get<double>();
  r.t_over_u = j.at("t_over_u").get<double>();
  r.v_over_u = j.at("v_over_u").get<double>();
  r.n_ph = j.at("n_ph").get<int>();
  r.mode = parse_statistics(j.at("mode").get<std::string>());
  r.energy = read_number(j, "energy");
  r.residual = read_number(j, "residual");
  r.iterations = j.at("iterations").get<int>();
  r.near_degenerate = j.at("near_degenerate").get<bool>();
  r.d_occ_a = read_number(j, "d_occ_a");
  r.d_occ_b = read_number(j, "d_occ_b");
  r.phonon_n_a = read_number(j, "phonon_n_a");
  r.phonon_n_b = read_number(j, "phonon_n_b");
  r.charge_corr_avg_a = read_number(j, "charge_corr_avg_a");
  r.charge_corr_avg_b = read_number(j, "charge_corr_avg_b");
  r.charge_corr_matrix_a = read_matrix(j, "charge_corr_matrix_a");
  r.charge_corr_matrix_b = read_matrix(j, "charge_corr_matrix_b");
  r.var_a_a = read_number(j, "var_a_a");
  r.var_a_b = read_number(j, "var_a_b");
  r.mutual_info_phonon = read_number(j, "mutual_info_phonon");
  r.ent_entropy_ab = read_number(j, "ent_entropy_ab");
  r.negativity_phonon = read_number(j, "negativity_phonon");
  r.bell_fidelity = read_number(j, "bell_fidelity");
  if (!j.at("phase").is_null()) r.phase = parse_phase(j.at("phase").get<std::string>());
  if (!j.at("wall_ms").is_null()) r.wall_ms = j.at("wall_ms").get<double>();
  r.status = j.at("status").get<std::string>();
  return r;
}

}  // namespace cntsim
