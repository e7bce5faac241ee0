#include <sstream>

#include <pybind11/eigen.h>
#include <pybind11/numpy.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "cntsim/cli.hpp"
#include "cntsim/eigensolver.hpp"
#include "cntsim/lang_firsov.hpp"
#include "cntsim/observables.hpp"
#include "cntsim/point.hpp"
#include "cntsim/sweep.hpp"

namespace py = pybind11;
using namespace cntsim;

namespace {

py::object json_to_py(const nlohmann::ordered_json& j) {
  return py::module_::import("json").attr("loads")(j.dump());
}

ChargeVector to_charges(const std::vector<int>& v) {
  if (v.size() != kSitesPerTube) throw std::invalid_argument("a charge vector has four entries");
  return {v[0], v[1], v[2], v[3]};
}

py::list pairs_to_py(const std::vector<ChargePair>& pairs) {
  py::list out;
  for (const auto& [a, b] : pairs) out.append(py::make_tuple(charge_label(a), charge_label(b)));
  return out;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Two-tube electron-phonon exact diagonalization core";

  m.def("coupling_constant", &coupling_constant, py::arg("site"), py::arg("mode"), py::arg("g0"));

  m.def(
      "effective_attraction",
      [](double g0, double omega0, int modes) {
        const EffectiveAttraction ut = effective_attraction(g0, omega0, modes);
        Eigen::Matrix4d mat;
        for (int i = 0; i < 4; ++i)
          for (int j = 0; j < 4; ++j) mat(i, j) = ut(i, j);
        return py::make_tuple(mat, ut.tail_bound);
      },
      py::arg("g0"), py::arg("omega0"), py::arg("modes") = 1,
      "(4x4 attraction matrix, tail bound)");

  m.def(
      "atomic_energy",
      [](const std::vector<int>& a, const std::vector<int>& b, double lambda, double v_over_u, int modes,
         double omega0_over_u) {
        return atomic_energy(to_charges(a), to_charges(b),
                             ModelParams::from_ratios(lambda, 0.0, v_over_u, omega0_over_u), modes);
      },
      py::arg("charges_a"), py::arg("charges_b"), py::arg("lambda_"), py::arg("v_over_u") = 0.0,
      py::arg("modes") = 1, py::arg("omega0_over_u") = kDefaultOmega0OverU);

  m.def(
      "critical_lambdas",
      [](double v_over_u, int modes) {
        const CriticalCouplings c = critical_lambdas(v_over_u, modes);
        py::dict d;
        d["lambda_c1"] = c.mott_to_bell;
        d["lambda_c2"] = c.bell_to_paired;
        d["breakpoints"] = c.breakpoints;
        d["ground_pairs"] = pairs_to_py(c.ground_pairs);
        d["tail_bound"] = c.tail_bound;
        return d;
      },
      py::arg("v_over_u") = 0.0, py::arg("modes") = 1);

  m.def(
      "atomic_ground_manifold",
      [](double lambda, double v_over_u, int modes) {
        const AtomicManifold mf = atomic_ground_manifold(ModelParams::from_ratios(lambda, 0.0, v_over_u), modes);
        return py::make_tuple(mf.energy, pairs_to_py(mf.members));
      },
      py::arg("lambda_"), py::arg("v_over_u") = 0.0, py::arg("modes") = 1, "(energy in U, member pairs)");

  m.def(
      "phonon_number_estimate",
      [](const std::vector<int>& n, double g0, double omega0) { return phonon_number_estimate(to_charges(n), g0, omega0); },
      py::arg("charges"), py::arg("g0"), py::arg("omega0"));

  m.def(
      "hamiltonian",
      [](double lambda, double t_over_u, double v_over_u, int n_ph, int tubes, const std::string& mode,
         double omega0_over_u) {
        ModelParams p = ModelParams::from_ratios(lambda, t_over_u, v_over_u, omega0_over_u);
        p.statistics = parse_statistics(mode);
        const SparseOperator h = TubeModel(p, n_ph, tubes).assemble();
        py::array_t<std::int64_t> indptr(static_cast<py::ssize_t>(h.row_ptr().size()), h.row_ptr().data());
        py::array_t<std::int32_t> indices(static_cast<py::ssize_t>(h.cols().size()), h.cols().data());
        py::array_t<double> data(static_cast<py::ssize_t>(h.values().size()), h.values().data());
        return py::make_tuple(data, indices, indptr, h.dimension());
      },
      py::arg("lambda_"), py::arg("t_over_u"), py::arg("v_over_u") = 0.0, py::arg("n_ph") = 10, py::arg("tubes") = 1,
      py::arg("mode") = "charge", py::arg("omega0_over_u") = kDefaultOmega0OverU,
      "CSR arrays (data, indices, indptr, dimension) of the Hamiltonian in units of U");

  m.def(
      "solve_point",
      [](double lambda, double t_over_u, double v_over_u, int n_ph, const std::string& mode, bool shift,
         std::uint64_t seed, int tubes, double omega0_over_u) {
        PointSpec s;
        s.lambda = lambda;
        s.t_over_u = t_over_u;
        s.v_over_u = v_over_u;
        s.n_ph = n_ph;
        s.mode = parse_statistics(mode);
        s.shift = shift;
        s.seed = seed;
        s.tubes = tubes;
        s.omega0_over_u = omega0_over_u;
        PointResult r;
        {
          py::gil_scoped_release release;
          r = solve_point(s);
        }
        py::object record = json_to_py(to_json(r.record));
        py::array_t<double> psi(static_cast<py::ssize_t>(r.ground.vector.size()), r.ground.vector.data());
        return py::make_tuple(record, psi);
      },
      py::arg("lambda_"), py::arg("t_over_u") = 1e-3, py::arg("v_over_u") = 0.02, py::arg("n_ph") = 50,
      py::arg("mode") = "charge", py::arg("shift") = false, py::arg("seed") = 1, py::arg("tubes") = 2,
      py::arg("omega0_over_u") = kDefaultOmega0OverU, "(record dict, ground-state vector)");

  m.def(
      "reduced_density_matrix",
      [](py::array_t<double, py::array::c_style | py::array::forcecast> psi, std::array<std::size_t, 4> dims,
         std::array<bool, 4> keep) {
        const HilbertSpace space(dims);
        std::span<const double> v(psi.data(), static_cast<std::size_t>(psi.size()));
        return reduced_density_matrix(v, space, keep).matrix;
      },
      py::arg("psi"), py::arg("dims"), py::arg("keep"),
      "Partial trace over the factors (eA, eB, pA, pB) not kept");

  m.def("von_neumann_entropy", [](const Eigen::MatrixXd& rho) { return von_neumann_entropy(rho); }, py::arg("rho"));
  m.def("negativity", &negativity, py::arg("rho"), py::arg("dim_a"), py::arg("dim_b"));
  m.def("mutual_information", &mutual_information, py::arg("rho"), py::arg("dim_a"), py::arg("dim_b"));

  m.def(
      "classify_phase",
      [](double d, double c_bar, double fidelity) {
        ObservableRecord r;
        r.d_occ_a = r.d_occ_b = d;
        r.charge_corr_avg_a = r.charge_corr_avg_b = c_bar;
        r.bell_fidelity = fidelity;
        return to_string(classify_phase(r));
      },
      py::arg("double_occupancy"), py::arg("charge_corr"), py::arg("bell_fidelity"));

  m.def(
      "main",
      [](const std::vector<std::string>& args) {
        std::ostringstream out, err;
        int code;
        {
          py::gil_scoped_release release;
          code = dispatch(args, out, err);
        }
        return py::make_tuple(code, out.str(), err.str());
      },
      py::arg("args"), "Run the command line; returns (exit code, stdout text, stderr text)");
}
