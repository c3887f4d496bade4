#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include <sstream>

#include "speclab/averaging.hpp"
#include "speclab/cli.hpp"
#include "speclab/dos.hpp"
#include "speclab/errors.hpp"
#include "speclab/instances.hpp"
#include "speclab/ssf.hpp"

namespace py = pybind11;
using namespace speclab;

namespace {

DosConfig dos_config(const BoxDomain& domain, double kappa, std::uint64_t seed, unsigned workers) {
  DosConfig c;
  c.domain = domain;
  c.site = SingleSite::characteristic(kappa, domain);
  c.master_seed = seed;
  c.workers = workers;
  c.validate();
  return c;
}

DisorderRealization realization(const BoxDomain& domain, std::uint64_t seed, std::uint64_t index) {
  return sample_disorder(UniformUnit{}, domain, seed, index);
}

}  // namespace

PYBIND11_MODULE(_speclab, m) {
  m.doc() = "Finite-volume random Schrodinger operators: spectral averaging, spectral shift, Wegner checks";

  auto config_error = py::register_exception<ConfigError>(m, "ConfigError", PyExc_ValueError);
  py::register_exception<PreconditionError>(m, "PreconditionError", PyExc_RuntimeError);
  py::register_exception<ConvergenceError>(m, "ConvergenceError", PyExc_RuntimeError);
  py::register_exception<InvariantViolation>(m, "InvariantViolation", PyExc_RuntimeError);
  (void)config_error;

  py::class_<BoxDomain>(m, "Domain")
      .def(py::init([](int d, int L, int mm, const std::string& bc) {
             BoxDomain b{d, L, mm, parse_boundary(bc)};
             b.validate();
             return b;
           }),
           py::arg("d"), py::arg("L"), py::arg("m"), py::arg("bc") = "dirichlet")
      .def_readonly("d", &BoxDomain::d)
      .def_readonly("L", &BoxDomain::L)
      .def_readonly("m", &BoxDomain::m)
      .def_property_readonly("bc", [](const BoxDomain& b) { return std::string(to_string(b.bc)); })
      .def_property_readonly("size", &BoxDomain::size)
      .def_property_readonly("volume", &BoxDomain::volume)
      .def_property_readonly("cell_volume", &BoxDomain::cell_volume)
      .def_property_readonly("cube_count", &BoxDomain::cube_count)
      .def("__repr__", [](const BoxDomain& b) {
        std::ostringstream os;
        os << "Domain(d=" << b.d << ", L=" << b.L << ", m=" << b.m << ", bc='" << to_string(b.bc) << "')";
        return os.str();
      });

  m.def(
      "disorder",
      [](const BoxDomain& domain, std::uint64_t seed, std::uint64_t index) {
        return realization(domain, seed, index).omegas;
      },
      "Coupling constants omega_k of one realization (uniform on [0, 1]).", py::arg("domain"),
      py::arg("master_seed"), py::arg("realization"));

  m.def(
      "hamiltonian",
      [](const BoxDomain& domain, double kappa, std::uint64_t seed, std::uint64_t index) {
        return build_hamiltonian(domain, SingleSite::characteristic(kappa, domain), realization(domain, seed, index))
            .dense();
      },
      "Dense H = -Laplacian + sum_k omega_k kappa chi_k.", py::arg("domain"), py::arg("kappa") = 1.0,
      py::arg("master_seed") = 0, py::arg("realization") = 0);

  m.def(
      "laplacian", [](const BoxDomain& domain) { return build_laplacian(domain).dense(); },
      "Dense nonnegative discrete Laplacian.", py::arg("domain"));

  py::class_<Family>(m, "Family")
      .def(py::init([](Eigen::MatrixXd base, Eigen::VectorXd coupling, double w) {
             return Family(std::move(base), std::move(coupling), w);
           }),
           py::arg("base"), py::arg("coupling"), py::arg("cell_volume") = 1.0)
      .def("at", &Family::at, py::arg("omega"))
      .def_property_readonly("base", &Family::base)
      .def_property_readonly("coupling", &Family::coupling)
      .def_property_readonly("coupling_norm", &Family::coupling_norm)
      .def_property_readonly("cell_volume", &Family::cell_volume)
      .def_property_readonly("size", &Family::size);

  m.def("random_family", &random_family, "Random symmetric H0 with a rank-r diagonal coupling in [0.2, 1].",
        py::arg("seed"), py::arg("index"), py::arg("n"), py::arg("rank"));
  m.def(
      "site_family",
      [](const BoxDomain& domain, double kappa, std::uint64_t seed, std::uint64_t index, std::size_t cube) {
        return site_family(domain, SingleSite::characteristic(kappa, domain), realization(domain, seed, index),
                           cube);
      },
      "H_omega with the coupling of one cube replaced by the variable omega.", py::arg("domain"),
      py::arg("kappa"), py::arg("master_seed"), py::arg("realization"), py::arg("cube"));

  m.def(
      "crossings",
      [](const Family& family, double energy) {
        std::vector<double> out;
        for (const auto& c : BirmanSchwinger(family).crossings(energy)) out.push_back(c.omega);
        return out;
      },
      "All couplings omega at which the energy is an eigenvalue of the family.", py::arg("family"),
      py::arg("energy"));

  m.def(
      "spectral_average",
      [](const Family& family, const Eigen::VectorXd& phi, double a, double b, double tau1, double tau2) {
        return spectral_average(family, phi, EnergyInterval(a, b), tau1, tau2);
      },
      "Integral over omega in [tau1, tau2] of <phi, P_omega(I) phi>.", py::arg("family"), py::arg("phi"),
      py::arg("a"), py::arg("b"), py::arg("tau1"), py::arg("tau2"));

  m.def(
      "spectral_average_full_line",
      [](const Family& family, const Eigen::VectorXd& phi, double a, double b) {
        const auto r = spectral_average_full_line(BirmanSchwinger(family), phi, EnergyInterval(a, b));
        return py::dict(py::arg("value") = r.value, py::arg("expected") = r.expected, py::arg("panels") = r.panels,
                        py::arg("shifted_nodes") = r.shifted_nodes);
      },
      py::arg("family"), py::arg("phi"), py::arg("a"), py::arg("b"));

  m.def("ssf_trace_difference", &ssf_trace_difference, "Tr P_{tau1}(E) - Tr P_{tau2}(E) from two spectra.",
        py::arg("ev_tau1"), py::arg("ev_tau2"), py::arg("energy"));

  m.def(
      "spectral_shift",
      [](const Family& family, double energy, double tau1, double tau2, std::vector<double> epsilons) {
        const CouplingWindow window(family, tau1, tau2);
        const auto r = epsilons.empty() ? evaluate_ssf(window, energy) : evaluate_ssf(window, energy, epsilons);
        return py::dict(py::arg("energy") = r.energy, py::arg("xi_trace") = r.xi_trace,
                        py::arg("xi_crossings") = r.xi_crossings, py::arg("limit") = r.bs_limit,
                        py::arg("bound_rhs") = r.bound_rhs, py::arg("unstable") = r.bs_unstable,
                        py::arg("routes_agree") = r.routes_agree(), py::arg("bound_holds") = r.bound_holds());
      },
      "Spectral shift between couplings tau1 and tau2 by three routes.", py::arg("family"), py::arg("energy"),
      py::arg("tau1"), py::arg("tau2"), py::arg("epsilons") = std::vector<double>{});

  m.def(
      "ldos_measure",
      [](const BoxDomain& domain, double a, double b, std::size_t n_samples, double kappa, std::uint64_t seed,
         unsigned workers) {
        const auto e = mc_ldos_measure(dos_config(domain, kappa, seed, workers), EnergyInterval(a, b), n_samples);
        return py::make_tuple(e.mean, e.stderr_);
      },
      "Monte Carlo E[Tr P(I)] / |Lambda| with its standard error.", py::arg("domain"), py::arg("a"), py::arg("b"),
      py::arg("n_samples"), py::arg("kappa") = 1.0, py::arg("master_seed") = 0, py::arg("workers") = 1);

  m.def(
      "ldos_function",
      [](const BoxDomain& domain, const std::vector<double>& energies, double epsilon, std::size_t n_samples,
         double kappa, std::uint64_t seed, unsigned workers) {
        const auto e = ldos_function(dos_config(domain, kappa, seed, workers), energies, epsilon, n_samples);
        return py::make_tuple(e.values, e.stderrs);
      },
      "Finite-difference local DOS n(E) on an energy grid, with standard errors.", py::arg("domain"),
      py::arg("energies"), py::arg("epsilon"), py::arg("n_samples"), py::arg("kappa") = 1.0,
      py::arg("master_seed") = 0, py::arg("workers") = 1);

  m.def(
      "constants_json",
      [](int d, double b, double energy, int n, double kappa, double rho_sup, int mm) {
        const LevelScale scale = mm > 0 ? LevelScale::discrete(mm) : LevelScale::continuum();
        return compute_constants(d, b, energy, n, kappa, rho_sup, scale).to_json().dump();
      },
      py::arg("d"), py::arg("b"), py::arg("energy") = 0.0, py::arg("n") = 0, py::arg("kappa") = 1.0,
      py::arg("rho_sup") = 1.0, py::arg("m") = 0);

  m.def(
      "run_json",
      [](const std::string& config_json, std::optional<unsigned> workers, bool verbose) {
        auto config = parse_config(nlohmann::json::parse(config_json));
        if (workers) config.workers = *workers;
        std::ostringstream log;
        RunOutcome outcome;
        {
          py::gil_scoped_release release;
          outcome = run_suite(config, log);
        }
        if (verbose) py::print(log.str(), py::arg("end") = "");
        return outcome.summary.dump();
      },
      py::arg("config_json"), py::arg("workers") = std::nullopt, py::arg("verbose") = false);
}
