#include <pybind11/pybind11.h>
#include <pybind11/stl.h>
#include <pybind11/stl/filesystem.h>

#include "dlcz/commands.hpp"
#include "dlcz/fitting.hpp"
#include "dlcz/model.hpp"
#include "dlcz/montecarlo.hpp"
#include "dlcz/physics.hpp"

namespace py = pybind11;
using namespace dlcz;

namespace {

py::object json_to_py(const io::json& j) { return py::module_::import("json").attr("loads")(j.dump()); }

void register_model(py::module_& m) {
  py::enum_<fock::DetectorKind>(m, "DetectorKind")
      .value("linearized", fock::DetectorKind::linearized)
      .value("threshold", fock::DetectorKind::threshold);

  py::class_<model::ModelParams>(m, "ModelParams")
      .def(py::init<>())
      .def_readwrite("p", &model::ModelParams::p)
      .def_readwrite("kappa1", &model::ModelParams::kappa1)
      .def_readwrite("kappa2", &model::ModelParams::kappa2)
      .def_readwrite("alpha1", &model::ModelParams::alpha1)
      .def_readwrite("alpha2", &model::ModelParams::alpha2)
      .def_readwrite("eta2", &model::ModelParams::eta2)
      .def_readwrite("b1", &model::ModelParams::b1)
      .def_readwrite("b2", &model::ModelParams::b2)
      .def("validate", &model::ModelParams::validate)
      .def("with_p", &model::ModelParams::with_p)
      .def("__repr__", [](const model::ModelParams& p) {
        return "ModelParams(p=" + io::format_double(p.p) + ", kappa1=" + io::format_double(p.kappa1) +
               ", kappa2=" + io::format_double(p.kappa2) + ", alpha1=" + io::format_double(p.alpha1) +
               ", alpha2=" + io::format_double(p.alpha2) + ", eta2=" + io::format_double(p.eta2) +
               ", b1=" + io::format_double(p.b1) + ", b2=" + io::format_double(p.b2) + ")";
      });

  py::class_<model::FigureOfMeritPoint>(m, "FigureOfMeritPoint")
      .def_readonly("p", &model::FigureOfMeritPoint::p)
      .def_readonly("p1", &model::FigureOfMeritPoint::p1)
      .def_readonly("p2", &model::FigureOfMeritPoint::p2)
      .def_readonly("p12", &model::FigureOfMeritPoint::p12)
      .def_readonly("g12", &model::FigureOfMeritPoint::g12)
      .def_readonly("qc", &model::FigureOfMeritPoint::qc)
      .def_readonly("pc", &model::FigureOfMeritPoint::pc);

  m.def("paper_params", &model::paper_params, py::arg("p") = 0.03);
  m.def("ideal_params", &model::ideal_params, py::arg("p"), py::arg("alpha1") = 1.0, py::arg("alpha2") = 1.0,
        py::arg("eta2") = 1.0);
  m.def("singles", [](const model::ModelParams& p) {
    const auto s = model::singles(p);
    return py::make_tuple(s.p1, s.p2);
  });
  m.def("joint", &model::joint);
  m.def("cross_correlation", &model::cross_correlation);
  m.def("retrieval", [](const model::ModelParams& p) {
    const auto r = model::retrieval(p);
    return py::make_tuple(r.pc, r.qc);
  });
  m.def("figures_of_merit", &model::figures_of_merit);
  m.def("qc_plateau", &model::qc_plateau);
  m.def("antibunching_ideal", &model::antibunching_ideal);
  m.def(
      "antibunching_model",
      [](const model::ModelParams& p, fock::DetectorKind kind) { return model::antibunching_model(p, kind); },
      py::arg("params"), py::arg("detector") = fock::DetectorKind::linearized);
  m.def("classify", [](double g12) { return std::string(model::to_string(model::classify(g12))); });
  m.def("sweep", [](const model::ModelParams& p, const std::vector<double>& grid) { return model::sweep(p, grid); });
  m.def("log_grid", &model::log_grid);
}

void register_montecarlo(py::module_& m) {
  py::enum_<mc::DetectorMode>(m, "DetectorMode")
      .value("threshold", mc::DetectorMode::threshold)
      .value("linearized_rejection", mc::DetectorMode::linearized_rejection);

  py::class_<mc::TrialBatchConfig>(m, "TrialBatchConfig")
      .def(py::init<>())
      .def_readwrite("n_trials", &mc::TrialBatchConfig::n_trials)
      .def_readwrite("seed", &mc::TrialBatchConfig::seed)
      .def_readwrite("detector", &mc::TrialBatchConfig::detector)
      .def_readwrite("batch_size", &mc::TrialBatchConfig::batch_size)
      .def_readwrite("threads", &mc::TrialBatchConfig::threads)
      .def_readwrite("dark1", &mc::TrialBatchConfig::dark1)
      .def_readwrite("dark2", &mc::TrialBatchConfig::dark2);

  py::class_<mc::ClickCounts>(m, "ClickCounts")
      .def_readonly("n_trials", &mc::ClickCounts::n_trials)
      .def_readonly("k1", &mc::ClickCounts::k1)
      .def_readonly("k2a", &mc::ClickCounts::k2a)
      .def_readonly("k2b", &mc::ClickCounts::k2b)
      .def_readonly("k2", &mc::ClickCounts::k2)
      .def_readonly("k12", &mc::ClickCounts::k12)
      .def_readonly("k1_2a", &mc::ClickCounts::k1_2a)
      .def_readonly("k1_2b", &mc::ClickCounts::k1_2b)
      .def_readonly("k2a_2b", &mc::ClickCounts::k2a_2b)
      .def_readonly("k_triple", &mc::ClickCounts::k_triple);

  py::class_<mc::EstimateWithError>(m, "EstimateWithError")
      .def_readonly("value", &mc::EstimateWithError::value)
      .def_readonly("sigma", &mc::EstimateWithError::sigma);

  py::class_<mc::Estimates>(m, "Estimates")
      .def_readonly("p1", &mc::Estimates::p1)
      .def_readonly("p2", &mc::Estimates::p2)
      .def_readonly("p12", &mc::Estimates::p12)
      .def_readonly("g12", &mc::Estimates::g12)
      .def_readonly("pc", &mc::Estimates::pc)
      .def_readonly("qc", &mc::Estimates::qc)
      .def_readonly("w", &mc::Estimates::w);

  m.def(
      "sample_trials",
      [](const model::ModelParams& p, const mc::TrialBatchConfig& c) { return mc::sample_trials(p, c); },
      py::arg("params"), py::arg("config"), py::call_guard<py::gil_scoped_release>());
  m.def("estimate", &mc::estimate, py::arg("counts"), py::arg("eta2"));
}

void register_fitting(py::module_& m) {
  py::class_<fit::Observation>(m, "Observation")
      .def(py::init<double, double>(), py::arg("value"), py::arg("sigma"))
      .def_readwrite("value", &fit::Observation::value)
      .def_readwrite("sigma", &fit::Observation::sigma);

  py::class_<fit::MeasuredPoint>(m, "MeasuredPoint")
      .def(py::init<double, std::optional<fit::Observation>, std::optional<fit::Observation>>(), py::arg("p1"),
           py::arg("g12") = py::none(), py::arg("qc") = py::none())
      .def_readwrite("p1", &fit::MeasuredPoint::p1)
      .def_readwrite("g12", &fit::MeasuredPoint::g12)
      .def_readwrite("qc", &fit::MeasuredPoint::qc);

  py::class_<fit::FixedParams>(m, "FixedParams")
      .def(py::init<double, double, double, double>(), py::arg("alpha1"), py::arg("b1"), py::arg("b2"),
           py::arg("eta2"))
      .def_static("paper", &fit::FixedParams::paper)
      .def_readwrite("alpha1", &fit::FixedParams::alpha1)
      .def_readwrite("b1", &fit::FixedParams::b1)
      .def_readwrite("b2", &fit::FixedParams::b2)
      .def_readwrite("eta2", &fit::FixedParams::eta2);

  py::class_<fit::FreeParams>(m, "FreeParams")
      .def(py::init<double, double, double>(), py::arg("kappa1"), py::arg("kappa2"), py::arg("alpha2"))
      .def_readwrite("kappa1", &fit::FreeParams::kappa1)
      .def_readwrite("kappa2", &fit::FreeParams::kappa2)
      .def_readwrite("alpha2", &fit::FreeParams::alpha2);

  py::class_<fit::FitOptions>(m, "FitOptions")
      .def(py::init<>())
      .def_readwrite("use_g12", &fit::FitOptions::use_g12)
      .def_readwrite("use_qc", &fit::FitOptions::use_qc)
      .def_readwrite("weighted", &fit::FitOptions::weighted)
      .def_readwrite("starts", &fit::FitOptions::starts)
      .def_readwrite("start_span_decades", &fit::FitOptions::start_span_decades)
      .def_readwrite("max_iterations", &fit::FitOptions::max_iterations)
      .def_readwrite("parallel", &fit::FitOptions::parallel);

  py::class_<fit::FitResult>(m, "FitResult")
      .def_readonly("params", &fit::FitResult::params)
      .def_readonly("covariance", &fit::FitResult::covariance)
      .def_readonly("residual_norm", &fit::FitResult::residual_norm)
      .def_readonly("dof", &fit::FitResult::dof)
      .def_readonly("chi2_per_dof", &fit::FitResult::chi2_per_dof)
      .def_readonly("used_g12", &fit::FitResult::used_g12)
      .def_readonly("used_qc", &fit::FitResult::used_qc)
      .def_readonly("converged", &fit::FitResult::converged)
      .def_readonly("iterations", &fit::FitResult::iterations)
      .def_readonly("warnings", &fit::FitResult::warnings)
      .def("sigma", &fit::FitResult::sigma);

  m.def(
      "fit",
      [](const std::vector<fit::MeasuredPoint>& data, const fit::FixedParams& fixed, const fit::FreeParams& initial,
         const fit::FitOptions& options) { return fit::fit(data, fixed, initial, options); },
      py::arg("data"), py::arg("fixed"), py::arg("initial"), py::arg("options") = fit::FitOptions{},
      py::call_guard<py::gil_scoped_release>());
  m.def("invert_p1", &fit::invert_p1, py::arg("template"), py::arg("p1"));
}

void register_physics(py::module_& m) {
  m.def("retrieval_vs_time", [](double q0, double tau, double t) { return physics::retrieval_vs_time({q0, tau}, t); },
        py::arg("q0"), py::arg("tau"), py::arg("t"));
  m.def("tau_from_broadening", &physics::tau_from_broadening, py::arg("fwhm_hz"));
  m.def(
      "transmission_profile",
      [](double od, double gamma_hz, double delta_hz) { return physics::transmission_profile({od, gamma_hz}, delta_hz); },
      py::arg("od"), py::arg("gamma_hz"), py::arg("delta_hz"));
  m.def("trap_population", &physics::trap_population, py::arg("t"), py::arg("lifetime"));
  m.def(
      "od_from_atoms",
      [](long n, const std::string& tag) { return physics::od_from_atoms(n, physics::CouplingParams{}, tag).od; },
      py::arg("n_atoms"), py::arg("transition"));
  m.def("wavepacket", &physics::wavepacket, py::arg("t"), py::arg("width"));
  m.def(
      "paper_chain_budget",
      [](double power_w, double wavelength_m) {
        const auto b = physics::chain_budget(physics::FilterChain::paper(), power_w, wavelength_m);
        return py::make_tuple(b.total_isolation_db, b.total_transmission, b.leakage_photons_per_s);
      },
      py::arg("input_power_w") = 10e-3, py::arg("wavelength_m") = 852e-9);
}

void register_commands(py::module_& m) {
  m.def(
      "sweep_table",
      [](const std::string& config) {
        const auto t = cmd::sweep_table(io::parse_config(config));
        return json_to_py(io::json{{"columns", t.header}, {"rows", t.rows}});
      },
      py::arg("config") = "{}");
  m.def(
      "simulate",
      [](const std::string& config) { return json_to_py(cmd::simulate_json(io::parse_config(config))); },
      py::arg("config") = "{}");
  m.def("tool_version", &cmd::tool_version);
}

}  // namespace

PYBIND11_MODULE(_dlcz, m) {
  m.doc() = "DLCZ quantum-memory model, Monte Carlo simulator and fitter.";

  py::register_exception<InvalidArgument>(m, "InvalidArgument", PyExc_ValueError);
  py::register_exception<NumericalError>(m, "NumericalError", PyExc_ArithmeticError);

  register_model(m);
  register_montecarlo(m);
  register_fitting(m);
  register_physics(m);
  register_commands(m);
}
