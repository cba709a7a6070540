#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "vpp/centralized.hpp"
#include "vpp/comparison.hpp"
#include "vpp/decentralized.hpp"
#include "vpp/errors.hpp"
#include "vpp/io.hpp"
#include "vpp/market_clearing.hpp"
#include "vpp/multiperiod.hpp"
#include "vpp/prediction.hpp"

namespace py = pybind11;

PYBIND11_MODULE(_vppsim, m) {
  m.doc() = "Virtual power plant prediction-economy simulator";
  m.attr("__version__") = "0.1.0";

  const auto numerical = py::register_exception<vpp::NumericalError>(m, "NumericalError", PyExc_RuntimeError);
  py::register_exception<vpp::InfeasibleError>(m, "InfeasibleError", numerical.ptr());
  py::register_exception<vpp::DegenerateDualError>(m, "DegenerateDualError", numerical.ptr());
  py::register_exception<vpp::ConditionC1Error>(m, "ConditionC1Error", numerical.ptr());
  py::register_exception<vpp::InputError>(m, "InputError", PyExc_ValueError);
  py::register_exception<vpp::ValidationError>(m, "ValidationError", PyExc_ValueError);

  py::class_<vpp::SubregionStats>(m, "SubregionStats")
      .def(py::init([](double mean, double var) { return vpp::SubregionStats{mean, var}; }), py::arg("mean_output"),
           py::arg("var_output"))
      .def_readwrite("mean_output", &vpp::SubregionStats::mean_output)
      .def_readwrite("var_output", &vpp::SubregionStats::var_output);

  py::class_<vpp::Scenario>(m, "Scenario")
      .def_readwrite("alpha", &vpp::Scenario::alpha)
      .def_readwrite("beta0", &vpp::Scenario::beta0)
      .def_readwrite("u", &vpp::Scenario::u)
      .def_readwrite("t", &vpp::Scenario::t)
      .def_readwrite("m", &vpp::Scenario::m)
      .def_readwrite("consumers_per_subregion", &vpp::Scenario::consumers_per_subregion)
      .def_readwrite("subregions", &vpp::Scenario::subregions)
      .def_property_readonly("gamma", &vpp::Scenario::gamma)
      .def_property_readonly("zeta", &vpp::Scenario::zeta)
      .def("to_json", [](const vpp::Scenario& s) { return vpp::scenario_to_json(s).dump(); })
      .def_static("from_json", [](const std::string& text) {
        return vpp::scenario_from_json(nlohmann::json::parse(text));
      });

  m.def("benchmark_scenario", &vpp::benchmark_scenario, py::arg("consumers_per_subregion") = 300);
  m.def("validate_scenario", &vpp::validate_scenario);
  m.def("load_scenario", [](const std::string& path) { return vpp::load_scenario(path); });

  m.def("blue_coefficients", [](double var_w, double noise_var, double mean_w) {
    const auto e = vpp::blue_coefficients(var_w, vpp::NoiseVariance::of(noise_var), mean_w);
    return py::make_tuple(e.a1, e.a2);
  });
  m.def("precision_cost", &vpp::precision_cost, py::arg("m"), py::arg("num_buyers"), py::arg("var_w"),
        py::arg("tau"));
  m.def("conditional_mean", &vpp::conditional_mean);

  m.def("optimal_precision_cen", &vpp::optimal_precision_cen);
  m.def("optimal_precision_dis", &vpp::optimal_precision_dis);
  m.def("centralized_b1", [](const vpp::Scenario& s, const std::vector<double>& tau) {
    return vpp::centralized_coefficients(s, tau).b1;
  });
  m.def("expected_surplus_triple", [](const vpp::Scenario& s) {
    const auto r = vpp::expected_surplus_triple(s);
    return py::dict(py::arg("complete") = r.complete, py::arg("centralized") = r.centralized,
                    py::arg("none") = r.none);
  });

  m.def("check_c1", [](const vpp::Scenario& s) {
    const auto r = vpp::check_c1(s);
    py::object max_i = r.max_consumers ? py::cast(*r.max_consumers) : py::none();
    return py::dict(py::arg("holds") = r.holds, py::arg("spectral_radius") = r.spectral_radius,
                    py::arg("max_consumers") = max_i);
  });
  m.def("fixed_point_demand", &vpp::fixed_point_demand);
  m.def(
      "dpp_run",
      [](const vpp::Scenario& s, const std::vector<double>& w, std::uint64_t seed, double eps, long max_iter) {
        vpp::DppOptions opts;
        opts.eps = eps;
        opts.max_iter = max_iter;
        opts.keep_demands = false;
        const auto st = vpp::dpp_run(s, w, vpp::RandomStream(seed, 0), opts);
        std::vector<double> residuals;
        for (const auto& r : st.history) residuals.push_back(r.residual);
        return py::dict(py::arg("status") = vpp::to_string(st.status), py::arg("iterations") = st.iterations,
                        py::arg("avg_demand") = st.avg_demand, py::arg("beta") = st.beta, py::arg("F") = st.F,
                        py::arg("signal") = st.signal, py::arg("residuals") = residuals);
      },
      py::arg("scenario"), py::arg("w"), py::arg("seed") = 1, py::arg("eps") = 1e-6, py::arg("max_iter") = 10000);

  m.def("gap_variance_closed_form", &vpp::gap_variance_closed_form);
  m.def(
      "gap_moments_mc",
      [](const vpp::Scenario& s, long trials, std::uint64_t seed, unsigned threads) {
        py::list out;
        for (const auto& g : vpp::gap_moments_mc(s, trials, vpp::RandomStream(seed, 1), threads))
          out.append(py::dict(py::arg("mean_gap") = g.mean_gap, py::arg("var_gap") = g.var_gap,
                              py::arg("ci_halfwidth") = g.ci_halfwidth, py::arg("trials") = g.trials));
        return out;
      },
      py::arg("scenario"), py::arg("trials") = 100000, py::arg("seed") = 1, py::arg("threads") = 0);

  m.def("fleet_from_json", [](const std::string& text) { return vpp::fleet_from_json(nlohmann::json::parse(text)); });
  py::class_<vpp::GeneratorFleet>(m, "GeneratorFleet")
      .def("to_json", [](const vpp::GeneratorFleet& f) { return vpp::fleet_to_json(f).dump(); });
  m.def("solve_dispatch", [](const vpp::GeneratorFleet& f, double vpp_demand, double renewable_total) {
    const auto r = vpp::solve_dispatch(f, vpp_demand, renewable_total);
    return py::dict(py::arg("outputs") = r.outputs, py::arg("price") = r.price);
  });
  m.def("calibrate_price_curve", [](const vpp::GeneratorFleet& f, double q_min, double q_max, double step) {
    py::list out;
    for (const auto& s : vpp::calibrate_price_curve(f, {q_min, q_max, step}))
      out.append(py::dict(py::arg("slope") = s.slope, py::arg("intercept") = s.intercept, py::arg("q_lo") = s.q_lo,
                          py::arg("q_hi") = s.q_hi));
    return out;
  });

  m.def("allocate_energy", [](const std::vector<double>& a, double gain, double lo, double hi, double total) {
    return vpp::allocate_energy(a, gain, lo, hi, total).x;
  });
}
