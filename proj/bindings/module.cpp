#include <pybind11/complex.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "stepdelay/runner.hpp"
#include "stepdelay/verify.hpp"

namespace py = pybind11;
using namespace stepdelay;

namespace {

SpatialGrid make_grid(int n, double dx) {
  SpatialGrid g;
  g.n = n;
  g.dx = dx;
  g.x_min = -0.5 * n * dx;
  return g;
}

std::vector<EnergyWindow> to_windows(const std::vector<std::pair<double, double>>& w) {
  std::vector<EnergyWindow> out;
  for (const auto& [lo, hi] : w) out.push_back({lo, hi});
  return out;
}

}  // namespace

PYBIND11_MODULE(_stepdelay, m) {
  m.doc() = "Stationary scattering data and wave-packet time delays for 1D steplike "
            "potentials (hbar = 1, m = 1/2)";

  py::register_exception<ConfigError>(m, "ConfigError");
  py::register_exception<CertificateError>(m, "CertificateError");

  py::class_<Potential>(m, "Potential")
      .def_readonly("v_left", &Potential::v_left)
      .def_readonly("v_right", &Potential::v_right)
      .def_readonly("decay_mu", &Potential::decay_mu)
      .def_readonly("decay_M", &Potential::decay_M)
      .def("__call__", [](const Potential& p, double x) { return p(x); })
      .def("kind", [](const Potential& p) { return to_string(p.kind); })
      .def("serialize", &serialize_potential)
      .def("check_invariants", &Potential::check_invariants);

  m.def("make_pure_step", &make_pure_step, py::arg("v_left"), py::arg("v_right"));
  m.def("make_smooth_step", &make_smooth_step, py::arg("v_left"), py::arg("v_right"),
        py::arg("width"));
  m.def("make_step_plus_bump", &make_step_plus_bump, py::arg("v_left"), py::arg("v_right"),
        py::arg("bump_height"), py::arg("bump_center"), py::arg("bump_width"));
  m.def("load_potential_config", &load_potential_config, py::arg("document"));

  py::class_<SMatrixPoint>(m, "SMatrixPoint")
      .def_readonly("energy", &SMatrixPoint::energy)
      .def_property_readonly(
          "channels",
          [](const SMatrixPoint& p) { return p.regime == Regime::OneChannel ? 1 : 2; })
      .def_readonly("s_ll", &SMatrixPoint::s_ll)
      .def_readonly("s_rl", &SMatrixPoint::s_rl)
      .def_readonly("s_rr", &SMatrixPoint::s_rr)
      .def_readonly("s_lr", &SMatrixPoint::s_lr)
      .def_readonly("unitarity_defect", &SMatrixPoint::unitarity_defect)
      .def_readonly("wronskian_deviation", &SMatrixPoint::wronskian_deviation);

  py::class_<EWMatrixPoint>(m, "EWMatrixPoint")
      .def_readonly("energy", &EWMatrixPoint::energy)
      .def_readonly("t_ll", &EWMatrixPoint::t_ll)
      .def_readonly("t_lr", &EWMatrixPoint::t_lr)
      .def_readonly("t_rl", &EWMatrixPoint::t_rl)
      .def_readonly("t_rr", &EWMatrixPoint::t_rr)
      .def_readonly("scheme", &EWMatrixPoint::scheme)
      .def_readonly("derivative_error", &EWMatrixPoint::derivative_error);

  py::class_<ScatteringData>(m, "ScatteringData")
      .def_readonly("energies", &ScatteringData::energies)
      .def_readonly("s", &ScatteringData::s)
      .def("ew_points",
           [](const ScatteringData& d) {
             std::vector<EWMatrixPoint> out;
             for (size_t i = 0; i < d.energies.size(); ++i)
               if (d.has_t[i]) out.push_back(d.t[i]);
             return out;
           })
      .def("to_csv", [](const ScatteringData& d) { return scattering_csv(d); });

  m.def(
      "s_matrix_at",
      [](const Potential& pot, double energy) { return s_matrix_at(pot, energy); },
      py::arg("potential"), py::arg("energy"));
  m.def(
      "scattering_sweep",
      [](const Potential& pot, const std::vector<double>& energies, int threads) {
        return scattering_sweep(pot, energies, {}, DerivativeScheme::CentralRichardson,
                                threads);
      },
      py::arg("potential"), py::arg("energies"), py::arg("threads") = 1);

  py::class_<SpatialGrid>(m, "SpatialGrid")
      .def(py::init(&make_grid), py::arg("n"), py::arg("dx"))
      .def_readonly("n", &SpatialGrid::n)
      .def_readonly("dx", &SpatialGrid::dx)
      .def_readonly("x_min", &SpatialGrid::x_min)
      .def("x", &SpatialGrid::x)
      .def("p", &SpatialGrid::p);

  py::class_<SpatialState>(m, "SpatialState")
      .def_property_readonly("grid", &SpatialState::grid)
      .def_property_readonly("values", &SpatialState::values)
      .def_property_readonly("momentum_values", &SpatialState::momentum_values)
      .def("norm", &SpatialState::norm)
      .def("norm_p", &SpatialState::norm_p)
      .def("window_mass", &SpatialState::window_mass, py::arg("a"), py::arg("b"))
      .def("momentum_amplitude", &SpatialState::momentum_amplitude, py::arg("p"));
  m.def("state_from_values", [](const SpatialGrid& g, std::vector<cplx> values) {
    return SpatialState::from_position(g, std::move(values));
  });

  m.def("parity", &parity);
  m.def("time_reverse", &time_reverse);

  py::class_<AdmissiblePacket>(m, "AdmissiblePacket")
      .def_readonly("state", &AdmissiblePacket::state)
      .def_readonly("theta", &AdmissiblePacket::theta)
      .def_readonly("leakage", &AdmissiblePacket::leakage)
      .def_readonly("spread", &AdmissiblePacket::spread)
      .def_readonly("center_p", &AdmissiblePacket::center_p)
      .def("default_e_grid", &AdmissiblePacket::default_e_grid, py::arg("n_points"));
  m.def(
      "make_admissible_packet",
      [](double center_x, double center_p, double spread,
         const std::vector<std::pair<double, double>>& windows, double v_left, double v_right,
         const SpatialGrid& grid) {
        return make_admissible_packet(center_x, center_p, spread, to_windows(windows), v_left,
                                      v_right, grid, {});
      },
      py::arg("center_x"), py::arg("center_p"), py::arg("spread"), py::arg("windows"),
      py::arg("v_left"), py::arg("v_right"), py::arg("grid"));

  py::class_<TwoChannelSpectral>(m, "TwoChannelSpectral")
      .def_readonly("e_grid", &TwoChannelSpectral::e_grid)
      .def_readonly("comp_l", &TwoChannelSpectral::comp_l)
      .def_readonly("comp_r", &TwoChannelSpectral::comp_r)
      .def("norm", &TwoChannelSpectral::norm);
  m.def("to_in_representation", &to_in_representation, py::arg("state"), py::arg("v_left"),
        py::arg("v_right"), py::arg("e_grid"));
  m.def("to_out_representation", &to_out_representation, py::arg("state"), py::arg("v_left"),
        py::arg("v_right"), py::arg("e_grid"));
  m.def("from_out_representation", &from_out_representation, py::arg("spec"), py::arg("grid"));
  m.def("apply_s", &apply_s, py::arg("phi_in"), py::arg("data"));

  m.def("evolve_channel", &evolve_channel, py::arg("state"), py::arg("kappa"), py::arg("t"));
  m.def("evolve_in_free", &evolve_in_free, py::arg("state"), py::arg("v_left"),
        py::arg("v_right"), py::arg("t"));
  m.def("evolve_out_free", &evolve_out_free, py::arg("state"), py::arg("v_left"),
        py::arg("v_right"), py::arg("t"));
  m.def(
      "evolve_full",
      [](const SpatialState& s, const Potential& pot, double t, double dt) {
        SplitStepOptions opts;
        opts.dt = dt;
        return evolve_full(s, pot, t, opts);
      },
      py::arg("state"), py::arg("potential"), py::arg("t"), py::arg("dt") = 0.0);

  py::class_<MollerResult>(m, "MollerResult")
      .def_readonly("state", &MollerResult::state)
      .def_readonly("cauchy_defect", &MollerResult::cauchy_defect)
      .def_readonly("t_asym", &MollerResult::t_asym);
  m.def(
      "moller_minus",
      [](const AdmissiblePacket& pk, const Potential& pot, double t_asym, double defect_tol) {
        return moller_minus(pk, pot, t_asym, {}, defect_tol);
      },
      py::arg("packet"), py::arg("potential"), py::arg("t_asym"),
      py::arg("defect_tol") = 1e-3);

  py::class_<SojournCurve>(m, "SojournCurve")
      .def_readonly("r_values", &SojournCurve::r_values)
      .def_readonly("t_full", &SojournCurve::t_full)
      .def_readonly("t_in", &SojournCurve::t_in)
      .def_readonly("t_out", &SojournCurve::t_out)
      .def_readonly("moller_defect", &SojournCurve::moller_defect)
      .def_readonly("t_max", &SojournCurve::t_max);
  py::class_<LocalDelays>(m, "LocalDelays")
      .def_readonly("r_values", &LocalDelays::r_values)
      .def_readonly("tau_in", &LocalDelays::tau_in)
      .def_readonly("tau_out", &LocalDelays::tau_out)
      .def_readonly("tau_sym", &LocalDelays::tau_sym);
  py::class_<SigmaCurves>(m, "SigmaCurves")
      .def_readonly("r_values", &SigmaCurves::r_values)
      .def_readonly("sigma_in", &SigmaCurves::sigma_in)
      .def_readonly("sigma_out", &SigmaCurves::sigma_out);
  py::class_<PlateauResult>(m, "PlateauResult")
      .def_readonly("value", &PlateauResult::value)
      .def_readonly("spread", &PlateauResult::spread)
      .def_readonly("window_points", &PlateauResult::window_points);
  py::class_<TranslatedDelay>(m, "TranslatedDelay")
      .def_readonly("value", &TranslatedDelay::value)
      .def_readonly("reflection_term", &TranslatedDelay::reflection_term)
      .def_readonly("transmission_term", &TranslatedDelay::transmission_term);

  m.def(
      "sojourn_times",
      [](const AdmissiblePacket& pk, const Potential& pot, const ScatteringData& data,
         const std::vector<double>& r_values, double window_shift) {
        return sojourn_times(pk, pot, data, r_values, {}, window_shift);
      },
      py::arg("packet"), py::arg("potential"), py::arg("data"), py::arg("r_values"),
      py::arg("window_shift") = 0.0);
  m.def("local_time_delays", &local_time_delays, py::arg("curve"));
  m.def("ew_expectation", &ew_expectation, py::arg("phi_in"), py::arg("data"),
        py::arg("hermiticity_tol") = 1e-8);
  m.def("divergence_coefficient", &divergence_coefficient, py::arg("phi_in"), py::arg("data"));
  m.def("detect_plateau", &detect_plateau, py::arg("r_values"), py::arg("values"),
        py::arg("rel_tol") = 0.02, py::arg("abs_floor") = 0.02);
  m.def(
      "sigma_surrogates",
      [](const AdmissiblePacket& pk, const ScatteringData& data,
         const std::vector<double>& r_values) { return sigma_surrogates(pk, data, r_values, {}); },
      py::arg("packet"), py::arg("data"), py::arg("r_values"));
  m.def("translated_delay", &translated_delay, py::arg("phi_in"), py::arg("data"),
        py::arg("x0"), py::arg("hermiticity_tol") = 1e-8);

  m.def(
      "run_config",
      [](const std::string& json_text) {
        const RunConfig cfg = parse_run_config(json_text);
        return run(cfg);
      },
      py::arg("json_text"), "Execute a JSON run config; returns the artifact file names.");

  m.def(
      "verify_all",
      [](bool quick, double tol_scale, int threads) {
        const auto results = verify::run_all(quick, tol_scale, threads);
        py::list out;
        for (const auto& r : results) {
          py::dict d;
          d["name"] = r.name;
          d["pass"] = r.pass;
          d["detail"] = r.detail;
          d["seconds"] = r.seconds;
          out.append(d);
        }
        return out;
      },
      py::arg("quick") = false, py::arg("tol_scale") = 1.0, py::arg("threads") = 1);

  m.def("linspace", &linspace, py::arg("a"), py::arg("b"), py::arg("n"));
  m.def("geomspace", &geomspace, py::arg("a"), py::arg("b"), py::arg("n"));
}
