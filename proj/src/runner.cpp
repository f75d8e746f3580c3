#include "stepdelay/runner.hpp"

#include <chrono>
#include <cmath>
#include <filesystem>
#include <fstream>

#include "json.hpp"
#include "stepdelay/verify.hpp"

namespace stepdelay {

using nlohmann::json;

namespace {

double window_e_lo(const std::vector<EnergyWindow>& ws) {
  double lo = ws.front().e_lo;
  for (const auto& w : ws) lo = std::min(lo, w.e_lo);
  return lo;
}

double window_e_hi(const std::vector<EnergyWindow>& ws) {
  double hi = ws.front().e_hi;
  for (const auto& w : ws) hi = std::max(hi, w.e_hi);
  return hi;
}

int next_pow2(int n) {
  int p = 1;
  while (p < n) p *= 2;
  return p;
}

double slowest_speed(const RunConfig& cfg) {
  const double e_lo = window_e_lo(cfg.packet.windows);
  const bool two_channel = e_lo > cfg.potential.v_right;
  const double k_min = two_channel ? std::sqrt(e_lo - cfg.potential.v_right)
                                   : std::sqrt(e_lo - cfg.potential.v_left);
  return 2.0 * k_min;
}

double horizon_for(const RunConfig& cfg) {
  if (cfg.quad.t_max > 0.0) return cfg.quad.t_max;
  const double v_min = slowest_speed(cfg);
  const double reach = cfg.schedule.r_max + std::abs(cfg.translate_x0);
  const double sp = cfg.packet.spread;
  const double t1 = (reach + 8.0 * sp) / v_min;
  const double sig = std::sqrt(sp * sp + (t1 / sp) * (t1 / sp));
  return (reach + 5.0 * sig) / v_min + 5.0;
}

}  // namespace

SpatialGrid auto_spatial_grid(const RunConfig& cfg) {
  const double p_max = std::sqrt(window_e_hi(cfg.packet.windows) - cfg.potential.v_left);
  double dx = cfg.grid.dx;
  if (dx <= 0.0) dx = std::min(2.0 * M_PI / (8.0 * p_max), cfg.packet.spread / 10.0);

  const double t_max = horizon_for(cfg);
  const double sp = cfg.packet.spread;
  const double t_asym =
      std::max(moller_horizon(sp, slowest_speed(cfg), t_max), cfg.quad.t_asym);
  const double v_max = 2.0 * p_max;
  const double t_reach = std::max(t_max, 2.0 * t_asym);
  const double sigma_t = std::sqrt(sp * sp + (t_reach / sp) * (t_reach / sp));
  const double x_half = v_max * t_reach + 6.0 * sigma_t + cfg.schedule.r_max +
                        std::abs(cfg.packet.center_x) + std::abs(cfg.translate_x0) + 20.0;

  SpatialGrid g;
  g.dx = dx;
  g.n = cfg.grid.n > 0 ? cfg.grid.n : next_pow2(static_cast<int>(std::ceil(2.0 * x_half / dx)));
  g.x_min = -0.5 * g.n * dx;
  return g;
}

RunConfig parse_run_config(const std::string& json_text) {
  json j;
  try {
    j = json::parse(json_text);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config parse error: ") + e.what());
  }
  RunConfig cfg;
  try {
    cfg.experiment = j.value("experiment", std::string("delay"));
    const std::vector<std::string> known{"sweep",     "delay",     "sigma",
                                         "decompose", "translate", "verify-all"};
    if (std::find(known.begin(), known.end(), cfg.experiment) == known.end())
      throw ConfigError("unknown experiment selector: " + cfg.experiment);
    cfg.output_dir = j.value("output_dir", std::string("out"));
    if (j.contains("potential")) cfg.potential = load_potential_config(j["potential"].dump());
    if (j.contains("packet")) {
      const json& p = j["packet"];
      cfg.packet.center_x = p.value("center_x", 0.0);
      cfg.packet.center_p = p.value("center_p", 0.0);
      cfg.packet.spread = p.value("spread", 5.0);
      cfg.packet.theta = p.value("theta", 5.0);
      cfg.packet.ramp_fraction = p.value("ramp_fraction", 0.2);
      if (p.contains("windows"))
        for (const auto& w : p["windows"])
          cfg.packet.windows.push_back({w.at(0).get<double>(), w.at(1).get<double>()});
    }
    if (j.contains("energy_grid")) {
      cfg.e_points = j["energy_grid"].value("points", 1024);
      cfg.e_padding = j["energy_grid"].value("padding", 0.03);
    }
    if (j.contains("grid")) {
      cfg.grid.n = j["grid"].value("n", 0);
      cfg.grid.dx = j["grid"].value("dx", 0.0);
    }
    if (j.contains("quadrature")) {
      const json& q = j["quadrature"];
      cfg.quad.t_max = q.value("t_max", 0.0);
      cfg.quad.t_asym = q.value("t_asym", 0.0);
      cfg.quad.dt_sample = q.value("dt_sample", 0.05);
      cfg.quad.split_dt = q.value("split_dt", 0.0);
      cfg.quad.tail_tol = q.value("tail_tol", 1e-3);
      cfg.quad.moller_defect_tol = q.value("moller_defect_tol", 1e-3);
    }
    if (j.contains("stationary")) {
      const json& s = j["stationary"];
      cfg.stationary.dx = s.value("dx", 0.05);
      cfg.stationary.span_min = s.value("span_min", 10.0);
      cfg.stationary.cutoff_budget = s.value("cutoff_budget", 1e-8);
      cfg.stationary.threshold_exclusion = s.value("threshold_exclusion", 0.0);
    }
    if (j.contains("r_schedule")) {
      const json& r = j["r_schedule"];
      cfg.schedule.r_min = r.value("r_min", 6.0);
      cfg.schedule.r_max = r.value("r_max", 40.0);
      cfg.schedule.count = r.value("count", 24);
      cfg.schedule.geometric = r.value("geometric", true);
    }
    if (j.contains("sweep")) {
      cfg.sweep_e_min = j["sweep"].value("e_min", 0.0);
      cfg.sweep_e_max = j["sweep"].value("e_max", 0.0);
      cfg.sweep_points = j["sweep"].value("points", 512);
    }
    cfg.translate_x0 = j.value("translate_x0", 0.0);
    cfg.threads = j.value("threads", 1);
    cfg.tol_scale = j.value("tol_scale", 1.0);
    cfg.quick = j.value("quick", false);
  } catch (const json::exception& e) {
    throw ConfigError(std::string("run config schema error: ") + e.what());
  }
  if (cfg.tol_scale <= 0.0) throw ConfigError("tol_scale must be positive");
  if (cfg.quad.tail_tol <= 0.0 || cfg.quad.moller_defect_tol <= 0.0)
    throw ConfigError("tolerances must be positive");
  return cfg;
}

std::string resolved_config_json(const RunConfig& cfg) {
  json j;
  j["experiment"] = cfg.experiment;
  j["output_dir"] = cfg.output_dir;
  j["potential"] = json::parse(serialize_potential(cfg.potential));
  json windows = json::array();
  for (const auto& w : cfg.packet.windows) windows.push_back({w.e_lo, w.e_hi});
  j["packet"] = {{"center_x", cfg.packet.center_x}, {"center_p", cfg.packet.center_p},
                 {"spread", cfg.packet.spread},     {"theta", cfg.packet.theta},
                 {"windows", windows},              {"ramp_fraction", cfg.packet.ramp_fraction}};
  j["energy_grid"] = {{"points", cfg.e_points}, {"padding", cfg.e_padding}};
  j["grid"] = {{"n", cfg.grid.n}, {"dx", cfg.grid.dx}};
  j["quadrature"] = {{"t_max", cfg.quad.t_max},
                     {"dt_sample", cfg.quad.dt_sample},
                     {"split_dt", cfg.quad.split_dt},
                     {"tail_tol", cfg.quad.tail_tol},
                     {"moller_defect_tol", cfg.quad.moller_defect_tol}};
  j["stationary"] = {{"dx", cfg.stationary.dx},
                     {"span_min", cfg.stationary.span_min},
                     {"cutoff_budget", cfg.stationary.cutoff_budget},
                     {"threshold_exclusion", cfg.stationary.threshold_exclusion}};
  j["r_schedule"] = {{"r_min", cfg.schedule.r_min},
                     {"r_max", cfg.schedule.r_max},
                     {"count", cfg.schedule.count},
                     {"geometric", cfg.schedule.geometric}};
  j["translate_x0"] = cfg.translate_x0;
  j["threads"] = cfg.threads;
  j["tol_scale"] = cfg.tol_scale;
  return j.dump(2);
}

ExperimentSetup prepare_experiment(const RunConfig& cfg) {
  if (cfg.packet.windows.empty())
    throw ConfigError("experiment '" + cfg.experiment + "' needs a packet with energy windows");
  ExperimentSetup s;
  s.potential = cfg.potential;
  s.potential.check_invariants();
  s.grid = auto_spatial_grid(cfg);

  PacketConfig pc = cfg.packet;
  if (pc.center_p <= 0.0) {
    const double lo = window_e_lo(pc.windows), hi = window_e_hi(pc.windows);
    pc.center_p = 0.5 * (std::sqrt(lo - cfg.potential.v_left) +
                         std::sqrt(hi - cfg.potential.v_left));
  }
  PacketOptions popts;
  popts.ramp_fraction = pc.ramp_fraction;
  popts.theta = pc.theta;
  s.packet = make_admissible_packet(pc.center_x, pc.center_p, pc.spread, pc.windows,
                                    cfg.potential.v_left, cfg.potential.v_right, s.grid, popts);

  const double lo = window_e_lo(pc.windows), hi = window_e_hi(pc.windows);
  const double pad = cfg.e_padding * (hi - lo);
  s.e_grid = linspace(lo - pad, hi + pad, cfg.e_points);
  s.data = scattering_sweep(s.potential, s.e_grid, cfg.stationary,
                            DerivativeScheme::CentralRichardson, cfg.threads);
  s.phi_in = to_in_representation(s.packet.state, cfg.potential.v_left, cfg.potential.v_right,
                                  s.e_grid);

  s.r_values = cfg.schedule.geometric
                   ? geomspace(cfg.schedule.r_min, cfg.schedule.r_max, cfg.schedule.count)
                   : linspace(cfg.schedule.r_min, cfg.schedule.r_max, cfg.schedule.count);
  return s;
}

DelayOutputs delay_experiment(const RunConfig& cfg, const ExperimentSetup& setup,
                              bool with_sigma, bool with_lr, bool with_translation) {
  DelayOutputs out;
  TimeDelayReport& rep = out.report;
  rep.tau_ew = ew_expectation(setup.phi_in, setup.data);
  rep.divergence_predicted = divergence_coefficient(setup.phi_in, setup.data);

  QuadratureSpec quad = cfg.quad;
  quad.tail_tol *= cfg.tol_scale;
  quad.moller_defect_tol *= cfg.tol_scale;
  const SojournCurve curve =
      sojourn_times(setup.packet, setup.potential, setup.data, setup.r_values, quad);
  out.curve = curve;
  rep.delays = local_time_delays(curve);

  const double r_max = setup.r_values.back();
  const double fit_lo = std::max(setup.r_values.front(), 0.45 * r_max);
  rep.slope_in = fit_divergence(rep.delays.r_values, rep.delays.tau_in, fit_lo, r_max);
  rep.slope_out = fit_divergence(rep.delays.r_values, rep.delays.tau_out, fit_lo, r_max);
  rep.tau_plateau = detect_plateau(rep.delays.r_values, rep.delays.tau_sym, 0.02,
                                   0.02 * cfg.tol_scale);

  rep.budget.moller_defect = curve.moller_defect;
  rep.budget.quadrature_tail =
      std::max({curve.tail_full, curve.tail_in, curve.tail_out});
  double deriv = 0.0;
  for (size_t i = 0; i < setup.data.energies.size(); ++i)
    if (setup.data.has_t[i]) deriv = std::max(deriv, setup.data.t[i].derivative_error);
  rep.budget.derivative_disagreement = deriv;
  rep.budget.plateau_spread = rep.tau_plateau.spread;

  if (with_sigma) {
    rep.sigma = sigma_surrogates(setup.packet, setup.data, setup.r_values, quad);
    std::vector<double> sig_avg(rep.sigma.r_values.size());
    for (size_t i = 0; i < sig_avg.size(); ++i)
      sig_avg[i] = 0.5 * (rep.sigma.sigma_in[i] + rep.sigma.sigma_out[i]);
    rep.sigma_plateau = detect_plateau(rep.sigma.r_values, sig_avg, 0.02, 0.02 * cfg.tol_scale);
  }
  if (with_lr) {
    const LrDecomposition lr =
        lr_decomposition(setup.packet, setup.potential, setup.data, r_max, quad);
    rep.tau_left = lr.tau_left;
    rep.tau_right = lr.tau_right;
  }
  if (with_translation)
    rep.translated = translated_delay(setup.phi_in, setup.data, cfg.translate_x0);
  return out;
}

namespace {

std::string packet_csv(const SpatialState& st) {
  std::string out = "x,re_psi,im_psi\n";
  for (int j = 0; j < st.grid().n; ++j) {
    out += format_g17(st.grid().x(j));
    out += ",";
    out += format_g17(st.values()[j].real());
    out += ",";
    out += format_g17(st.values()[j].imag());
    out += "\n";
  }
  return out;
}

class ArtifactWriter {
 public:
  explicit ArtifactWriter(const std::string& dir) : dir_(dir) {
    std::error_code ec;
    std::filesystem::create_directories(dir_, ec);
    if (ec) throw std::ios_base::failure("cannot create output directory " + dir);
  }

  void write(const std::string& name, const std::string& body) {
    const auto path = std::filesystem::path(dir_) / name;
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot open " + path.string());
    os << body;
    if (!os) throw std::ios_base::failure("write failed for " + path.string());
    names_.push_back(name);
    checksums_.push_back(hex64(fnv1a(body)));
  }

  void finalize(const RunConfig& cfg) {
    json manifest;
    json files = json::array();
    for (size_t i = 0; i < names_.size(); ++i)
      files.push_back({{"name", names_[i]}, {"fnv1a", checksums_[i]}});
    manifest["files"] = files;
    manifest["config"] = json::parse(resolved_config_json(cfg));
    const auto now = std::chrono::system_clock::now();
    manifest["written_unix_time"] =
        std::chrono::duration_cast<std::chrono::seconds>(now.time_since_epoch()).count();
    const auto path = std::filesystem::path(dir_) / "MANIFEST.json";
    std::ofstream os(path, std::ios::binary);
    if (!os) throw std::ios_base::failure("cannot open " + path.string());
    os << manifest.dump(2) << "\n";
    names_.push_back("MANIFEST.json");
  }

  const std::vector<std::string>& names() const { return names_; }

 private:
  std::string dir_;
  std::vector<std::string> names_;
  std::vector<std::string> checksums_;
};

}  // namespace

std::vector<std::string> run(const RunConfig& cfg) {
  ArtifactWriter writer(cfg.output_dir);

  if (cfg.experiment == "verify-all") {
    const auto results = verify::run_all(cfg.quick, cfg.tol_scale, cfg.threads);
    writer.write("verify_report.json", verify::report_json(results));
    writer.finalize(cfg);
    std::string failing;
    for (const auto& r : results)
      if (!r.pass) failing += (failing.empty() ? "" : ", ") + r.name;
    if (!failing.empty())
      throw CertificateError("verify-all: failing criteria: " + failing);
    return writer.names();
  }

  if (cfg.experiment == "sweep") {
    Potential pot = cfg.potential;
    pot.check_invariants();
    double e_min = cfg.sweep_e_min, e_max = cfg.sweep_e_max;
    if (e_max <= e_min) {
      const double excl = threshold_exclusion_radius(pot, cfg.stationary);
      e_min = pot.v_right + 2.0 * excl;
      e_max = pot.v_right + 3.0;
    }
    const auto energies = linspace(e_min, e_max, cfg.sweep_points);
    const ScatteringData data = scattering_sweep(pot, energies, cfg.stationary,
                                                 DerivativeScheme::CentralRichardson,
                                                 cfg.threads);
    writer.write("scattering.csv", scattering_csv(data));
    writer.write("scattering.json", scattering_json(data, cfg.stationary));
    writer.finalize(cfg);
    return writer.names();
  }

  // packet experiments
  const ExperimentSetup setup = prepare_experiment(cfg);
  writer.write("scattering.csv", scattering_csv(setup.data));
  writer.write("scattering.json", scattering_json(setup.data, cfg.stationary));
  writer.write("packet.csv", packet_csv(setup.packet.state));

  if (cfg.experiment == "sigma") {
    TimeDelayReport rep;
    rep.tau_ew = ew_expectation(setup.phi_in, setup.data);
    rep.divergence_predicted = divergence_coefficient(setup.phi_in, setup.data);
    QuadratureSpec quad = cfg.quad;
    rep.sigma = sigma_surrogates(setup.packet, setup.data, setup.r_values, quad);
    std::vector<double> sig_avg(rep.sigma.r_values.size());
    for (size_t i = 0; i < sig_avg.size(); ++i)
      sig_avg[i] = 0.5 * (rep.sigma.sigma_in[i] + rep.sigma.sigma_out[i]);
    rep.sigma_plateau = detect_plateau(rep.sigma.r_values, sig_avg, 0.02, 0.02 * cfg.tol_scale);
    rep.delays.r_values = rep.sigma.r_values;
    rep.delays.tau_in.assign(rep.sigma.r_values.size(), 0.0);
    rep.delays.tau_out.assign(rep.sigma.r_values.size(), 0.0);
    rep.delays.tau_sym.assign(rep.sigma.r_values.size(), 0.0);
    writer.write("report.json", rep.to_json());
    writer.write("delays.csv", rep.curves_csv());
    writer.finalize(cfg);
    return writer.names();
  }

  const bool with_lr = cfg.experiment == "decompose" || cfg.experiment == "delay";
  const bool with_translation = cfg.experiment == "translate";
  const DelayOutputs outputs = delay_experiment(cfg, setup, true, with_lr, with_translation);

  writer.write("sojourn.csv", sojourn_csv(outputs.curve));
  writer.write("sojourn_meta.json", sojourn_metadata_json(outputs.curve));
  writer.write("delays.csv", outputs.report.curves_csv());
  writer.write("report.json", outputs.report.to_json());
  writer.finalize(cfg);
  return writer.names();
}

}  // namespace stepdelay
