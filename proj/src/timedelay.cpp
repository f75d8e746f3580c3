#include "stepdelay/timedelay.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace stepdelay {

LocalDelays local_time_delays(const SojournCurve& curve) {
  LocalDelays out;
  out.r_values = curve.r_values;
  const size_t n = curve.r_values.size();
  out.tau_in.resize(n);
  out.tau_out.resize(n);
  out.tau_sym.resize(n);
  for (size_t i = 0; i < n; ++i) {
    out.tau_in[i] = curve.t_full[i] - curve.t_in[i];
    out.tau_out[i] = curve.t_full[i] - curve.t_out[i];
    out.tau_sym[i] = 0.5 * (out.tau_in[i] + out.tau_out[i]);
  }
  return out;
}

namespace {

void check_alignment(const TwoChannelSpectral& phi, const ScatteringData& data) {
  if (phi.e_grid.size() != data.energies.size())
    throw std::invalid_argument("spectral grid does not match scattering data grid");
  for (size_t i = 0; i < phi.e_grid.size(); ++i)
    if (std::abs(phi.e_grid[i] - data.energies[i]) > 1e-9)
      throw std::invalid_argument("spectral grid does not match scattering data grid");
}

// Fractional spectral mass carried by grid points without EW data (edges and
// threshold guards); must be negligible for the quadratures to be honest.
void check_support_covered(const TwoChannelSpectral& phi, const ScatteringData& data) {
  double covered = 0.0, total = 0.0;
  for (size_t i = 0; i < phi.e_grid.size(); ++i) {
    const double dens = std::norm(phi.comp_l[i]) + std::norm(phi.comp_r[i]);
    total += dens;
    if (data.has_t[i]) covered += dens;
  }
  if (total > 0.0 && (total - covered) / total > 1e-6)
    throw std::invalid_argument(
        "packet spectral support extends over grid points without EW data");
}

}  // namespace

double ew_expectation(const TwoChannelSpectral& phi_in, const ScatteringData& data,
                      double hermiticity_tol) {
  if (phi_in.rep != Rep::In) throw std::invalid_argument("ew_expectation: need in-representation");
  check_alignment(phi_in, data);
  check_support_covered(phi_in, data);
  std::vector<cplx> integrand(phi_in.e_grid.size(), cplx{0.0, 0.0});
  for (size_t i = 0; i < phi_in.e_grid.size(); ++i) {
    if (!data.has_t[i]) continue;
    const EWMatrixPoint& t = data.t[i];
    const cplx l = phi_in.comp_l[i];
    const cplx r = phi_in.comp_r[i];
    if (t.regime == Regime::TwoChannel) {
      integrand[i] = std::conj(l) * (t.t_ll * l + t.t_lr * r) +
                     std::conj(r) * (t.t_rl * l + t.t_rr * r);
    } else {
      integrand[i] = std::conj(l) * t.t_ll * l;
    }
  }
  const cplx val = trapezoid(phi_in.e_grid, integrand);
  // absolute floor of one time unit keeps the diagnostic meaningful when
  // the expectation itself is (near) zero
  const double scale = std::max(std::abs(val), 1.0);
  if (std::abs(val.imag()) > hermiticity_tol * scale)
    throw CertificateError("ew_expectation: imaginary residue above hermiticity diagnostic");
  return val.real();
}

double divergence_coefficient(const TwoChannelSpectral& phi_in, const ScatteringData& data) {
  if (phi_in.rep != Rep::In)
    throw std::invalid_argument("divergence_coefficient: need in-representation");
  check_alignment(phi_in, data);
  const TwoChannelSpectral out = apply_s(phi_in, data);
  std::vector<double> integrand(out.e_grid.size(), 0.0);
  for (size_t i = 0; i < out.e_grid.size(); ++i) {
    const double e = out.e_grid[i];
    if (e <= data.v_right) continue;
    const double kr = std::sqrt(e - data.v_right);
    const double kl = std::sqrt(e - data.v_left);
    integrand[i] = std::norm(out.comp_r[i]) * (1.0 / kr - 1.0 / kl);
  }
  return 0.5 * trapezoid(out.e_grid, integrand);
}

LinearFit fit_divergence(const std::vector<double>& r_values, const std::vector<double>& tau,
                         double r_lo, double r_hi) {
  std::vector<double> xs, ys;
  for (size_t i = 0; i < r_values.size(); ++i)
    if (r_values[i] >= r_lo && r_values[i] <= r_hi) {
      xs.push_back(r_values[i]);
      ys.push_back(tau[i]);
    }
  if (xs.size() < 5) throw std::invalid_argument("fit_divergence: window has fewer than 5 points");
  return linear_fit(xs, ys);
}

PlateauResult detect_plateau(const std::vector<double>& r_values,
                             const std::vector<double>& values, double rel_tol,
                             double abs_floor) {
  (void)r_values;
  const int n = static_cast<int>(values.size());
  if (n < 5) throw std::invalid_argument("detect_plateau: need at least 5 points");
  for (int start = 0; start + 5 <= n; ++start) {
    double lo = values[start], hi = values[start];
    for (int i = start; i < n; ++i) {
      lo = std::min(lo, values[i]);
      hi = std::max(hi, values[i]);
    }
    const double mid = 0.5 * (lo + hi);
    if (hi - lo <= std::max(rel_tol * std::abs(mid), abs_floor)) {
      double mean = 0.0;
      for (int i = start; i < n; ++i) mean += values[i];
      mean /= (n - start);
      return {mean, 0.5 * (hi - lo), n - start};
    }
  }
  throw CertificateError("detect_plateau: no plateau found (R range or horizon insufficient)");
}

SigmaCurves sigma_surrogates(const AdmissiblePacket& phi, const ScatteringData& data,
                             const std::vector<double>& r_values, const QuadratureSpec& quad) {
  SigmaCurves out;
  out.r_values = r_values;
  QuadratureSpec q = quad;
  if (q.t_max <= 0.0) {
    q.t_max = [&] {
      double e_lo = phi.windows.front().e_lo;
      for (const auto& w : phi.windows) e_lo = std::min(e_lo, w.e_lo);
      const bool two_channel = e_lo > phi.v_right;
      const double k_min =
          two_channel ? std::sqrt(e_lo - phi.v_right) : std::sqrt(e_lo - phi.v_left);
      const double r_max = r_values.back();
      const double t1 = (r_max + 8.0 * phi.spread) / (2.0 * k_min);
      const double sig =
          std::sqrt(phi.spread * phi.spread + (t1 / phi.spread) * (t1 / phi.spread));
      return (r_max + 5.0 * sig) / (2.0 * k_min) + 5.0;
    }();
  }
  out.t_max = q.t_max;

  const TwoChannelSpectral in_rep =
      to_in_representation(phi.state, phi.v_left, phi.v_right, data.energies);
  const TwoChannelSpectral out_rep = apply_s(in_rep, data);
  const SpatialState s_phi = from_out_representation(out_rep, phi.state.grid());

  std::vector<std::pair<double, double>> windows;
  for (double r : r_values) windows.emplace_back(-r, r);

  const SplitWindowedIntegral sphi_split = integrate_channel_window_masses_split(
      s_phi, phi.v_right, phi.v_left, q.t_max, q.dt_sample, windows, q.tail_fraction);
  const SplitWindowedIntegral phi_split = integrate_channel_window_masses_split(
      phi.state, phi.v_left, phi.v_right, q.t_max, q.dt_sample, windows, q.tail_fraction);

  out.sigma_in.resize(r_values.size());
  out.sigma_out.resize(r_values.size());
  for (size_t i = 0; i < r_values.size(); ++i) {
    out.sigma_in[i] = sphi_split.positive[i] - phi_split.positive[i];
    out.sigma_out[i] = -(sphi_split.negative[i] - phi_split.negative[i]);
  }
  out.tail = std::max(sphi_split.tail_estimate, phi_split.tail_estimate);
  return out;
}

LrDecomposition lr_decomposition(const AdmissiblePacket& phi, const Potential& pot,
                                 const ScatteringData& data, double r,
                                 const QuadratureSpec& quad) {
  QuadratureSpec q = quad;
  if (q.t_max <= 0.0) {
    double e_lo = phi.windows.front().e_lo;
    for (const auto& w : phi.windows) e_lo = std::min(e_lo, w.e_lo);
    const bool two_channel = e_lo > phi.v_right;
    const double k_min =
        two_channel ? std::sqrt(e_lo - phi.v_right) : std::sqrt(e_lo - phi.v_left);
    const double t1 = (r + 8.0 * phi.spread) / (2.0 * k_min);
    const double sig = std::sqrt(phi.spread * phi.spread + (t1 / phi.spread) * (t1 / phi.spread));
    q.t_max = (r + 5.0 * sig) / (2.0 * k_min) + 5.0;
  }

  const TwoChannelSpectral in_rep =
      to_in_representation(phi.state, phi.v_left, phi.v_right, data.energies);
  const TwoChannelSpectral out_rep = apply_s(in_rep, data);
  const OutgoingParts parts = split_outgoing(out_rep, phi.state.grid());

  const std::vector<std::pair<double, double>> left{{-r, 0.0}};
  const std::vector<std::pair<double, double>> right{{0.0, r}};

  const WindowedIntegral phi_l = integrate_channel_window_masses(
      phi.state, phi.v_left, phi.v_left, -q.t_max, q.t_max, q.dt_sample, left,
      q.tail_fraction);
  const WindowedIntegral refl_l = integrate_channel_window_masses(
      parts.reflected, phi.v_left, phi.v_left, -q.t_max, q.t_max, q.dt_sample, left,
      q.tail_fraction);
  const WindowedIntegral trans_r = integrate_channel_window_masses(
      parts.transmitted, phi.v_right, phi.v_right, -q.t_max, q.t_max, q.dt_sample, right,
      q.tail_fraction);

  SplitStepOptions sso;
  sso.dt = q.split_dt;
  const double t_asym = q.t_asym > 0.0 ? q.t_asym : auto_t_asym(phi, q.t_max);
  const MollerResult moller = moller_minus(phi, pot, t_asym, sso, q.moller_defect_tol);

  const SpatialGrid& grid = phi.state.grid();
  double full_l = 0.0, full_r = 0.0, last_l = 0.0, last_r = 0.0, t_prev = 0.0;
  bool first = true;
  std::vector<double> prefix(grid.n, 0.0);
  auto accumulate = [&](double t, const std::vector<cplx>& vals) {
    for (int j = 1; j < grid.n; ++j)
      prefix[j] = prefix[j - 1] + 0.5 * (std::norm(vals[j - 1]) + std::norm(vals[j])) * grid.dx;
    auto cum = [&](double x) {
      const double u = std::clamp((x - grid.x_min) / grid.dx, 0.0, double(grid.n - 1));
      const int j = std::min(static_cast<int>(std::floor(u)), grid.n - 2);
      const double f = u - j;
      const double r0 = std::norm(vals[j]), r1 = std::norm(vals[j + 1]);
      return prefix[j] + grid.dx * (r0 * f + 0.5 * (r1 - r0) * f * f);
    };
    const double ml = cum(0.0) - cum(-r);
    const double mr = cum(r) - cum(0.0);
    const double h = first ? 0.0 : std::abs(t - t_prev);
    if (!first) {
      full_l += 0.5 * h * (ml + last_l);
      full_r += 0.5 * h * (mr + last_r);
    }
    last_l = ml;
    last_r = mr;
    t_prev = t;
    first = false;
  };
  evolve_full_observed(moller.state, pot, 0.0, -q.t_max, sso, accumulate, q.dt_sample);
  first = true;
  evolve_full_observed(moller.state, pot, 0.0, q.t_max, sso, accumulate, q.dt_sample);

  LrDecomposition out;
  out.r_used = r;
  out.moller_defect = moller.cauchy_defect;
  out.tau_left = full_l - phi_l.values[0] - refl_l.values[0];
  out.tau_right = full_r - trans_r.values[0];
  return out;
}

TranslatedDelay translated_delay(const TwoChannelSpectral& phi_in, const ScatteringData& data,
                                 double x0, double hermiticity_tol) {
  if (phi_in.rep != Rep::In)
    throw std::invalid_argument("translated_delay: need in-representation");
  check_alignment(phi_in, data);
  TranslatedDelay out;
  out.x0 = x0;
  const double tau0 = ew_expectation(phi_in, data, hermiticity_tol);
  if (x0 == 0.0) {
    out.value = tau0;
    return out;
  }
  // Translating the comparison window by x0 conjugates the scattering
  // matrix with e^{iPx0}; the induced entry phases e^{-2ik_l x0} (reflection)
  // and e^{i(k_r-k_l)x0} (transmission) shift the EW diagonal by the two
  // closed-form terms below.
  std::vector<double> refl(phi_in.e_grid.size(), 0.0), trans(phi_in.e_grid.size(), 0.0);
  for (size_t i = 0; i < phi_in.e_grid.size(); ++i) {
    const double e = phi_in.e_grid[i];
    const double kl = std::sqrt(e - data.v_left);
    const double dens = std::norm(phi_in.comp_l[i]);
    const SMatrixPoint& s = data.s[i];
    refl[i] = std::norm(s.s_ll) * dens / kl;
    if (s.regime == Regime::TwoChannel) {
      const double kr = std::sqrt(e - data.v_right);
      trans[i] = std::norm(s.s_rl) * dens * (1.0 / kr - 1.0 / kl);
    }
  }
  out.reflection_term = -x0 * trapezoid(phi_in.e_grid, refl);
  out.transmission_term = 0.5 * x0 * trapezoid(phi_in.e_grid, trans);
  out.value = tau0 + out.reflection_term + out.transmission_term;
  return out;
}

std::string TimeDelayReport::to_json() const {
  nlohmann::json j;
  j["tau_ew"] = tau_ew;
  j["tau_plateau"] = {{"value", tau_plateau.value},
                      {"spread", tau_plateau.spread},
                      {"window_points", tau_plateau.window_points}};
  j["sigma_plateau"] = {{"value", sigma_plateau.value},
                        {"spread", sigma_plateau.spread},
                        {"window_points", sigma_plateau.window_points}};
  j["divergence_predicted"] = divergence_predicted;
  j["slope_in"] = {{"slope", slope_in.slope}, {"ci", slope_in.slope_ci}};
  j["slope_out"] = {{"slope", slope_out.slope}, {"ci", slope_out.slope_ci}};
  j["tau_left"] = tau_left;
  j["tau_right"] = tau_right;
  j["error_budget"] = {{"moller_defect", budget.moller_defect},
                       {"quadrature_tail", budget.quadrature_tail},
                       {"derivative_disagreement", budget.derivative_disagreement},
                       {"plateau_spread", budget.plateau_spread},
                       {"total", budget.total()}};
  if (translated.has_value()) {
    j["translated"] = {{"x0", translated->x0},
                       {"value", translated->value},
                       {"reflection_term", translated->reflection_term},
                       {"transmission_term", translated->transmission_term}};
  }
  return j.dump(2);
}

std::string TimeDelayReport::curves_csv() const {
  std::ostringstream os;
  os << "R,tau_in,tau_out,tau_sym,sigma_in,sigma_out\n";
  for (size_t i = 0; i < delays.r_values.size(); ++i) {
    os << format_g17(delays.r_values[i]) << "," << format_g17(delays.tau_in[i]) << ","
       << format_g17(delays.tau_out[i]) << "," << format_g17(delays.tau_sym[i]);
    if (i < sigma.sigma_in.size())
      os << "," << format_g17(sigma.sigma_in[i]) << "," << format_g17(sigma.sigma_out[i]);
    else
      os << ",,";
    os << "\n";
  }
  return os.str();
}

}  // namespace stepdelay
