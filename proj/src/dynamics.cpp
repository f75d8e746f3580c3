#include "stepdelay/dynamics.hpp"

#include <cmath>
#include <sstream>

#include "json.hpp"

namespace stepdelay {

namespace {

std::vector<cplx> channel_multiplier(const SpatialGrid& g, double kappa, double t) {
  std::vector<cplx> f(g.n);
  for (int k = 0; k < g.n; ++k) {
    const double p = g.p(k);
    const double phase = -(p * p + kappa) * t;
    f[k] = {std::cos(phase), std::sin(phase)};
  }
  return f;
}

std::vector<cplx> two_channel_multiplier(const SpatialGrid& g, double v_pos, double v_neg,
                                         double t) {
  std::vector<cplx> f(g.n);
  for (int k = 0; k < g.n; ++k) {
    const double p = g.p(k);
    const double kappa = p > 0.0 ? v_pos : v_neg;
    const double phase = -(p * p + kappa) * t;
    f[k] = {std::cos(phase), std::sin(phase)};
  }
  return f;
}

double edge_mass(const SpatialState& s) {
  const int n = s.grid().n;
  const int m = std::max(2, n / 50);
  double acc = 0.0;
  for (int j = 0; j < m; ++j)
    acc += (std::norm(s.values()[j]) + std::norm(s.values()[n - 1 - j])) * s.grid().dx;
  return acc;
}

}  // namespace

SpatialState evolve_channel(const SpatialState& phi, double kappa, double t) {
  if (t == 0.0) return phi;
  return phi.multiplied_in_momentum(channel_multiplier(phi.grid(), kappa, t));
}

SpatialState evolve_in_free(const SpatialState& phi, double v_left, double v_right, double t) {
  if (t == 0.0) return phi;
  return phi.multiplied_in_momentum(two_channel_multiplier(phi.grid(), v_left, v_right, t));
}

SpatialState evolve_out_free(const SpatialState& phi, double v_left, double v_right, double t) {
  if (t == 0.0) return phi;
  return phi.multiplied_in_momentum(two_channel_multiplier(phi.grid(), v_right, v_left, t));
}

SpatialState evolve_full_observed(const SpatialState& phi, const Potential& pot, double t_start,
                                  double t_end, const SplitStepOptions& opts,
                                  const StepObserver& observe, double observe_every) {
  const SpatialGrid& g = phi.grid();
  const double span = t_end - t_start;
  if (span == 0.0) {
    if (observe) observe(t_start, phi.values());
    return phi;
  }
  double dt = opts.dt > 0.0 ? opts.dt : 0.4 * g.dx * g.dx;
  const int steps = std::max(1, static_cast<int>(std::ceil(std::abs(span) / dt)));
  dt = span / steps;
  const int stride =
      observe_every > 0.0 ? std::max(1, static_cast<int>(std::floor(observe_every / std::abs(dt))))
                          : 1;

  std::vector<cplx> half_v(g.n), kin(g.n);
  for (int j = 0; j < g.n; ++j) {
    const double ph = -0.5 * pot(g.x(j)) * dt;
    half_v[j] = {std::cos(ph), std::sin(ph)};
  }
  for (int k = 0; k < g.n; ++k) {
    const double p = g.p(k);
    const double ph = -p * p * dt;
    kin[k] = {std::cos(ph), std::sin(ph)};
  }

  std::vector<cplx> psi(phi.values());
  if (observe) observe(t_start, psi);
  const double fft_norm = 1.0 / g.n;
  for (int s = 0; s < steps; ++s) {
    for (int j = 0; j < g.n; ++j) psi[j] *= half_v[j];
    fft(psi, -1);
    for (int k = 0; k < g.n; ++k) psi[k] *= kin[k];
    fft(psi, +1);
    for (int j = 0; j < g.n; ++j) psi[j] *= half_v[j] * fft_norm;
    if (observe && ((s + 1) % stride == 0 || s + 1 == steps))
      observe(t_start + dt * (s + 1), psi);
  }
  SpatialState out = SpatialState::from_position(g, std::move(psi));
  if (opts.check_leakage && edge_mass(out) > opts.leak_tol)
    throw CertificateError("evolve_full: boundary leakage above tolerance (grid too small)");
  return out;
}

SpatialState evolve_full(const SpatialState& phi, const Potential& pot, double t,
                         const SplitStepOptions& opts) {
  return evolve_full_observed(phi, pot, 0.0, t, opts, nullptr);
}

MollerResult moller_minus(const AdmissiblePacket& phi, const Potential& pot, double t_asym,
                          const SplitStepOptions& opts, double defect_tol) {
  if (!(t_asym > 0.0)) throw std::invalid_argument("moller_minus: t_asym must be positive");
  auto approximant = [&](double T) {
    SpatialState back = evolve_in_free(phi.state, phi.v_left, phi.v_right, -T);
    return evolve_full(back, pot, T, opts);
  };
  const SpatialState psi1 = approximant(t_asym);
  const SpatialState psi2 = approximant(2.0 * t_asym);
  double d2 = 0.0;
  for (int j = 0; j < psi1.grid().n; ++j)
    d2 += std::norm(psi1.values()[j] - psi2.values()[j]) * psi1.grid().dx;
  MollerResult out{psi2, std::sqrt(d2), t_asym};
  if (out.cauchy_defect > defect_tol)
    throw CertificateError("moller_minus: Cauchy defect " + format_g17(out.cauchy_defect) +
                           " above tolerance (packet near threshold or grid too small?)");
  return out;
}

namespace {

// Window [a, b] resolved against a grid for O(1) mass lookups from a
// density prefix table.
struct ResolvedWindow {
  double a, b;
};

double mass_from_prefix(const SpatialGrid& g, const std::vector<double>& prefix,
                        const std::vector<cplx>& values, double a, double b) {
  auto pos = [&](double x) {
    return std::clamp((x - g.x_min) / g.dx, 0.0, double(g.n - 1));
  };
  auto cumulative = [&](double x) {
    const double u = pos(x);
    const int j = std::min(static_cast<int>(std::floor(u)), g.n - 2);
    const double f = u - j;
    const double r0 = std::norm(values[j]);
    const double r1 = std::norm(values[j + 1]);
    return prefix[j] + g.dx * (r0 * f + 0.5 * (r1 - r0) * f * f);
  };
  if (b <= a) return 0.0;
  return cumulative(b) - cumulative(a);
}

// Power-law extrapolation of the trailing integrand samples: fits
// w ~ C t^{-alpha} over the trailing window and returns the analytic
// remainder beyond the horizon (0 when the signal is at the noise floor).
double tail_from_samples(const std::vector<double>& ts, const std::vector<double>& ws,
                         double tail_fraction) {
  const size_t n = ts.size();
  if (n < 8) return 0.0;
  const size_t m = std::max<size_t>(4, static_cast<size_t>(n * tail_fraction));
  std::vector<double> lt, lw;
  for (size_t i = n - m; i < n; ++i) {
    if (ts[i] > 0.0 && ws[i] > 1e-14) {
      lt.push_back(std::log(ts[i]));
      lw.push_back(std::log(ws[i]));
    }
  }
  if (lt.size() < 4) return 0.0;
  const LinearFit fit = linear_fit(lt, lw);
  const double alpha = -fit.slope;
  const double w_end = ws.back();
  const double t_end = ts.back();
  if (alpha <= 1.5) return w_end * t_end;  // pessimistic flag value
  return w_end * t_end / (alpha - 1.0);
}

}  // namespace

WindowedIntegral integrate_window_masses(const EvolutionSampler& sample, double t_lo,
                                         double t_hi, double dt,
                                         const std::vector<std::pair<double, double>>& windows,
                                         double tail_fraction) {
  const int steps = std::max(1, static_cast<int>(std::ceil((t_hi - t_lo) / dt)));
  const double h = (t_hi - t_lo) / steps;
  WindowedIntegral out;
  out.values.assign(windows.size(), 0.0);
  std::vector<double> ts, ws;
  ts.reserve(steps + 1);
  ws.reserve(steps + 1);
  for (int s = 0; s <= steps; ++s) {
    const double t = t_lo + h * s;
    const SpatialState st = sample(t);
    const auto prefix = st.mass_prefix();
    const double weight = (s == 0 || s == steps) ? 0.5 * h : h;
    double widest = 0.0;
    for (size_t w = 0; w < windows.size(); ++w) {
      const double m =
          mass_from_prefix(st.grid(), prefix, st.values(), windows[w].first, windows[w].second);
      out.values[w] += weight * m;
      widest = std::max(widest, m);
    }
    ts.push_back(std::abs(t));
    ws.push_back(widest);
  }
  out.tail_estimate = tail_from_samples(ts, ws, tail_fraction);
  return out;
}

namespace {

// Marches the two-channel multiplier evolution in momentum space with a
// fixed time step and hands each |psi_t|^2 snapshot (position space) plus
// its trapezoid weight to the sink.
void march_channel_evolution(const SpatialState& phi, double v_pos, double v_neg, double t_lo,
                             double t_hi, double dt,
                             const std::function<void(double, double, const SpatialGrid&,
                                                      const std::vector<double>&,
                                                      const std::vector<cplx>&)>& sink) {
  const SpatialGrid& g = phi.grid();
  const int steps = std::max(1, static_cast<int>(std::ceil((t_hi - t_lo) / dt)));
  const double h = (t_hi - t_lo) / steps;

  const std::vector<cplx> step_mult = two_channel_multiplier(g, v_pos, v_neg, h);
  std::vector<cplx> mom(phi.momentum_values());
  {
    const auto jump = two_channel_multiplier(g, v_pos, v_neg, t_lo);
    for (int k = 0; k < g.n; ++k) mom[k] *= jump[k];
  }
  std::vector<cplx> origin_phase(g.n);
  const double mom_to_pos = std::sqrt(2.0 * M_PI) / (g.dx * g.n);
  for (int k = 0; k < g.n; ++k) {
    const double phase = g.p(k) * g.x_min;
    origin_phase[k] = mom_to_pos * cplx(std::cos(phase), std::sin(phase));
  }

  std::vector<cplx> buf(g.n);
  std::vector<double> prefix(g.n, 0.0);
  for (int s = 0; s <= steps; ++s) {
    const double t = t_lo + h * s;
    if (s > 0)
      for (int k = 0; k < g.n; ++k) mom[k] *= step_mult[k];
    for (int k = 0; k < g.n; ++k) buf[k] = mom[k] * origin_phase[k];
    fft(buf, +1);
    for (int j = 1; j < g.n; ++j)
      prefix[j] = prefix[j - 1] + 0.5 * (std::norm(buf[j - 1]) + std::norm(buf[j])) * g.dx;
    const double weight = (s == 0 || s == steps) ? 0.5 * h : h;
    sink(t, weight, g, prefix, buf);
  }
}

}  // namespace

WindowedIntegral integrate_channel_window_masses(
    const SpatialState& phi, double v_pos, double v_neg, double t_lo, double t_hi, double dt,
    const std::vector<std::pair<double, double>>& windows, double tail_fraction) {
  WindowedIntegral out;
  out.values.assign(windows.size(), 0.0);
  std::vector<double> ts, ws;
  march_channel_evolution(
      phi, v_pos, v_neg, t_lo, t_hi, dt,
      [&](double t, double weight, const SpatialGrid& g, const std::vector<double>& prefix,
          const std::vector<cplx>& vals) {
        double widest = 0.0;
        for (size_t w = 0; w < windows.size(); ++w) {
          const double m = mass_from_prefix(g, prefix, vals, windows[w].first, windows[w].second);
          out.values[w] += weight * m;
          widest = std::max(widest, m);
        }
        ts.push_back(std::abs(t));
        ws.push_back(widest);
      });
  out.tail_estimate = tail_from_samples(ts, ws, tail_fraction);
  return out;
}

SplitWindowedIntegral integrate_channel_window_masses_split(
    const SpatialState& phi, double v_pos, double v_neg, double t_max, double dt,
    const std::vector<std::pair<double, double>>& windows, double tail_fraction) {
  SplitWindowedIntegral out;
  out.positive.assign(windows.size(), 0.0);
  out.negative.assign(windows.size(), 0.0);
  std::vector<double> ts, ws;
  const int half_steps = std::max(1, static_cast<int>(std::ceil(t_max / dt)));
  const double t_lo = -half_steps * (t_max / half_steps);
  march_channel_evolution(
      phi, v_pos, v_neg, t_lo, t_max, dt,
      [&](double t, double weight, const SpatialGrid& g, const std::vector<double>& prefix,
          const std::vector<cplx>& vals) {
        // the t = 0 sample carries half its trapezoid weight to each side
        const bool at_zero = std::abs(t) < 1e-12 * t_max;
        double widest = 0.0;
        for (size_t w = 0; w < windows.size(); ++w) {
          const double m = mass_from_prefix(g, prefix, vals, windows[w].first, windows[w].second);
          if (at_zero) {
            out.positive[w] += 0.5 * weight * m;
            out.negative[w] += 0.5 * weight * m;
          } else if (t > 0.0) {
            out.positive[w] += weight * m;
          } else {
            out.negative[w] += weight * m;
          }
          widest = std::max(widest, m);
        }
        ts.push_back(std::abs(t));
        ws.push_back(widest);
      });
  out.tail_estimate = tail_from_samples(ts, ws, tail_fraction);
  return out;
}

namespace {

double slowest_channel_speed(const AdmissiblePacket& pk) {
  double e_lo = pk.windows.front().e_lo;
  for (const auto& w : pk.windows) e_lo = std::min(e_lo, w.e_lo);
  const bool two_channel = e_lo > pk.v_right;
  const double k_min =
      two_channel ? std::sqrt(e_lo - pk.v_right) : std::sqrt(e_lo - pk.v_left);
  return 2.0 * k_min;
}

double auto_t_max(const AdmissiblePacket& pk, double r_max, double window_shift) {
  double e_lo = pk.windows.front().e_lo;
  for (const auto& w : pk.windows) e_lo = std::min(e_lo, w.e_lo);
  const bool two_channel = e_lo > pk.v_right;
  const double k_min = two_channel ? std::sqrt(e_lo - pk.v_right)
                                   : std::sqrt(e_lo - pk.v_left);
  const double v_min = 2.0 * k_min;
  const double reach = r_max + std::abs(window_shift);
  const double t1 = (reach + 8.0 * pk.spread) / v_min;
  const double sigma_t = std::sqrt(pk.spread * pk.spread + (t1 / pk.spread) * (t1 / pk.spread));
  return (reach + 5.0 * sigma_t) / v_min + 5.0;
}

}  // namespace

double moller_horizon(double spread, double v_min, double t_max) {
  double t = (8.0 * spread + 10.0) / v_min;
  for (int it = 0; it < 4; ++it) {
    const double sigma = std::sqrt(spread * spread + (t / spread) * (t / spread));
    t = (8.0 * sigma + 10.0) / v_min;
  }
  return std::max({0.5 * t_max, t, 10.0});
}

double auto_t_asym(const AdmissiblePacket& phi, double t_max) {
  return moller_horizon(phi.spread, slowest_channel_speed(phi), t_max);
}

SojournCurve sojourn_times(const AdmissiblePacket& phi, const Potential& pot,
                           const ScatteringData& data, const std::vector<double>& r_values,
                           const QuadratureSpec& quad, double window_shift) {
  for (size_t i = 0; i + 1 < r_values.size(); ++i)
    if (r_values[i + 1] <= r_values[i])
      throw std::invalid_argument("sojourn_times: r_values must be strictly increasing");

  SojournCurve curve;
  curve.r_values = r_values;
  curve.window_shift = window_shift;
  curve.t_max = quad.t_max > 0.0 ? quad.t_max : auto_t_max(phi, r_values.back(), window_shift);
  curve.dt = quad.dt_sample;

  std::vector<std::pair<double, double>> windows;
  for (double r : r_values) windows.emplace_back(-r + window_shift, r + window_shift);

  // free incoming reference: exact in-free evolution of phi
  const WindowedIntegral win_in = integrate_channel_window_masses(
      phi.state, phi.v_left, phi.v_right, -curve.t_max, curve.t_max, quad.dt_sample, windows,
      quad.tail_fraction);
  curve.t_in = win_in.values;
  curve.tail_in = win_in.tail_estimate;

  // free outgoing reference: exact out-free evolution of S phi
  const auto e_grid = data.energies;
  const TwoChannelSpectral in_rep =
      to_in_representation(phi.state, phi.v_left, phi.v_right, e_grid);
  const TwoChannelSpectral out_rep = apply_s(in_rep, data);
  const SpatialState s_phi = from_out_representation(out_rep, phi.state.grid());
  const WindowedIntegral win_out = integrate_channel_window_masses(
      s_phi, phi.v_right, phi.v_left, -curve.t_max, curve.t_max, quad.dt_sample, windows,
      quad.tail_fraction);
  curve.t_out = win_out.values;
  curve.tail_out = win_out.tail_estimate;

  // interacting state: Moller approximant under the full evolution
  SplitStepOptions sso;
  sso.dt = quad.split_dt;
  const double t_asym = quad.t_asym > 0.0 ? quad.t_asym : auto_t_asym(phi, curve.t_max);
  const MollerResult moller = moller_minus(phi, pot, t_asym, sso, quad.moller_defect_tol);
  curve.moller_defect = moller.cauchy_defect;

  const SpatialGrid& grid = phi.state.grid();
  std::vector<double> full(windows.size(), 0.0);
  std::vector<double> last_mass(windows.size(), 0.0);
  std::vector<double> ts, ws, prefix(grid.n, 0.0);
  double t_prev = 0.0;
  bool first = true;
  auto accumulate = [&](double t, const std::vector<cplx>& vals) {
    // trapezoid in t, assembled incrementally along the evolution
    for (int j = 1; j < grid.n; ++j)
      prefix[j] = prefix[j - 1] + 0.5 * (std::norm(vals[j - 1]) + std::norm(vals[j])) * grid.dx;
    const double h = first ? 0.0 : std::abs(t - t_prev);
    double widest = 0.0;
    for (size_t w = 0; w < windows.size(); ++w) {
      const double m = mass_from_prefix(grid, prefix, vals, windows[w].first, windows[w].second);
      if (!first) full[w] += 0.5 * h * (m + last_mass[w]);
      last_mass[w] = m;
      widest = std::max(widest, m);
    }
    ts.push_back(std::abs(t));
    ws.push_back(widest);
    t_prev = t;
    first = false;
  };
  // backward half: integrate masses from 0 down to -t_max
  evolve_full_observed(moller.state, pot, 0.0, -curve.t_max, sso, accumulate, quad.dt_sample);
  // forward half: restart the trapezoid chain at t = 0
  first = true;
  evolve_full_observed(moller.state, pot, 0.0, curve.t_max, sso, accumulate, quad.dt_sample);
  curve.t_full = full;
  curve.tail_full = tail_from_samples(ts, ws, quad.tail_fraction);

  const double tail_worst = std::max({curve.tail_full, curve.tail_in, curve.tail_out});
  if (tail_worst > quad.tail_tol)
    throw CertificateError("sojourn_times: time-integral tail estimate " +
                           format_g17(tail_worst) + " above tolerance (horizon too short)");
  return curve;
}

std::string sojourn_csv(const SojournCurve& c) {
  std::ostringstream os;
  os << "R,T_full,T_in,T_out\n";
  for (size_t i = 0; i < c.r_values.size(); ++i)
    os << format_g17(c.r_values[i]) << "," << format_g17(c.t_full[i]) << ","
       << format_g17(c.t_in[i]) << "," << format_g17(c.t_out[i]) << "\n";
  return os.str();
}

std::string sojourn_metadata_json(const SojournCurve& c) {
  nlohmann::json j;
  j["dt_sample"] = c.dt;
  j["t_max"] = c.t_max;
  j["tail_full"] = c.tail_full;
  j["tail_in"] = c.tail_in;
  j["tail_out"] = c.tail_out;
  j["moller_defect"] = c.moller_defect;
  j["window_shift"] = c.window_shift;
  return j.dump(2);
}

}  // namespace stepdelay
