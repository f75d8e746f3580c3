#include "stepdelay/spectral.hpp"

#include <cmath>

namespace stepdelay {

namespace {

void check_e_grid(const std::vector<double>& e, double v_left, double v_right, double excl) {
  if (e.size() < 8) throw std::invalid_argument("energy grid too short");
  const double de = e[1] - e[0];
  for (size_t i = 0; i + 1 < e.size(); ++i)
    if (std::abs(e[i + 1] - e[i] - de) > 1e-9 * de)
      throw std::invalid_argument("energy grid must be uniform");
  for (double ei : e) {
    if (ei - v_left < excl)
      throw std::invalid_argument("energy grid touches the left threshold");
    if (std::abs(ei - v_right) < excl)
      throw std::invalid_argument("energy grid touches the right threshold");
  }
}

}  // namespace

double TwoChannelSpectral::norm() const {
  std::vector<double> dens(e_grid.size());
  for (size_t i = 0; i < e_grid.size(); ++i)
    dens[i] = std::norm(comp_l[i]) + std::norm(comp_r[i]);
  return std::sqrt(trapezoid(e_grid, dens));
}

TwoChannelSpectral to_in_representation(const SpatialState& phi, double v_left, double v_right,
                                        const std::vector<double>& e_grid) {
  const double excl = 0.0;  // caller-chosen grid; only basic sanity here
  check_e_grid(e_grid, v_left, v_right, excl);
  TwoChannelSpectral out;
  out.e_grid = e_grid;
  out.rep = Rep::In;
  out.v_left = v_left;
  out.v_right = v_right;
  out.comp_l.resize(e_grid.size());
  out.comp_r.resize(e_grid.size());
  for (size_t i = 0; i < e_grid.size(); ++i) {
    const double e = e_grid[i];
    const double kl = std::sqrt(e - v_left);
    out.comp_l[i] = phi.momentum_amplitude(kl) / std::sqrt(2.0 * kl);
    if (e > v_right) {
      const double kr = std::sqrt(e - v_right);
      out.comp_r[i] = phi.momentum_amplitude(-kr) / std::sqrt(2.0 * kr);
    } else {
      out.comp_r[i] = 0.0;
    }
  }
  return out;
}

TwoChannelSpectral to_out_representation(const SpatialState& phi, double v_left, double v_right,
                                         const std::vector<double>& e_grid) {
  check_e_grid(e_grid, v_left, v_right, 0.0);
  TwoChannelSpectral out;
  out.e_grid = e_grid;
  out.rep = Rep::Out;
  out.v_left = v_left;
  out.v_right = v_right;
  out.comp_l.resize(e_grid.size());
  out.comp_r.resize(e_grid.size());
  for (size_t i = 0; i < e_grid.size(); ++i) {
    const double e = e_grid[i];
    const double kl = std::sqrt(e - v_left);
    out.comp_l[i] = phi.momentum_amplitude(-kl) / std::sqrt(2.0 * kl);
    if (e > v_right) {
      const double kr = std::sqrt(e - v_right);
      out.comp_r[i] = phi.momentum_amplitude(kr) / std::sqrt(2.0 * kr);
    } else {
      out.comp_r[i] = 0.0;
    }
  }
  return out;
}

SpatialState from_out_representation(const TwoChannelSpectral& spec, const SpatialGrid& grid) {
  if (spec.rep != Rep::Out)
    throw std::invalid_argument("from_out_representation: representation mismatch");
  const double e0 = spec.e_grid.front();
  const double de = spec.de();
  std::vector<cplx> mom(grid.n, cplx{0.0, 0.0});
  for (int k = 0; k < grid.n; ++k) {
    const double p = grid.p(k);
    if (p > 0.0) {
      const double e = p * p + spec.v_right;
      mom[k] = std::sqrt(2.0 * p) * interp6_uniform(e0, de, spec.comp_r, e);
    } else if (p < 0.0) {
      const double e = p * p + spec.v_left;
      mom[k] = std::sqrt(-2.0 * p) * interp6_uniform(e0, de, spec.comp_l, e);
    }
  }
  return SpatialState::from_momentum(grid, std::move(mom));
}

TwoChannelSpectral apply_s(const TwoChannelSpectral& phi_in, const ScatteringData& data) {
  if (phi_in.rep != Rep::In) throw std::invalid_argument("apply_s: expected in-representation");
  if (data.energies.size() != phi_in.e_grid.size())
    throw std::invalid_argument("apply_s: scattering data not sampled on the packet grid");
  for (size_t i = 0; i < data.energies.size(); ++i)
    if (std::abs(data.energies[i] - phi_in.e_grid[i]) > 1e-9)
      throw std::invalid_argument("apply_s: scattering data not sampled on the packet grid");

  TwoChannelSpectral out;
  out.e_grid = phi_in.e_grid;
  out.rep = Rep::Out;
  out.v_left = phi_in.v_left;
  out.v_right = phi_in.v_right;
  out.comp_l.resize(phi_in.e_grid.size());
  out.comp_r.resize(phi_in.e_grid.size());
  for (size_t i = 0; i < phi_in.e_grid.size(); ++i) {
    const SMatrixPoint& s = data.s[i];
    if (s.regime == Regime::TwoChannel) {
      out.comp_r[i] = s.s_rl * phi_in.comp_l[i] + s.s_rr * phi_in.comp_r[i];
      out.comp_l[i] = s.s_ll * phi_in.comp_l[i] + s.s_lr * phi_in.comp_r[i];
    } else {
      out.comp_r[i] = 0.0;
      out.comp_l[i] = s.s_ll * phi_in.comp_l[i];
    }
  }
  return out;
}

double smooth_ramp(double u) {
  if (u <= 0.0) return 0.0;
  if (u >= 1.0) return 1.0;
  const double g0 = std::exp(-1.0 / u);
  const double g1 = std::exp(-1.0 / (1.0 - u));
  return g0 / (g0 + g1);
}

namespace {

double window_profile(double e, const std::vector<EnergyWindow>& windows, double ramp_fraction) {
  double w = 0.0;
  for (const auto& win : windows) {
    const double m = ramp_fraction * (win.e_hi - win.e_lo);
    if (e <= win.e_lo || e >= win.e_hi) continue;
    const double up = smooth_ramp((e - win.e_lo) / m);
    const double down = smooth_ramp((win.e_hi - e) / m);
    w = std::max(w, up * down);
  }
  return w;
}

}  // namespace

std::vector<double> AdmissiblePacket::default_e_grid(int n_points) const {
  double lo = windows.front().e_lo;
  double hi = windows.front().e_hi;
  for (const auto& w : windows) {
    lo = std::min(lo, w.e_lo);
    hi = std::max(hi, w.e_hi);
  }
  const double pad = 0.03 * (hi - lo);
  return linspace(lo - pad, hi + pad, n_points);
}

AdmissiblePacket make_admissible_packet(double center_x, double center_p, double spread,
                                        const std::vector<EnergyWindow>& windows,
                                        double v_left, double v_right, const SpatialGrid& grid,
                                        const PacketOptions& opts) {
  if (windows.empty()) throw std::invalid_argument("packet needs at least one energy window");
  if (!(spread > 0.0)) throw std::invalid_argument("packet spread must be positive");
  double margin = opts.threshold_margin;
  if (margin <= 0.0) {
    const double gap = v_right - v_left;
    margin = gap > 0.0 ? 0.05 * gap : 0.05;
  }
  for (const auto& w : windows) {
    if (!(w.e_lo < w.e_hi)) throw std::invalid_argument("empty energy window");
    const bool below = w.e_hi < v_right;
    const bool above = w.e_lo > v_right;
    if (!below && !above)
      throw std::invalid_argument("energy window must lie on one side of v_right");
    if (w.e_lo - v_left < margin || (below && v_right - w.e_hi < margin) ||
        (above && w.e_lo - v_right < margin))
      throw std::invalid_argument("energy window touches a threshold");
  }

  // Gaussian seed times C-infinity spectral window, assembled in momentum
  // space on the FFT ladder; p <= 0 components vanish identically.
  std::vector<cplx> mom(grid.n, cplx{0.0, 0.0});
  for (int k = 0; k < grid.n; ++k) {
    const double p = grid.p(k);
    if (p <= 0.0) continue;
    const double e = p * p + v_left;
    const double w = window_profile(e, windows, opts.ramp_fraction);
    if (w == 0.0) continue;
    const double gauss = std::exp(-spread * spread * (p - center_p) * (p - center_p));
    const double phase = -p * center_x;
    mom[k] = w * gauss * cplx(std::cos(phase), std::sin(phase));
  }
  SpatialState st = SpatialState::from_momentum(grid, std::move(mom));
  const double nrm = st.norm();
  if (nrm < 1e-12)
    throw std::invalid_argument(
        "packet construction produced an empty state (spread too small for the window?)");
  std::vector<cplx> scaled(st.momentum_values());
  for (auto& z : scaled) z /= nrm;
  st = SpatialState::from_momentum(grid, std::move(scaled));

  AdmissiblePacket pk;
  pk.state = st;
  pk.windows = windows;
  pk.theta = opts.theta;
  pk.v_left = v_left;
  pk.v_right = v_right;
  pk.center_p = center_p;
  pk.spread = spread;

  // spectral leakage: in-representation mass outside the declared windows
  const auto e_grid = pk.default_e_grid(1024);
  const auto in_rep = to_in_representation(st, v_left, v_right, e_grid);
  double outside = 0.0, total = 0.0;
  for (size_t i = 0; i < e_grid.size(); ++i) {
    const double dens = std::norm(in_rep.comp_l[i]) + std::norm(in_rep.comp_r[i]);
    total += dens;
    if (window_profile(e_grid[i], windows, 1e-9) == 0.0) outside += dens;
  }
  pk.leakage = total > 0.0 ? outside / total : 0.0;
  if (pk.leakage > opts.leakage_tol)
    throw CertificateError("packet spectral leakage above tolerance");

  // positive-momentum support
  double peak = 0.0;
  for (const auto& z : st.momentum_values()) peak = std::max(peak, std::abs(z));
  for (int k = 0; k < grid.n; ++k)
    if (grid.p(k) <= 0.0 && std::abs(st.momentum_values()[k]) > opts.p_positive_tol * peak)
      throw CertificateError("packet has residual negative-momentum amplitude");

  // weighted norm and its off-box tail bound
  double wn = 0.0;
  for (int j = 0; j < grid.n; ++j) {
    const double w = std::pow(1.0 + std::abs(grid.x(j)), 2.0 * pk.theta);
    wn += w * std::norm(st.values()[j]) * grid.dx;
  }
  pk.weighted_norm_sq = wn;
  const double edge_density =
      std::max(std::norm(st.values().front()), std::norm(st.values().back()));
  pk.weight_tail_bound =
      edge_density * std::pow(1.0 + 0.5 * grid.length(), 2.0 * pk.theta) * grid.length();
  return pk;
}

OutgoingParts split_outgoing(const TwoChannelSpectral& out_spec, const SpatialGrid& grid) {
  if (out_spec.rep != Rep::Out)
    throw std::invalid_argument("split_outgoing: expected out-representation");
  TwoChannelSpectral only_r = out_spec;
  std::fill(only_r.comp_l.begin(), only_r.comp_l.end(), cplx{0.0, 0.0});
  TwoChannelSpectral only_l = out_spec;
  std::fill(only_l.comp_r.begin(), only_l.comp_r.end(), cplx{0.0, 0.0});
  OutgoingParts parts{from_out_representation(only_r, grid),
                      from_out_representation(only_l, grid)};
  return parts;
}

}  // namespace stepdelay
