#pragma once

#include <vector>

#include "stepdelay/fourier.hpp"
#include "stepdelay/smatrix.hpp"

namespace stepdelay {

enum class Rep { In, Out };

// Two-component function of energy diagonalizing the free in/out dynamics.
// In-representation of phi = phi_+ + phi_-:
//   comp_l(E) = [4(E-v_l)]^{-1/4} phihat_+(+sqrt(E-v_l)),   E > v_l
//   comp_r(E) = [4(E-v_r)]^{-1/4} phihat_-(-sqrt(E-v_r)),   E > v_r (else 0)
// Out-representation swaps the roles of phihat_+/phihat_-:
//   comp_r(E) = [4(E-v_r)]^{-1/4} phihat_+(+sqrt(E-v_r)),   E > v_r (else 0)
//   comp_l(E) = [4(E-v_l)]^{-1/4} phihat_-(-sqrt(E-v_l)).
struct TwoChannelSpectral {
  std::vector<double> e_grid;  // uniform, strictly inside (v_left, inf)
  std::vector<cplx> comp_l;
  std::vector<cplx> comp_r;
  Rep rep = Rep::In;
  double v_left = 0.0;
  double v_right = 0.0;

  double norm() const;  // sqrt(int (|comp_l|^2 + |comp_r|^2) dE)
  double de() const { return e_grid[1] - e_grid[0]; }
};

TwoChannelSpectral to_in_representation(const SpatialState& phi, double v_left, double v_right,
                                        const std::vector<double>& e_grid);
TwoChannelSpectral to_out_representation(const SpatialState& phi, double v_left, double v_right,
                                         const std::vector<double>& e_grid);
SpatialState from_out_representation(const TwoChannelSpectral& spec, const SpatialGrid& grid);

// (S phi)^out(E) = S(E) phi^in(E); requires data sampled on the packet grid.
TwoChannelSpectral apply_s(const TwoChannelSpectral& phi_in, const ScatteringData& data);

// Energy window [e_lo, e_hi] (with respect to H_l).
struct EnergyWindow {
  double e_lo = 0.0;
  double e_hi = 0.0;
};

// C-infinity ramp with exact support: 0 for u <= 0, 1 for u >= 1.
double smooth_ramp(double u);

struct PacketOptions {
  double ramp_fraction = 0.2;      // window edge width / window width
  double leakage_tol = 1e-6;       // norm fraction allowed outside the windows
  double p_positive_tol = 1e-12;   // |phihat(p<=0)| / peak
  double threshold_margin = 0.0;   // 0 = auto (threshold exclusion radius)
  double theta = 5.0;              // (1+|x|)^theta weight exponent
};

// Positive-momentum wave packet with energy support (w.r.t. H_l) in the
// declared windows and (1+|x|)^theta spatial decay.
struct AdmissiblePacket {
  SpatialState state;
  std::vector<EnergyWindow> windows;
  double theta = 5.0;
  double v_left = 0.0;
  double v_right = 0.0;
  double weighted_norm_sq = 0.0;  // int (1+|x|)^{2 theta} |phi|^2 dx on the box
  double weight_tail_bound = 0.0;
  double leakage = 0.0;

  double center_p = 0.0;
  double spread = 0.0;
  double natural_time() const { return spread / (2.0 * center_p); }

  // default energy grid covering the windows with margin
  std::vector<double> default_e_grid(int n_points) const;
};

AdmissiblePacket make_admissible_packet(double center_x, double center_p, double spread,
                                        const std::vector<EnergyWindow>& windows,
                                        double v_left, double v_right, const SpatialGrid& grid,
                                        const PacketOptions& opts = {});

// Splits an out-representation into its transmitted (H_+, comp_r) and
// reflected (H_-, comp_l) spatial parts.
struct OutgoingParts {
  SpatialState transmitted;  // S_rl phi
  SpatialState reflected;    // S_ll phi
};
OutgoingParts split_outgoing(const TwoChannelSpectral& out_spec, const SpatialGrid& grid);

}  // namespace stepdelay
