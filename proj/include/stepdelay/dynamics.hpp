#pragma once

#include <functional>
#include <vector>

#include "stepdelay/potential.hpp"
#include "stepdelay/spectral.hpp"

namespace stepdelay {

// Exact propagator of H_kappa = P^2 + kappa: momentum multiplier
// e^{-i (p^2 + kappa) t}.
SpatialState evolve_channel(const SpatialState& phi, double kappa, double t);

// Free in/out Hamiltonians H_in = H_l Pi_+ + H_r Pi_-, H_out = H_r Pi_+ + H_l Pi_-.
SpatialState evolve_in_free(const SpatialState& phi, double v_left, double v_right, double t);
SpatialState evolve_out_free(const SpatialState& phi, double v_left, double v_right, double t);

struct SplitStepOptions {
  double dt = 0.0;           // 0 = default 0.4 dx^2
  double leak_tol = 1e-6;    // max |psi|^2 mass allowed in the outer 2% of the box
  bool check_leakage = true;
};

// Strang splitting e^{-iV dt/2} e^{-iH0 dt} e^{-iV dt/2}; second order in dt,
// exactly norm-preserving. Works for either sign of t.
SpatialState evolve_full(const SpatialState& phi, const Potential& pot, double t,
                         const SplitStepOptions& opts = {});

// Stepwise split-step driver: calls observe(t, values) at t_start and then
// roughly every observe_every time units (every step when 0). Returns the
// final state.
using StepObserver = std::function<void(double, const std::vector<cplx>&)>;
SpatialState evolve_full_observed(const SpatialState& phi, const Potential& pot, double t_start,
                                  double t_end, const SplitStepOptions& opts,
                                  const StepObserver& observe, double observe_every = 0.0);

struct MollerResult {
  SpatialState state;          // finite-time approximation of Omega^- phi
  double cauchy_defect = 0.0;  // || Omega(T) phi - Omega(2T) phi ||
  double t_asym = 0.0;
};

// Omega^-(T) phi = e^{-iHT} e^{+i H_in T} phi evaluated at T = t_asym and
// 2 t_asym; returns the better approximant with the Cauchy defect between
// the two as its quality certificate.
MollerResult moller_minus(const AdmissiblePacket& phi, const Potential& pot, double t_asym,
                          const SplitStepOptions& opts = {}, double defect_tol = 1e-3);

// Time-quadrature controls for the sojourn integrals.
struct QuadratureSpec {
  double t_max = 0.0;        // 0 = auto from R range and packet velocity
  double t_asym = 0.0;       // Moller horizon; 0 = auto from packet width
  double dt_sample = 0.05;   // channel-evolution sampling step
  double tail_fraction = 0.2;    // trailing fraction of samples used for the tail fit
  double tail_tol = 1e-3;        // max tolerated tail estimate (absolute, time units)
  double moller_defect_tol = 1e-3;
  double split_dt = 0.0;     // 0 = default 0.4 dx^2
};

// Moller horizon heuristic: the backward-evolved packet must clear the
// scatterer by several spreading widths at the slowest channel speed;
// solved self-consistently since the width grows during the excursion.
double moller_horizon(double spread, double v_min, double t_max);
double auto_t_asym(const AdmissiblePacket& phi, double t_max);

struct SojournCurve {
  std::vector<double> r_values;
  std::vector<double> t_full;
  std::vector<double> t_in;
  std::vector<double> t_out;
  // quadrature metadata
  double dt = 0.0;
  double t_max = 0.0;
  double tail_full = 0.0;
  double tail_in = 0.0;
  double tail_out = 0.0;
  double moller_defect = 0.0;
  double window_shift = 0.0;  // windows are [-R + shift, R + shift]
};

// Sojourn times of the interacting state Omega^- phi and of the free
// incoming/outgoing comparison states over the windows [-R, R]:
//   T_full : e^{-iHt} Omega^- phi        (split-step)
//   T_in   : e^{-iH_in t} phi            (exact multiplier)
//   T_out  : e^{-iH_out t} S phi         (exact multiplier)
SojournCurve sojourn_times(const AdmissiblePacket& phi, const Potential& pot,
                           const ScatteringData& data, const std::vector<double>& r_values,
                           const QuadratureSpec& quad = {}, double window_shift = 0.0);

// Generic windowed time integral: integrates window masses of an evolving
// density over [t_lo, t_hi] for a family of windows, with a power-law tail
// correction fitted on the trailing samples.
struct WindowedIntegral {
  std::vector<double> values;  // per window
  double tail_estimate = 0.0;
};

using EvolutionSampler = std::function<SpatialState(double t)>;

WindowedIntegral integrate_window_masses(const EvolutionSampler& sample, double t_lo,
                                         double t_hi, double dt,
                                         const std::vector<std::pair<double, double>>& windows,
                                         double tail_fraction);

// Same integral for the exact two-channel multiplier evolution
// e^{-i(p^2 + v_pos)t} on p > 0, e^{-i(p^2 + v_neg)t} on p <= 0,
// marched incrementally in momentum space (one inverse FFT per sample).
WindowedIntegral integrate_channel_window_masses(
    const SpatialState& phi, double v_pos, double v_neg, double t_lo, double t_hi, double dt,
    const std::vector<std::pair<double, double>>& windows, double tail_fraction);

// One pass over [-t_max, t_max] with the positive-time and negative-time
// halves of the integral kept separate.
struct SplitWindowedIntegral {
  std::vector<double> positive;
  std::vector<double> negative;
  double tail_estimate = 0.0;
};

SplitWindowedIntegral integrate_channel_window_masses_split(
    const SpatialState& phi, double v_pos, double v_neg, double t_max, double dt,
    const std::vector<std::pair<double, double>>& windows, double tail_fraction);

std::string sojourn_csv(const SojournCurve& c);
std::string sojourn_metadata_json(const SojournCurve& c);

}  // namespace stepdelay
