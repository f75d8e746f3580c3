#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stepdelay/dynamics.hpp"

namespace stepdelay {

struct LocalDelays {
  std::vector<double> r_values;
  std::vector<double> tau_in;   // T_full - T_in
  std::vector<double> tau_out;  // T_full - T_out
  std::vector<double> tau_sym;  // average
};

LocalDelays local_time_delays(const SojournCurve& curve);

// <phi | T phi> = int conj(phi_in) T(E) phi_in dE; the imaginary residue of
// the quadrature must stay below the hermiticity diagnostic tolerance.
double ew_expectation(const TwoChannelSpectral& phi_in, const ScatteringData& data,
                      double hermiticity_tol = 1e-8);

// Linear-in-R growth rate of the unsymmetrized delays:
// (1/2) int |(S phi)^out_r(E)|^2 [ (E-v_r)^{-1/2} - (E-v_l)^{-1/2} ] dE.
double divergence_coefficient(const TwoChannelSpectral& phi_in, const ScatteringData& data);

LinearFit fit_divergence(const std::vector<double>& r_values, const std::vector<double>& tau,
                         double r_lo, double r_hi);

struct PlateauResult {
  double value = 0.0;
  double spread = 0.0;  // half of (max - min) over the plateau window
  int window_points = 0;
};

// Trailing-window plateau of tau_sym(R): the last >=5 points must agree to
// max(rel_tol * |value|, abs_floor).
PlateauResult detect_plateau(const std::vector<double>& r_values,
                             const std::vector<double>& values, double rel_tol = 0.02,
                             double abs_floor = 0.02);

struct SigmaCurves {
  std::vector<double> r_values;
  std::vector<double> sigma_in;
  std::vector<double> sigma_out;
  double tail = 0.0;
  double t_max = 0.0;
};

// Scattering-operator surrogates of the local delays, computed with exact
// channel propagators only:
//   sigma_in(R)  =  int_0^inf dt  [ ||chi_R S phi_t||^2 - ||chi_R phi_t||^2 ]
//   sigma_out(R) = -int_-inf^0 dt [ same integrand ].
SigmaCurves sigma_surrogates(const AdmissiblePacket& phi, const ScatteringData& data,
                             const std::vector<double>& r_values, const QuadratureSpec& quad = {});

struct LrDecomposition {
  double tau_left = 0.0;   // window (-R, 0)
  double tau_right = 0.0;  // window (0, R)
  double r_used = 0.0;
  double moller_defect = 0.0;
};

// Half-line decomposition of the global delay: tau = tau_left + tau_right,
//   tau_left : |psi_t|^2 - |e^{-iH_l t} phi|^2 - |e^{-iH_l t} S_ll phi|^2 over (-R, 0)
//   tau_right: |psi_t|^2 - |e^{-iH_r t} S_rl phi|^2                       over (0, R).
LrDecomposition lr_decomposition(const AdmissiblePacket& phi, const Potential& pot,
                                 const ScatteringData& data, double r,
                                 const QuadratureSpec& quad = {});

struct TranslatedDelay {
  double value = 0.0;            // tau^{x0}
  double reflection_term = 0.0;  // -x0 int |S_ll phi|^2 / k_l dE
  double transmission_term = 0.0;
  double x0 = 0.0;
};

// Global delay measured in the translated window [-R + x0, R + x0],
// evaluated spectrally through the translated scattering matrix
// e^{iPx0} S e^{-iPx0}.
TranslatedDelay translated_delay(const TwoChannelSpectral& phi_in, const ScatteringData& data,
                                 double x0, double hermiticity_tol = 1e-8);

struct ErrorBudget {
  double moller_defect = 0.0;
  double quadrature_tail = 0.0;
  double derivative_disagreement = 0.0;
  double plateau_spread = 0.0;
  double total() const {
    return moller_defect + quadrature_tail + derivative_disagreement + plateau_spread;
  }
};

struct TimeDelayReport {
  LocalDelays delays;
  SigmaCurves sigma;
  PlateauResult tau_plateau;
  PlateauResult sigma_plateau;
  double tau_ew = 0.0;
  double divergence_predicted = 0.0;
  LinearFit slope_in;
  LinearFit slope_out;
  double tau_left = 0.0;
  double tau_right = 0.0;
  ErrorBudget budget;
  std::optional<TranslatedDelay> translated;

  std::string to_json() const;
  std::string curves_csv() const;
};

}  // namespace stepdelay
