#pragma once

#include <limits>
#include <string>
#include <vector>

#include "stepdelay/util.hpp"

namespace stepdelay {

// Units: hbar = 1, m = 1/2, so H = -d^2/dx^2 + V(x).

enum class PotentialKind { PureStep, SmoothStep, StepPlusBump, Custom };

std::string to_string(PotentialKind k);
PotentialKind potential_kind_from_string(const std::string& s);

// One polynomial piece of a custom profile, valid on [x_begin, x_end):
// V(x) = sum_k coeffs[k] * (x - x_begin)^k.
struct PolyPiece {
  double x_begin = 0.0;
  double x_end = 0.0;
  std::vector<double> coeffs;
  double eval(double x) const;
};

// Steplike potential with limits v_left <= v_right and declared decay rate
// |V(x) - V_asym| <= decay_M * (1+|x|)^(-decay_mu) on each side.
// decay_mu = +infinity marks profiles that match their limits exactly
// outside a finite interval (pure step, custom pieces).
class Potential {
 public:
  double v_left = 0.0;
  double v_right = 0.0;
  double decay_mu = std::numeric_limits<double>::infinity();
  double decay_M = 0.0;
  PotentialKind kind = PotentialKind::PureStep;

  // kind-specific parameters
  double width = 0.0;        // smooth-step / step-plus-bump tanh width
  double bump_height = 0.0;  // step-plus-bump
  double bump_center = 0.0;
  double bump_width = 0.0;
  std::vector<PolyPiece> pieces;  // custom

  double operator()(double x) const;

  // x positions where the profile may be discontinuous.
  std::vector<double> breakpoints() const;

  // Upper bounds on the Volterra tails  int_x^inf |V - v_right| dy  and
  // int_-inf^x |V - v_left| dy, used to size stationary cutoffs.
  double tail_integral_right(double x) const;
  double tail_integral_left(double x) const;

  // Checks the declared decay bounds by sampling; throws on violation.
  void check_invariants() const;

  bool is_symmetric_channels() const { return v_left == v_right; }
};

Potential make_pure_step(double v_left, double v_right);
Potential make_smooth_step(double v_left, double v_right, double width);
Potential make_step_plus_bump(double v_left, double v_right, double bump_height,
                              double bump_center, double bump_width);
Potential make_custom(double v_left, double v_right, std::vector<PolyPiece> pieces,
                      double decay_mu, double decay_M);

// Config document (JSON text) <-> Potential. Schema keys: kind, v_left,
// v_right, plus kind-specific width / bump_height / bump_center /
// bump_width / pieces / decay_mu / decay_M.
Potential load_potential_config(const std::string& document);
std::string serialize_potential(const Potential& p);

// Channel Hamiltonian constant: H_kappa = H_0 + kappa.
enum class Side { Left, Right };

struct ChannelConstants {
  double kappa = 0.0;
  Side side = Side::Left;
};

inline ChannelConstants channel_constants(const Potential& p, Side s) {
  return {s == Side::Left ? p.v_left : p.v_right, s};
}

}  // namespace stepdelay
