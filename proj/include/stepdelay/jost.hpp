#pragma once

#include <vector>

#include "stepdelay/ode.hpp"
#include "stepdelay/potential.hpp"
#include "stepdelay/util.hpp"

namespace stepdelay {

// Node grid for the stationary problem: x_j = x_min + j*dx, j = 0..n-1.
struct StationaryGrid {
  double x_min = 0.0;
  double dx = 0.0;
  int n = 0;
  double x(int j) const { return x_min + dx * j; }
  double x_max() const { return x(n - 1); }
  bool same_as(const StationaryGrid& o) const {
    return n == o.n && std::abs(x_min - o.x_min) < 1e-12 && std::abs(dx - o.dx) < 1e-12;
  }
};

struct StationaryOptions {
  double dx = 0.05;                  // output resolution
  double span_min = 10.0;            // minimal half-width of the solve box
  double cutoff_budget = 1e-8;       // Volterra tail / k target at the cutoffs
  double threshold_exclusion = 0.0;  // 0 = auto: 0.05 (v_r - v_l), or 0.05 if equal
  OdeOptions ode;
};

double threshold_exclusion_radius(const Potential& pot, const StationaryOptions& opts);

// Solve box sized so the Volterra tails beyond the cutoffs are below
// cutoff_budget * min(k_l, |k_r|); always contains a node at x = 0.
StationaryGrid make_stationary_grid(const Potential& pot, double energy,
                                    const StationaryOptions& opts);

// Solution of -f'' + (V - E) f = 0 matching a plane wave at one infinity:
// side = Right: f ~ e^{+i k_r x} (x -> +inf), side = Left: f ~ e^{-i k_l x}.
// For E below the channel threshold, k is positive imaginary.
struct JostSolution {
  double energy = 0.0;
  Side side = Side::Left;
  cplx k{0.0, 0.0};
  StationaryGrid grid;
  std::vector<cplx> values;
  std::vector<cplx> derivative;
};

cplx channel_wavenumber(double energy, double channel_v);

JostSolution jost_right(const Potential& pot, double energy, const StationaryGrid& grid,
                        const StationaryOptions& opts = {});
JostSolution jost_left(const Potential& pot, double energy, const StationaryGrid& grid,
                       const StationaryOptions& opts = {});

struct WronskianResult {
  cplx value{0.0, 0.0};   // median over grid nodes
  double deviation = 0.0;  // max |W(x_j) - median|
};

// W(f,g) = f g' - g f', x-independent for two solutions at the same energy.
WronskianResult wronskian(const JostSolution& f, const JostSolution& g);

// Max residual of the discrete stationary equation, |-f'' + (V-E)f|, using
// central second differences; scales as O(dx^2 k^4 |f|).
double schrodinger_residual(const Potential& pot, const JostSolution& f);

}  // namespace stepdelay
