#pragma once

#include <array>
#include <functional>

#include "stepdelay/util.hpp"

namespace stepdelay {

// State (f, f') of the stationary equation f'' = (V(x) - E) f.
using OdeState = std::array<cplx, 2>;

struct OdeOptions {
  double rtol = 1e-11;
  double atol = 1e-13;
  double h_init = 0.0;  // 0 = auto
  int max_steps = 2000000;
};

// Adaptive Dormand-Prince 5(4) for the two-component complex system
// y' = rhs(x, y). Integrates from x0 to x1 (either direction) and returns
// the state at x1. rhs must be smooth on the open interval (x0, x1).
OdeState dp45_integrate(const std::function<void(double, const OdeState&, OdeState&)>& rhs,
                        double x0, double x1, OdeState y, const OdeOptions& opts = {});

}  // namespace stepdelay
