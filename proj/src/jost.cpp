#include "stepdelay/jost.hpp"

#include <cmath>

namespace stepdelay {

cplx channel_wavenumber(double energy, double channel_v) {
  const double q = energy - channel_v;
  if (q >= 0.0) return {std::sqrt(q), 0.0};
  return {0.0, std::sqrt(-q)};
}

double threshold_exclusion_radius(const Potential& pot, const StationaryOptions& opts) {
  if (opts.threshold_exclusion > 0.0) return opts.threshold_exclusion;
  const double gap = pot.v_right - pot.v_left;
  return gap > 0.0 ? 0.05 * gap : 0.05;
}

namespace {

void check_energy_admissible(const Potential& pot, double energy,
                             const StationaryOptions& opts) {
  const double excl = threshold_exclusion_radius(pot, opts);
  if (energy <= pot.v_left + excl)
    throw std::invalid_argument("energy too close to (or below) the left threshold");
  if (std::abs(energy - pot.v_right) < excl)
    throw std::invalid_argument("energy inside the right-threshold exclusion radius");
}

// Potential evaluation for a cell [a,b]: values landing exactly on a
// declared breakpoint are nudged into the cell interior so piecewise
// profiles keep one-sided limits consistent within the cell.
struct CellPotential {
  const Potential& pot;
  std::vector<double> bps;
  double a = 0.0, b = 0.0;

  explicit CellPotential(const Potential& p) : pot(p), bps(p.breakpoints()) {}

  double operator()(double x) const {
    if (!bps.empty()) {
      for (double bp : bps) {
        if (std::abs(x - bp) < 1e-12 * (1.0 + std::abs(bp))) {
          const double mid = 0.5 * (a + b);
          return pot(bp + (mid > bp ? 1e-9 : -1e-9));
        }
      }
    }
    return pot(x);
  }
};

JostSolution integrate_jost(const Potential& pot, double energy, const StationaryGrid& grid,
                            const StationaryOptions& opts, Side side) {
  JostSolution out;
  out.energy = energy;
  out.side = side;
  out.grid = grid;
  out.values.resize(grid.n);
  out.derivative.resize(grid.n);

  CellPotential vc(pot);
  auto rhs = [&](double x, const OdeState& y, OdeState& dy) {
    dy[0] = y[1];
    dy[1] = (vc(x) - energy) * y[0];
  };

  const cplx i1{0.0, 1.0};
  if (side == Side::Right) {
    out.k = channel_wavenumber(energy, pot.v_right);
    const double xm = grid.x_max();
    const double tail = pot.tail_integral_right(xm) / std::abs(out.k);
    if (tail > opts.cutoff_budget)
      throw std::invalid_argument("stationary grid too short on the right for declared decay");
    OdeState y{std::exp(i1 * out.k * xm), i1 * out.k * std::exp(i1 * out.k * xm)};
    out.values[grid.n - 1] = y[0];
    out.derivative[grid.n - 1] = y[1];
    for (int j = grid.n - 1; j > 0; --j) {
      vc.a = grid.x(j - 1);
      vc.b = grid.x(j);
      y = dp45_integrate(rhs, grid.x(j), grid.x(j - 1), y, opts.ode);
      out.values[j - 1] = y[0];
      out.derivative[j - 1] = y[1];
    }
  } else {
    out.k = channel_wavenumber(energy, pot.v_left);
    const double x0 = grid.x_min;
    const double tail = pot.tail_integral_left(x0) / std::abs(out.k);
    if (tail > opts.cutoff_budget)
      throw std::invalid_argument("stationary grid too short on the left for declared decay");
    OdeState y{std::exp(-i1 * out.k * x0), -i1 * out.k * std::exp(-i1 * out.k * x0)};
    out.values[0] = y[0];
    out.derivative[0] = y[1];
    for (int j = 0; j + 1 < grid.n; ++j) {
      vc.a = grid.x(j);
      vc.b = grid.x(j + 1);
      y = dp45_integrate(rhs, grid.x(j), grid.x(j + 1), y, opts.ode);
      out.values[j + 1] = y[0];
      out.derivative[j + 1] = y[1];
    }
  }
  return out;
}

}  // namespace

StationaryGrid make_stationary_grid(const Potential& pot, double energy,
                                    const StationaryOptions& opts) {
  const double kl = std::abs(channel_wavenumber(energy, pot.v_left));
  const double kr = std::abs(channel_wavenumber(energy, pot.v_right));
  const double kmin = std::min(kl, kr);
  const double budget = opts.cutoff_budget * kmin;

  auto grow = [&](auto tail) {
    double x = opts.span_min;
    while (tail(x) > budget && x < 1e4) x *= 1.25;
    return x;
  };
  const double xr = grow([&](double x) { return pot.tail_integral_right(x); });
  const double xl = grow([&](double x) { return pot.tail_integral_left(-x); });

  const double half = std::max({xr, xl, opts.span_min});
  const int m = static_cast<int>(std::ceil(half / opts.dx));
  StationaryGrid g;
  g.dx = opts.dx;
  g.n = 2 * m + 1;
  g.x_min = -m * opts.dx;  // node at x = 0
  return g;
}

JostSolution jost_right(const Potential& pot, double energy, const StationaryGrid& grid,
                        const StationaryOptions& opts) {
  check_energy_admissible(pot, energy, opts);
  return integrate_jost(pot, energy, grid, opts, Side::Right);
}

JostSolution jost_left(const Potential& pot, double energy, const StationaryGrid& grid,
                       const StationaryOptions& opts) {
  check_energy_admissible(pot, energy, opts);
  return integrate_jost(pot, energy, grid, opts, Side::Left);
}

WronskianResult wronskian(const JostSolution& f, const JostSolution& g) {
  if (f.energy != g.energy) throw std::invalid_argument("wronskian: energy mismatch");
  if (!f.grid.same_as(g.grid)) throw std::invalid_argument("wronskian: grid mismatch");
  std::vector<cplx> w(f.grid.n);
  for (int j = 0; j < f.grid.n; ++j)
    w[j] = f.values[j] * g.derivative[j] - g.values[j] * f.derivative[j];
  WronskianResult out;
  out.value = median(w);
  for (const cplx& wj : w) out.deviation = std::max(out.deviation, std::abs(wj - out.value));
  return out;
}

double schrodinger_residual(const Potential& pot, const JostSolution& f) {
  const auto& g = f.grid;
  double worst = 0.0;
  for (int j = 1; j + 1 < g.n; ++j) {
    const double x = g.x(j);
    bool near_bp = false;
    for (double bp : pot.breakpoints())
      if (std::abs(x - bp) <= g.dx) near_bp = true;
    if (near_bp) continue;  // second difference is meaningless across a jump
    const cplx fxx = (f.values[j + 1] - 2.0 * f.values[j] + f.values[j - 1]) / (g.dx * g.dx);
    worst = std::max(worst, std::abs(-fxx + (pot(x) - f.energy) * f.values[j]));
  }
  return worst;
}

}  // namespace stepdelay
