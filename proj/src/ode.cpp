#include "stepdelay/ode.hpp"

#include <cmath>

namespace stepdelay {

namespace {

inline double err_norm(const OdeState& e, const OdeState& y0, const OdeState& y1,
                       double atol, double rtol) {
  double acc = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double sc = atol + rtol * std::max(std::abs(y0[i]), std::abs(y1[i]));
    const double r = std::abs(e[i]) / sc;
    acc += r * r;
  }
  return std::sqrt(0.5 * acc);
}

}  // namespace

OdeState dp45_integrate(const std::function<void(double, const OdeState&, OdeState&)>& rhs,
                        double x0, double x1, OdeState y, const OdeOptions& opts) {
  static constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
  static constexpr double a21 = 1.0 / 5;
  static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
  static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
  static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561,
                          a54 = -212.0 / 729;
  static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                          a64 = 49.0 / 176, a65 = -5103.0 / 18656;
  static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                          b5 = -2187.0 / 6784, b6 = 11.0 / 84;
  // difference between 5th and 4th order weights
  static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                          e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;

  const double span = x1 - x0;
  if (span == 0.0) return y;
  const double dir = span > 0 ? 1.0 : -1.0;
  double x = x0;
  double h = opts.h_init != 0.0 ? std::abs(opts.h_init) : std::abs(span) / 16.0;
  h = std::min(h, std::abs(span));

  OdeState k1, k2, k3, k4, k5, k6, k7, yt, y5;
  rhs(x, y, k1);

  for (int step = 0; step < opts.max_steps; ++step) {
    if ((x - x1) * dir >= 0.0) return y;
    h = std::min(h, std::abs(x1 - x));
    const double hs = dir * h;

    for (int i = 0; i < 2; ++i) yt[i] = y[i] + hs * (a21 * k1[i]);
    rhs(x + c2 * hs, yt, k2);
    for (int i = 0; i < 2; ++i) yt[i] = y[i] + hs * (a31 * k1[i] + a32 * k2[i]);
    rhs(x + c3 * hs, yt, k3);
    for (int i = 0; i < 2; ++i) yt[i] = y[i] + hs * (a41 * k1[i] + a42 * k2[i] + a43 * k3[i]);
    rhs(x + c4 * hs, yt, k4);
    for (int i = 0; i < 2; ++i)
      yt[i] = y[i] + hs * (a51 * k1[i] + a52 * k2[i] + a53 * k3[i] + a54 * k4[i]);
    rhs(x + c5 * hs, yt, k5);
    for (int i = 0; i < 2; ++i)
      yt[i] = y[i] + hs * (a61 * k1[i] + a62 * k2[i] + a63 * k3[i] + a64 * k4[i] + a65 * k5[i]);
    rhs(x + hs, yt, k6);
    for (int i = 0; i < 2; ++i)
      y5[i] = y[i] + hs * (b1 * k1[i] + b3 * k3[i] + b4 * k4[i] + b5 * k5[i] + b6 * k6[i]);
    rhs(x + hs, y5, k7);

    OdeState err;
    for (int i = 0; i < 2; ++i)
      err[i] = hs * (e1 * k1[i] + e3 * k3[i] + e4 * k4[i] + e5 * k5[i] + e6 * k6[i] + e7 * k7[i]);

    const double en = err_norm(err, y, y5, opts.atol, opts.rtol);
    if (en <= 1.0) {
      x += hs;
      y = y5;
      k1 = k7;  // FSAL
    }
    const double fac = en > 0.0 ? 0.9 * std::pow(en, -0.2) : 5.0;
    h *= std::clamp(fac, 0.2, 5.0);
    if (h < 1e-14 * (std::abs(x) + 1.0))
      throw CertificateError("dp45: step size underflow");
  }
  throw CertificateError("dp45: max step count exceeded");
}

}  // namespace stepdelay
