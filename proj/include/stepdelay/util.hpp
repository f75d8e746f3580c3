#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <string>
#include <vector>

namespace stepdelay {

using cplx = std::complex<double>;

// Raised when a numerical quality certificate (Cauchy defect, leakage,
// tail estimate, plateau detection, ...) fails. CLI maps this to exit 3.
class CertificateError : public std::runtime_error {
 public:
  explicit CertificateError(const std::string& what) : std::runtime_error(what) {}
};

// Raised on malformed configuration documents. CLI maps this to exit 2.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

inline std::vector<double> linspace(double a, double b, int n) {
  if (n < 2) throw std::invalid_argument("linspace: need n >= 2");
  std::vector<double> v(n);
  const double h = (b - a) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = a + h * i;
  v.back() = b;
  return v;
}

inline std::vector<double> geomspace(double a, double b, int n) {
  if (n < 2) throw std::invalid_argument("geomspace: need n >= 2");
  if (a <= 0 || b <= 0) throw std::invalid_argument("geomspace: endpoints must be positive");
  std::vector<double> v(n);
  const double r = std::log(b / a) / (n - 1);
  for (int i = 0; i < n; ++i) v[i] = a * std::exp(r * i);
  v.back() = b;
  return v;
}

// Composite trapezoid on an arbitrary strictly increasing grid.
template <typename T>
T trapezoid(const std::vector<double>& x, const std::vector<T>& f) {
  if (x.size() != f.size() || x.size() < 2)
    throw std::invalid_argument("trapezoid: mismatched or short input");
  T acc{};
  for (size_t i = 0; i + 1 < x.size(); ++i)
    acc += (f[i] + f[i + 1]) * (0.5 * (x[i + 1] - x[i]));
  return acc;
}

inline double median_inplace(std::vector<double>& v) {
  if (v.empty()) throw std::invalid_argument("median of empty set");
  const size_t m = v.size() / 2;
  std::nth_element(v.begin(), v.begin() + m, v.end());
  double hi = v[m];
  if (v.size() % 2 == 1) return hi;
  std::nth_element(v.begin(), v.begin() + m - 1, v.begin() + m);
  return 0.5 * (v[m - 1] + hi);
}

// Componentwise median of a set of complex samples.
inline cplx median(const std::vector<cplx>& w) {
  std::vector<double> re(w.size()), im(w.size());
  for (size_t i = 0; i < w.size(); ++i) {
    re[i] = w[i].real();
    im[i] = w[i].imag();
  }
  return {median_inplace(re), median_inplace(im)};
}

// 6-point Lagrange interpolation on a uniform grid. Values outside the
// grid evaluate to zero (spectral components vanish off their support).
inline cplx interp6_uniform(double x0, double dx, const std::vector<cplx>& f, double x) {
  const int n = static_cast<int>(f.size());
  if (n < 6) throw std::invalid_argument("interp6_uniform: need at least 6 samples");
  const double u = (x - x0) / dx;
  if (u < 0.0 || u > n - 1) return {0.0, 0.0};
  int i0 = static_cast<int>(std::floor(u)) - 2;
  i0 = std::clamp(i0, 0, n - 6);
  cplx acc{0.0, 0.0};
  for (int j = 0; j < 6; ++j) {
    double lj = 1.0;
    for (int m = 0; m < 6; ++m) {
      if (m == j) continue;
      lj *= (u - (i0 + m)) / double(j - m);
    }
    acc += lj * f[i0 + j];
  }
  return acc;
}

struct LinearFit {
  double slope = 0.0;
  double intercept = 0.0;
  double slope_ci = 0.0;  // ~95% half-width from residual scatter
};

inline LinearFit linear_fit(const std::vector<double>& x, const std::vector<double>& y) {
  const size_t n = x.size();
  if (n != y.size() || n < 2) throw std::invalid_argument("linear_fit: need >= 2 points");
  double sx = 0, sy = 0;
  for (size_t i = 0; i < n; ++i) {
    sx += x[i];
    sy += y[i];
  }
  const double mx = sx / n, my = sy / n;
  double sxx = 0, sxy = 0;
  for (size_t i = 0; i < n; ++i) {
    sxx += (x[i] - mx) * (x[i] - mx);
    sxy += (x[i] - mx) * (y[i] - my);
  }
  if (sxx == 0) throw std::invalid_argument("linear_fit: degenerate abscissae");
  LinearFit out;
  out.slope = sxy / sxx;
  out.intercept = my - out.slope * mx;
  if (n > 2) {
    double ss = 0;
    for (size_t i = 0; i < n; ++i) {
      const double r = y[i] - (out.intercept + out.slope * x[i]);
      ss += r * r;
    }
    out.slope_ci = 2.0 * std::sqrt(ss / double(n - 2) / sxx);
  }
  return out;
}

// FNV-1a, used for the run MANIFEST checksums.
inline std::uint64_t fnv1a(const std::string& data) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : data) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline std::string format_g17(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string hex64(std::uint64_t v) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace stepdelay
