#include "stepdelay/fourier.hpp"

#include <fftw3.h>

#include <cmath>
#include <map>
#include <mutex>

namespace stepdelay {

namespace {

std::mutex& plan_mutex() {
  static std::mutex m;
  return m;
}

fftw_plan get_plan(int n, int sign) {
  static std::map<std::pair<int, int>, fftw_plan> cache;
  std::lock_guard<std::mutex> lock(plan_mutex());
  auto key = std::make_pair(n, sign);
  auto it = cache.find(key);
  if (it != cache.end()) return it->second;
  std::vector<cplx> buf(n);
  fftw_plan p = fftw_plan_dft_1d(n, reinterpret_cast<fftw_complex*>(buf.data()),
                                 reinterpret_cast<fftw_complex*>(buf.data()),
                                 sign == -1 ? FFTW_FORWARD : FFTW_BACKWARD, FFTW_ESTIMATE);
  cache[key] = p;
  return p;
}

}  // namespace

void fft(std::vector<cplx>& data, int sign) {
  const int n = static_cast<int>(data.size());
  fftw_plan p = get_plan(n, sign);
  fftw_execute_dft(p, reinterpret_cast<fftw_complex*>(data.data()),
                   reinterpret_cast<fftw_complex*>(data.data()));
}

SpatialState SpatialState::from_position(const SpatialGrid& g, std::vector<cplx> values) {
  if (static_cast<int>(values.size()) != g.n)
    throw std::invalid_argument("SpatialState: value count != grid size");
  SpatialState s;
  s.grid_ = g;
  s.values_ = std::move(values);
  s.sync_from_position();
  return s;
}

SpatialState SpatialState::from_momentum(const SpatialGrid& g, std::vector<cplx> momentum) {
  if (static_cast<int>(momentum.size()) != g.n)
    throw std::invalid_argument("SpatialState: momentum count != grid size");
  SpatialState s;
  s.grid_ = g;
  s.momentum_ = std::move(momentum);
  s.sync_from_momentum();
  return s;
}

void SpatialState::sync_from_position() {
  const int n = grid_.n;
  momentum_ = values_;
  fft(momentum_, -1);
  const double scale = grid_.dx / std::sqrt(2.0 * M_PI);
  for (int k = 0; k < n; ++k) {
    const double phase = -grid_.p(k) * grid_.x_min;
    momentum_[k] *= scale * cplx(std::cos(phase), std::sin(phase));
  }
}

void SpatialState::sync_from_momentum() {
  const int n = grid_.n;
  values_ = momentum_;
  const double scale = std::sqrt(2.0 * M_PI) / (grid_.dx * n);
  for (int k = 0; k < n; ++k) {
    const double phase = grid_.p(k) * grid_.x_min;
    values_[k] *= cplx(std::cos(phase), std::sin(phase));
  }
  fft(values_, +1);
  for (auto& v : values_) v *= scale;
}

double SpatialState::norm_x() const {
  double acc = 0.0;
  for (const auto& v : values_) acc += std::norm(v);
  return std::sqrt(acc * grid_.dx);
}

double SpatialState::norm_p() const {
  double acc = 0.0;
  for (const auto& v : momentum_) acc += std::norm(v);
  return std::sqrt(acc * grid_.dp());
}

cplx SpatialState::momentum_amplitude(double p) const {
  // incremental rotation e^{-ip dx} avoids n trig calls
  const cplx rot{std::cos(p * grid_.dx), -std::sin(p * grid_.dx)};
  cplx phase{std::cos(p * grid_.x_min), -std::sin(p * grid_.x_min)};
  cplx acc{0.0, 0.0};
  for (const auto& v : values_) {
    acc += v * phase;
    phase *= rot;
  }
  return acc * (grid_.dx / std::sqrt(2.0 * M_PI));
}

double SpatialState::window_mass(double a, double b) const {
  if (b <= a) return 0.0;
  const int n = grid_.n;
  auto density = [&](int j) { return std::norm(values_[j]); };
  auto cell_index = [&](double x) {
    return std::clamp((x - grid_.x_min) / grid_.dx, 0.0, double(n - 1));
  };
  const double ua = cell_index(a), ub = cell_index(b);
  const int ja = static_cast<int>(std::floor(ua));
  const int jb = static_cast<int>(std::floor(ub));
  auto partial = [&](int j, double u0, double u1) {
    // trapezoid with linear density between nodes j and j+1
    if (j + 1 >= n) return 0.0;
    const double r0 = density(j) + (density(j + 1) - density(j)) * u0;
    const double r1 = density(j) + (density(j + 1) - density(j)) * u1;
    return 0.5 * (r0 + r1) * (u1 - u0) * grid_.dx;
  };
  if (ja == jb) return partial(ja, ua - ja, ub - jb);
  double acc = partial(ja, ua - ja, 1.0) + partial(jb, 0.0, ub - jb);
  for (int j = ja + 1; j < jb; ++j) acc += 0.5 * (density(j) + density(j + 1)) * grid_.dx;
  return acc;
}

std::vector<double> SpatialState::mass_prefix() const {
  std::vector<double> pre(grid_.n, 0.0);
  for (int j = 1; j < grid_.n; ++j)
    pre[j] = pre[j - 1] + 0.5 * (std::norm(values_[j - 1]) + std::norm(values_[j])) * grid_.dx;
  return pre;
}

SpatialState SpatialState::multiplied_in_momentum(const std::vector<cplx>& factor) const {
  if (factor.size() != momentum_.size())
    throw std::invalid_argument("multiplied_in_momentum: size mismatch");
  std::vector<cplx> m(momentum_);
  for (size_t k = 0; k < m.size(); ++k) m[k] *= factor[k];
  return from_momentum(grid_, std::move(m));
}

SpatialState parity(const SpatialState& phi) {
  const int n = phi.grid().n;
  std::vector<cplx> m(n);
  for (int k = 0; k < n; ++k) m[k] = phi.momentum_values()[(n - k) % n];
  return SpatialState::from_momentum(phi.grid(), std::move(m));
}

SpatialState time_reverse(const SpatialState& phi) {
  std::vector<cplx> v(phi.values());
  for (auto& z : v) z = std::conj(z);
  return SpatialState::from_position(phi.grid(), std::move(v));
}

}  // namespace stepdelay
