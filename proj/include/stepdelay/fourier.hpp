#pragma once

#include <vector>

#include "stepdelay/util.hpp"

namespace stepdelay {

// Uniform spatial grid x_j = x_min + j*dx, j = 0..n-1, with the periodic
// FFT momentum ladder p_k = 2*pi*k~/(n*dx), k~ in [-n/2, n/2).
struct SpatialGrid {
  double x_min = 0.0;
  double dx = 0.0;
  int n = 0;

  double x(int j) const { return x_min + dx * j; }
  double length() const { return dx * n; }
  double dp() const { return 2.0 * M_PI / length(); }
  double p(int k) const {
    const int kk = k < n / 2 ? k : k - n;
    return dp() * kk;
  }
  bool same_as(const SpatialGrid& o) const {
    return n == o.n && std::abs(x_min - o.x_min) < 1e-9 && std::abs(dx - o.dx) < 1e-12;
  }
};

// In-place unnormalized FFT (sign -1: forward), cached FFTW plans.
void fft(std::vector<cplx>& data, int sign);

// Complex wavefunction on a uniform grid together with its momentum image
//  phihat(p) = (2*pi)^{-1/2} integral e^{-ipx} phi(x) dx,
// discretized with dx weights. The two representations are kept in sync.
class SpatialState {
 public:
  SpatialState() = default;
  static SpatialState from_position(const SpatialGrid& g, std::vector<cplx> values);
  static SpatialState from_momentum(const SpatialGrid& g, std::vector<cplx> momentum);

  const SpatialGrid& grid() const { return grid_; }
  const std::vector<cplx>& values() const { return values_; }
  const std::vector<cplx>& momentum_values() const { return momentum_; }

  double norm_x() const;
  double norm_p() const;
  double norm() const { return norm_x(); }

  // Exact discrete-time Fourier sum (dx/sqrt(2 pi)) sum_j phi_j e^{-i p x_j}
  // at an arbitrary momentum; no interpolation involved.
  cplx momentum_amplitude(double p) const;

  // integral_a^b |phi|^2 dx with linear treatment of the partial end cells.
  double window_mass(double a, double b) const;

  // |phi|^2 cell masses accumulated: prefix[j] = integral_{x_0}^{x_j}.
  std::vector<double> mass_prefix() const;

  SpatialState multiplied_in_momentum(const std::vector<cplx>& factor) const;

 private:
  SpatialGrid grid_;
  std::vector<cplx> values_;
  std::vector<cplx> momentum_;
  void sync_from_position();
  void sync_from_momentum();
};

// Parity (J phi)^(p) = phihat(-p) and time reversal (Theta phi)(x) = conj(phi(x)).
SpatialState parity(const SpatialState& phi);
SpatialState time_reverse(const SpatialState& phi);

}  // namespace stepdelay
