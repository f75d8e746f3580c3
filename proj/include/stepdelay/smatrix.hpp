#pragma once

#include <optional>
#include <string>
#include <vector>

#include "stepdelay/jost.hpp"
#include "stepdelay/potential.hpp"

namespace stepdelay {

enum class Regime { OneChannel, TwoChannel };

// S-matrix data at one energy. Layout follows the two-component energy
// representation: rows (out r, out l), columns (in l, in r):
//   [ s_rl  s_rr ]
//   [ s_ll  s_lr ]
// In the one-channel regime (v_l < E < v_r) only s_ll is defined; the
// other entries are stored as zero placeholders and the checked accessors
// signal absence.
struct SMatrixPoint {
  double energy = 0.0;
  Regime regime = Regime::TwoChannel;
  cplx s_ll{0.0, 0.0};
  cplx s_rl{0.0, 0.0};
  cplx s_rr{0.0, 0.0};
  cplx s_lr{0.0, 0.0};
  double unitarity_defect = 0.0;
  double wronskian_deviation = 0.0;

  cplx reflection_left() const { return s_ll; }
  std::optional<cplx> transmission() const {
    if (regime == Regime::OneChannel) return std::nullopt;
    return s_rl;
  }
  std::optional<cplx> reflection_right() const {
    if (regime == Regime::OneChannel) return std::nullopt;
    return s_rr;
  }
};

struct EWMatrixPoint {
  double energy = 0.0;
  Regime regime = Regime::TwoChannel;
  cplx t_ll{0.0, 0.0};
  cplx t_lr{0.0, 0.0};
  cplx t_rl{0.0, 0.0};
  cplx t_rr{0.0, 0.0};
  std::string scheme;
  double derivative_error = 0.0;  // stencil-halving disagreement
};

enum class DerivativeScheme { Central, CentralRichardson };

struct ScatteringData {
  std::vector<double> energies;
  std::vector<SMatrixPoint> s;
  std::vector<EWMatrixPoint> t;  // entries valid where has_t[i]
  std::vector<char> has_t;
  std::string potential_id;  // serialized potential provenance
  double threshold_exclusion = 0.0;
  double v_left = 0.0;
  double v_right = 0.0;

  int index_of_energy(double e, double tol = 1e-9) const;
};

SMatrixPoint s_matrix_at(const Potential& pot, double energy,
                         const StationaryGrid& grid, const StationaryOptions& opts = {});
SMatrixPoint s_matrix_at(const Potential& pot, double energy,
                         const StationaryOptions& opts = {});

// S on the whole grid plus the EW matrix at every interior point with
// enough neighbors for the chosen derivative scheme.
ScatteringData scattering_sweep(const Potential& pot, const std::vector<double>& energies,
                                const StationaryOptions& opts = {},
                                DerivativeScheme scheme = DerivativeScheme::CentralRichardson,
                                int threads = 1);

// EW matrix  T(E) = -i S(E)^dag dS/dE  from tabulated S data; the energy
// grid around index i must be uniform and clear of thresholds.
EWMatrixPoint ew_matrix(const ScatteringData& data, int index,
                        DerivativeScheme scheme = DerivativeScheme::CentralRichardson);

double unitarity_defect(const SMatrixPoint& p);

std::string scattering_csv(const ScatteringData& data);
std::string scattering_json(const ScatteringData& data, const StationaryOptions& opts);

}  // namespace stepdelay
