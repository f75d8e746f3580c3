#include "stepdelay/smatrix.hpp"

#include <cmath>
#include <sstream>
#include <mutex>
#include <thread>

#include "json.hpp"

namespace stepdelay {

namespace {

JostSolution conjugate_solution(const JostSolution& f) {
  JostSolution g = f;
  g.k = std::conj(f.k);
  for (auto& v : g.values) v = std::conj(v);
  for (auto& v : g.derivative) v = std::conj(v);
  return g;
}

}  // namespace

int ScatteringData::index_of_energy(double e, double tol) const {
  for (size_t i = 0; i < energies.size(); ++i)
    if (std::abs(energies[i] - e) <= tol) return static_cast<int>(i);
  return -1;
}

double unitarity_defect(const SMatrixPoint& p) {
  if (p.regime == Regime::OneChannel) return std::abs(std::abs(p.s_ll) - 1.0);
  // Frobenius norm of S^dag S - I for S = [[s_rl, s_rr], [s_ll, s_lr]]
  const cplx m11 = p.s_rl, m12 = p.s_rr, m21 = p.s_ll, m22 = p.s_lr;
  const cplx g11 = std::conj(m11) * m11 + std::conj(m21) * m21 - 1.0;
  const cplx g12 = std::conj(m11) * m12 + std::conj(m21) * m22;
  const cplx g21 = std::conj(m12) * m11 + std::conj(m22) * m21;
  const cplx g22 = std::conj(m12) * m12 + std::conj(m22) * m22 - 1.0;
  return std::sqrt(std::norm(g11) + std::norm(g12) + std::norm(g21) + std::norm(g22));
}

SMatrixPoint s_matrix_at(const Potential& pot, double energy, const StationaryGrid& grid,
                         const StationaryOptions& opts) {
  SMatrixPoint out;
  out.energy = energy;

  const JostSolution fl = jost_left(pot, energy, grid, opts);
  const JostSolution fr = jost_right(pot, energy, grid, opts);
  const JostSolution fl_bar = conjugate_solution(fl);

  const cplx kl = fl.k;
  const cplx kr = fr.k;
  const cplx two_i_kl = cplx(0.0, 2.0) * kl;

  const WronskianResult w = wronskian(fl, fr);
  out.wronskian_deviation = w.deviation;
  if (std::abs(w.value) < 1e-12)
    throw CertificateError("s_matrix_at: Wronskian below degeneracy floor");

  // Expand f_r on the left in plane waves: f_r = a f_l + b conj(f_l).
  //   b = W(f_l, f_r) / (2 i k_l),   a = W(f_r, conj(f_l)) / (2 i k_l).
  const cplx b = w.value / two_i_kl;
  const cplx a = wronskian(fr, fl_bar).value / two_i_kl;
  out.s_ll = a / b;

  if (energy > pot.v_right) {
    out.regime = Regime::TwoChannel;
    const JostSolution fr_bar = conjugate_solution(fr);
    const cplx two_i_kr = cplx(0.0, 2.0) * kr;
    // Expand f_l on the right: f_l = c f_r + d conj(f_r).
    const cplx d = w.value / two_i_kr;
    const cplx c = wronskian(fr_bar, fl).value / two_i_kr;
    out.s_rr = c / d;
    // Flux-normalized transmission amplitudes; the free case (V const)
    // gives b = d = 1, i.e. pure transmission with unit amplitude.
    out.s_rl = std::sqrt(kr / kl) / b;
    out.s_lr = std::sqrt(kl / kr) / d;
  } else {
    out.regime = Regime::OneChannel;
  }
  out.unitarity_defect = unitarity_defect(out);
  return out;
}

SMatrixPoint s_matrix_at(const Potential& pot, double energy, const StationaryOptions& opts) {
  return s_matrix_at(pot, energy, make_stationary_grid(pot, energy, opts), opts);
}

EWMatrixPoint ew_matrix(const ScatteringData& data, int index, DerivativeScheme scheme) {
  const int need = scheme == DerivativeScheme::CentralRichardson ? 2 : 1;
  const int n = static_cast<int>(data.energies.size());
  if (index < need || index >= n - need)
    throw std::invalid_argument("ew_matrix: not enough neighbors for the derivative stencil");
  const double h = data.energies[index + 1] - data.energies[index];
  for (int j = -need; j < need; ++j) {
    const double hj = data.energies[index + j + 1] - data.energies[index + j];
    if (std::abs(hj - h) > 1e-9 * std::abs(h))
      throw std::invalid_argument("ew_matrix: energy grid not locally uniform");
  }
  const double e = data.energies[index];
  const double excl = data.threshold_exclusion;
  const double reach = need * h;
  if (std::abs(e - data.v_right) < excl + reach || e - data.v_left < excl + reach)
    throw std::invalid_argument("ew_matrix: stencil touches a threshold exclusion zone");

  // regime must not change across the stencil
  const Regime reg = data.s[index].regime;
  for (int j = -need; j <= need; ++j)
    if (data.s[index + j].regime != reg)
      throw std::invalid_argument("ew_matrix: stencil spans the two-channel threshold");

  auto entry = [&](int i, int r, int c) -> cplx {
    const SMatrixPoint& p = data.s[i];
    if (r == 0 && c == 0) return p.s_rl;
    if (r == 0 && c == 1) return p.s_rr;
    if (r == 1 && c == 0) return p.s_ll;
    return p.s_lr;
  };

  EWMatrixPoint out;
  out.energy = e;
  out.regime = reg;

  if (reg == Regime::OneChannel) {
    auto d_of = [&](int stride) {
      return (data.s[index + stride].s_ll - data.s[index - stride].s_ll) / (2.0 * stride * h);
    };
    const cplx d1 = d_of(1);
    cplx ds = d1;
    if (scheme == DerivativeScheme::CentralRichardson) {
      const cplx d2 = d_of(2);
      ds = (4.0 * d1 - d2) / 3.0;
      out.derivative_error = std::abs(d1 - d2) / 3.0;
      out.scheme = "central+richardson h=" + format_g17(h);
    } else {
      out.scheme = "central h=" + format_g17(h);
    }
    out.t_ll = cplx(0.0, -1.0) * std::conj(data.s[index].s_ll) * ds;
    return out;
  }

  cplx ds[2][2];
  double deriv_err = 0.0;
  for (int r = 0; r < 2; ++r) {
    for (int c = 0; c < 2; ++c) {
      const cplx d1 = (entry(index + 1, r, c) - entry(index - 1, r, c)) / (2.0 * h);
      if (scheme == DerivativeScheme::CentralRichardson) {
        const cplx d2 = (entry(index + 2, r, c) - entry(index - 2, r, c)) / (4.0 * h);
        ds[r][c] = (4.0 * d1 - d2) / 3.0;
        deriv_err = std::max(deriv_err, std::abs(d1 - d2) / 3.0);
      } else {
        ds[r][c] = d1;
      }
    }
  }
  out.derivative_error = deriv_err;
  out.scheme = scheme == DerivativeScheme::CentralRichardson
                   ? "central+richardson h=" + format_g17(h)
                   : "central h=" + format_g17(h);

  // T_ab = -i sum_c conj(S_ca) dS_cb/dE, with matrix rows (out r, out l)
  // and columns (in l, in r).
  const SMatrixPoint& p = data.s[index];
  const cplx m[2][2] = {{p.s_rl, p.s_rr}, {p.s_ll, p.s_lr}};
  cplx t[2][2];
  for (int a = 0; a < 2; ++a)
    for (int bcol = 0; bcol < 2; ++bcol) {
      cplx acc{0.0, 0.0};
      for (int c = 0; c < 2; ++c) acc += std::conj(m[c][a]) * ds[c][bcol];
      t[a][bcol] = cplx(0.0, -1.0) * acc;
    }
  out.t_ll = t[0][0];
  out.t_lr = t[0][1];
  out.t_rl = t[1][0];
  out.t_rr = t[1][1];
  return out;
}

ScatteringData scattering_sweep(const Potential& pot, const std::vector<double>& energies,
                                const StationaryOptions& opts, DerivativeScheme scheme,
                                int threads) {
  for (size_t i = 0; i + 1 < energies.size(); ++i)
    if (energies[i + 1] <= energies[i])
      throw std::invalid_argument("scattering_sweep: energies must be strictly increasing");

  ScatteringData data;
  data.energies = energies;
  data.s.resize(energies.size());
  data.potential_id = serialize_potential(pot);
  data.threshold_exclusion = threshold_exclusion_radius(pot, opts);
  data.v_left = pot.v_left;
  data.v_right = pot.v_right;

  // One shared grid sized for the most demanding (lowest) energy.
  const StationaryGrid grid = make_stationary_grid(pot, energies.front(), opts);

  const int n_e = static_cast<int>(energies.size());
  std::exception_ptr first_error;
  std::mutex err_mutex;
  auto worker = [&](int begin, int step) {
    for (int i = begin; i < n_e; i += step) {
      try {
        data.s[i] = s_matrix_at(pot, energies[i], grid, opts);
      } catch (const std::exception& e) {
        const std::string ctx = "energy index " + std::to_string(i) + " (E = " +
                                format_g17(energies[i]) + "): " + e.what();
        std::lock_guard<std::mutex> lock(err_mutex);
        if (!first_error) {
          if (dynamic_cast<const CertificateError*>(&e))
            first_error = std::make_exception_ptr(CertificateError(ctx));
          else
            first_error = std::make_exception_ptr(std::invalid_argument(ctx));
        }
        return;
      }
    }
  };
  if (threads <= 1) {
    worker(0, 1);
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker, t, threads);
    for (auto& th : pool) th.join();
  }
  if (first_error) std::rethrow_exception(first_error);

  data.t.resize(energies.size());
  data.has_t.assign(energies.size(), 0);
  const int need = scheme == DerivativeScheme::CentralRichardson ? 2 : 1;
  for (int i = need; i < n_e - need; ++i) {
    try {
      data.t[i] = ew_matrix(data, i, scheme);
      data.has_t[i] = 1;
    } catch (const std::invalid_argument&) {
      // stencil not admissible here (threshold or regime change): skip
    }
  }
  return data;
}

std::string scattering_csv(const ScatteringData& data) {
  std::ostringstream os;
  os << "E,regime,re_s_ll,im_s_ll,re_s_rl,im_s_rl,re_s_rr,im_s_rr,re_s_lr,im_s_lr,"
        "re_t_ll,im_t_ll,re_t_lr,im_t_lr,re_t_rl,im_t_rl,re_t_rr,im_t_rr,"
        "unitarity_defect,wronskian_deviation\n";
  auto put = [&](cplx v) { os << "," << format_g17(v.real()) << "," << format_g17(v.imag()); };
  for (size_t i = 0; i < data.energies.size(); ++i) {
    const SMatrixPoint& p = data.s[i];
    os << format_g17(p.energy) << "," << (p.regime == Regime::OneChannel ? 1 : 2);
    put(p.s_ll);
    if (p.regime == Regime::TwoChannel) {
      put(p.s_rl);
      put(p.s_rr);
      put(p.s_lr);
    } else {
      os << ",,,,,,";
    }
    if (data.has_t[i]) {
      const EWMatrixPoint& t = data.t[i];
      put(t.t_ll);
      if (p.regime == Regime::TwoChannel) {
        put(t.t_lr);
        put(t.t_rl);
        put(t.t_rr);
      } else {
        os << ",,,,,,";
      }
    } else {
      os << ",,,,,,,,";
    }
    os << "," << format_g17(p.unitarity_defect) << "," << format_g17(p.wronskian_deviation)
       << "\n";
  }
  return os.str();
}

std::string scattering_json(const ScatteringData& data, const StationaryOptions& opts) {
  nlohmann::json j;
  j["potential"] = nlohmann::json::parse(data.potential_id);
  j["threshold_exclusion"] = data.threshold_exclusion;
  j["tolerances"] = {{"ode_rtol", opts.ode.rtol},
                     {"ode_atol", opts.ode.atol},
                     {"cutoff_budget", opts.cutoff_budget},
                     {"stationary_dx", opts.dx}};
  j["n_energies"] = data.energies.size();
  j["e_min"] = data.energies.front();
  j["e_max"] = data.energies.back();
  double worst_u = 0.0, worst_w = 0.0;
  for (const auto& p : data.s) {
    worst_u = std::max(worst_u, p.unitarity_defect);
    worst_w = std::max(worst_w, p.wronskian_deviation);
  }
  j["max_unitarity_defect"] = worst_u;
  j["max_wronskian_deviation"] = worst_w;
  return j.dump(2);
}

}  // namespace stepdelay
