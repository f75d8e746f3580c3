#include <cmath>

#include "doctest.h"
#include "stepdelay/runner.hpp"
#include "stepdelay/timedelay.hpp"

using namespace stepdelay;

namespace {

SpatialGrid test_grid(int n, double dx) {
  SpatialGrid g;
  g.n = n;
  g.dx = dx;
  g.x_min = -0.5 * n * dx;
  return g;
}

}  // namespace

TEST_CASE("local delays are sojourn differences with an exact average") {
  SojournCurve c;
  c.r_values = {5.0, 10.0, 20.0};
  c.t_full = {11.0, 21.0, 41.0};
  c.t_in = {10.0, 20.0, 40.0};
  c.t_out = {12.0, 22.0, 42.0};
  const LocalDelays d = local_time_delays(c);
  for (size_t i = 0; i < 3; ++i) {
    CHECK(d.tau_in[i] == doctest::Approx(1.0));
    CHECK(d.tau_out[i] == doctest::Approx(-1.0));
    CHECK(d.tau_sym[i] == doctest::Approx(0.0));
  }
}

TEST_CASE("EW expectation vanishes for free and constant potentials") {
  const SpatialGrid g = test_grid(2048, 0.25);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, 1.4, 5.0, {{1.5, 2.5}}, 0.0, 0.0, g, {});
  const auto e_grid = pk.default_e_grid(512);
  const auto in_rep = to_in_representation(pk.state, 0.0, 0.0, e_grid);
  const ScatteringData free_data = scattering_sweep(make_pure_step(0.0, 0.0), e_grid);
  CHECK(std::abs(ew_expectation(in_rep, free_data)) < 1e-10);

  const AdmissiblePacket pc =
      make_admissible_packet(0.0, 1.3, 5.0, {{2.0, 3.0}}, 0.3, 0.3, g, {});
  const auto ec = pc.default_e_grid(512);
  const auto in_c = to_in_representation(pc.state, 0.3, 0.3, ec);
  const ScatteringData const_data = scattering_sweep(make_pure_step(0.3, 0.3), ec);
  CHECK(std::abs(ew_expectation(in_c, const_data)) < 1e-10);
}

TEST_CASE("EW expectation of the pure step vanishes above the threshold") {
  const SpatialGrid g = test_grid(2048, 0.25);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, 1.4, 5.0, {{1.5, 2.5}}, 0.0, 1.0, g, {});
  const auto e_grid = pk.default_e_grid(512);
  const auto in_rep = to_in_representation(pk.state, 0.0, 1.0, e_grid);
  const ScatteringData data = scattering_sweep(make_pure_step(0.0, 1.0), e_grid);
  CHECK(std::abs(ew_expectation(in_rep, data)) < 1e-7);
}

TEST_CASE("narrow packets probe the EW matrix pointwise") {
  const SpatialGrid g = test_grid(8192, 0.25);
  const Potential pot = make_step_plus_bump(0.0, 1.0, 0.3, 0.0, 1.0);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, std::sqrt(2.0), 30.0, {{1.9, 2.1}}, 0.0, 1.0, g, {});
  const auto e_grid = pk.default_e_grid(512);
  const auto in_rep = to_in_representation(pk.state, 0.0, 1.0, e_grid);
  const ScatteringData data = scattering_sweep(pot, e_grid);
  const double tau = ew_expectation(in_rep, data);
  const int mid = data.index_of_energy(e_grid[e_grid.size() / 2]);
  REQUIRE(mid >= 0);
  REQUIRE(data.has_t[mid] == 1);
  CHECK(tau == doctest::Approx(data.t[mid].t_ll.real()).epsilon(0.05));
}

TEST_CASE("divergence coefficient: zero for symmetric channels and total reflection") {
  const SpatialGrid g = test_grid(2048, 0.25);
  const AdmissiblePacket sym =
      make_admissible_packet(0.0, 1.4, 5.0, {{1.5, 2.5}}, 0.0, 0.0, g, {});
  const auto es = sym.default_e_grid(512);
  const ScatteringData free_data = scattering_sweep(make_pure_step(0.0, 0.0), es);
  CHECK(divergence_coefficient(to_in_representation(sym.state, 0.0, 0.0, es), free_data) ==
        doctest::Approx(0.0).epsilon(1e-12));

  const SpatialGrid g7 = test_grid(4096, 0.4);
  const AdmissiblePacket refl =
      make_admissible_packet(0.0, 0.69, 9.0, {{0.3, 0.7}}, 0.0, 1.0, g7, {});
  const auto er = refl.default_e_grid(512);
  const ScatteringData step_data = scattering_sweep(make_smooth_step(0.0, 1.0, 1.0), er);
  CHECK(divergence_coefficient(to_in_representation(refl.state, 0.0, 1.0, er), step_data) ==
        doctest::Approx(0.0).epsilon(1e-12));
}

TEST_CASE("divergence coefficient of a narrow packet matches the step formula") {
  const SpatialGrid g = test_grid(8192, 0.25);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, std::sqrt(2.0), 30.0, {{1.9, 2.1}}, 0.0, 1.0, g, {});
  const auto e_grid = pk.default_e_grid(512);
  const ScatteringData data = scattering_sweep(make_pure_step(0.0, 1.0), e_grid);
  const auto in_rep = to_in_representation(pk.state, 0.0, 1.0, e_grid);
  const double c = divergence_coefficient(in_rep, data);
  const double kl = std::sqrt(2.0), kr = 1.0;
  const double srl = 2.0 * std::sqrt(kl * kr) / (kl + kr);
  const double expected = 0.5 * srl * srl * (1.0 / kr - 1.0 / kl);
  CHECK(c == doctest::Approx(expected).epsilon(0.02));
}

TEST_CASE("divergence fit recovers exact lines and rejects short windows") {
  const auto r = linspace(5.0, 30.0, 11);
  std::vector<double> y(r.size());
  for (size_t i = 0; i < r.size(); ++i) y[i] = 0.31 * r[i] - 1.7;
  const LinearFit f = fit_divergence(r, y, 5.0, 30.0);
  CHECK(f.slope == doctest::Approx(0.31).epsilon(1e-12));
  CHECK(f.intercept == doctest::Approx(-1.7).epsilon(1e-10));
  CHECK_THROWS_AS(fit_divergence(r, y, 28.0, 30.0), std::invalid_argument);
}

TEST_CASE("plateau detection finds trailing windows and flags their absence") {
  const auto r = geomspace(5.0, 50.0, 12);
  std::vector<double> settling(r.size());
  for (size_t i = 0; i < r.size(); ++i) settling[i] = 0.5 + 2.0 * std::exp(-r[i] / 4.0);
  const PlateauResult p = detect_plateau(r, settling, 0.02, 0.005);
  CHECK(p.value == doctest::Approx(0.5).epsilon(0.01));
  CHECK(p.window_points >= 5);

  std::vector<double> drifting(r.size());
  for (size_t i = 0; i < r.size(); ++i) drifting[i] = 0.1 * r[i];
  CHECK_THROWS_AS(detect_plateau(r, drifting, 0.02, 0.005), CertificateError);
}

TEST_CASE("channel norm bookkeeping through the scattering operator") {
  const SpatialGrid g = test_grid(2048, 0.25);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, 1.4, 5.0, {{1.5, 2.5}}, 0.0, 1.0, g, {});
  const auto e_grid = pk.default_e_grid(1024);
  const ScatteringData data =
      scattering_sweep(make_step_plus_bump(0.0, 1.0, 0.3, 0.0, 1.0), e_grid);
  const auto in_rep = to_in_representation(pk.state, 0.0, 1.0, e_grid);
  const auto out_rep = apply_s(in_rep, data);
  const OutgoingParts parts = split_outgoing(out_rep, g);
  const double refl2 = parts.reflected.norm() * parts.reflected.norm();
  const double trans2 = parts.transmitted.norm() * parts.transmitted.norm();
  CHECK(refl2 + trans2 == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("translated delay: identity at x0 = 0 and nonzero for the displaced step") {
  const SpatialGrid g = test_grid(2048, 0.25);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, 1.4, 5.0, {{1.5, 2.5}}, 0.0, 1.0, g, {});
  const auto e_grid = pk.default_e_grid(512);
  const ScatteringData data = scattering_sweep(make_pure_step(0.0, 1.0), e_grid);
  const auto in_rep = to_in_representation(pk.state, 0.0, 1.0, e_grid);
  const double tau0 = ew_expectation(in_rep, data);
  const TranslatedDelay t0 = translated_delay(in_rep, data, 0.0);
  CHECK(t0.value == doctest::Approx(tau0).epsilon(1e-12));

  // shifting the comparison window makes the step delay nonzero even though
  // its EW diagonal vanishes above the threshold
  const TranslatedDelay t2 = translated_delay(in_rep, data, 2.0);
  CHECK(std::abs(tau0) < 1e-6);
  CHECK(std::abs(t2.value) > 0.05);
  CHECK(t2.transmission_term > 0.0);
  CHECK(t2.reflection_term < 0.0);
}

TEST_CASE("sigma surrogates vanish identically for a transparent potential") {
  const SpatialGrid g = test_grid(2048, 0.3);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, 1.4, 6.0, {{1.2, 2.8}}, 0.0, 0.0, g, {});
  const auto e_grid = pk.default_e_grid(512);
  const ScatteringData data = scattering_sweep(make_pure_step(0.0, 0.0), e_grid);
  QuadratureSpec quad;
  quad.t_max = 40.0;
  const SigmaCurves sig = sigma_surrogates(pk, data, linspace(5.0, 25.0, 6), quad);
  for (size_t i = 0; i < sig.r_values.size(); ++i) {
    CHECK(std::abs(sig.sigma_in[i]) < 1e-7);
    CHECK(std::abs(sig.sigma_out[i]) < 1e-7);
  }
}

TEST_CASE("sigma plateau is invariant under free time translation of the packet") {
  const SpatialGrid g = test_grid(4096, 0.3);
  const Potential pot = make_step_plus_bump(0.0, 0.0, 0.3, 0.0, 1.0);
  const AdmissiblePacket pk =
      make_admissible_packet(0.0, 1.4, 6.0, {{1.5, 2.5}}, 0.0, 0.0, g, {});
  const auto e_grid = pk.default_e_grid(512);
  const ScatteringData data = scattering_sweep(pot, e_grid);
  const auto r_values = geomspace(6.0, 30.0, 10);
  QuadratureSpec quad;

  const SigmaCurves a = sigma_surrogates(pk, data, r_values, quad);

  // time-translate the incoming asymptote by s (free in-dynamics)
  AdmissiblePacket shifted = pk;
  shifted.state = evolve_in_free(pk.state, 0.0, 0.0, 2.0);
  const SigmaCurves b = sigma_surrogates(shifted, data, r_values, quad);

  auto avg = [](const SigmaCurves& s) {
    std::vector<double> v(s.r_values.size());
    for (size_t i = 0; i < v.size(); ++i) v[i] = 0.5 * (s.sigma_in[i] + s.sigma_out[i]);
    return v;
  };
  const PlateauResult pa = detect_plateau(r_values, avg(a), 0.05, 0.02);
  const PlateauResult pb = detect_plateau(r_values, avg(b), 0.05, 0.02);
  CHECK(std::abs(pa.value - pb.value) < 0.02);
}

TEST_CASE("report serialization carries the scalars and curves") {
  TimeDelayReport rep;
  rep.tau_ew = 0.25;
  rep.delays.r_values = {5.0, 10.0};
  rep.delays.tau_in = {1.0, 2.0};
  rep.delays.tau_out = {-1.0, -2.0};
  rep.delays.tau_sym = {0.0, 0.0};
  rep.sigma.r_values = {5.0, 10.0};
  rep.sigma.sigma_in = {1.1, 2.1};
  rep.sigma.sigma_out = {-0.9, -1.9};
  const std::string js = rep.to_json();
  CHECK(js.find("tau_ew") != std::string::npos);
  CHECK(js.find("error_budget") != std::string::npos);
  const std::string csv = rep.curves_csv();
  CHECK(csv.find("R,tau_in,tau_out,tau_sym,sigma_in,sigma_out") == 0);
  CHECK(csv == rep.curves_csv());
}
