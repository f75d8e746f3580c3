#include <cmath>
#include <random>

#include "doctest.h"
#include "stepdelay/potential.hpp"

using namespace stepdelay;

TEST_CASE("pure step evaluates to its asymptotic values") {
  const Potential zero = make_pure_step(0.0, 0.0);
  for (double x : {-100.0, -1.0, 0.0, 3.5, 800.0}) CHECK(zero(x) == 0.0);

  const Potential unit = make_pure_step(0.0, 1.0);
  CHECK(unit(-1e-9) == 0.0);
  CHECK(unit(0.0) == 1.0);
  CHECK(unit(5.0) == 1.0);

  const Potential asym = make_pure_step(-0.5, 2.0);
  CHECK(asym(-3.0) == -0.5);
  CHECK(asym(7.0) == 2.0);

  CHECK_THROWS_AS(make_pure_step(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("constant potential from equal limits") {
  const Potential c = make_pure_step(0.3, 0.3);
  for (double x = -50.0; x <= 50.0; x += 0.7) CHECK(c(x) == 0.3);
}

TEST_CASE("smooth step: midpoint, antisymmetry, far tail") {
  const Potential s = make_smooth_step(0.0, 1.0, 1.0);
  CHECK(s(0.0) == doctest::Approx(0.5).epsilon(1e-14));
  for (double x : {0.3, 1.1, 2.7, 9.0})
    CHECK(s(x) + s(-x) == doctest::Approx(1.0).epsilon(1e-14));

  const Potential narrow = make_smooth_step(0.0, 1.0, 0.5);
  CHECK(std::abs(narrow(-10.0)) < 1e-15);

  CHECK_THROWS_AS(make_smooth_step(0.0, 1.0, 0.0), std::invalid_argument);
  CHECK_THROWS_AS(make_smooth_step(0.0, 1.0, -2.0), std::invalid_argument);
}

TEST_CASE("step plus bump: peak value and zero-bump degeneration") {
  const Potential b = make_step_plus_bump(0.0, 1.0, 0.3, 0.0, 1.0);
  CHECK(b(0.0) == doctest::Approx(0.8).epsilon(1e-14));

  const Potential nobump = make_step_plus_bump(0.0, 1.0, 0.0, 0.0, 1.0);
  const Potential smooth = make_smooth_step(0.0, 1.0, 1.0);
  for (double x = -8.0; x <= 8.0; x += 0.37)
    CHECK(nobump(x) == doctest::Approx(smooth(x)).epsilon(1e-14));

  const Potential off = make_step_plus_bump(0.0, 1.0, 0.3, 2.0, 1.0);
  CHECK(off(2.0) - smooth(2.0) == doctest::Approx(0.3).epsilon(1e-12));

  CHECK_THROWS_AS(make_step_plus_bump(0.0, 1.0, 0.3, 0.0, 0.0), std::invalid_argument);
}

TEST_CASE("config round trips reproduce the constructors") {
  const std::string pure = R"({"kind":"pure-step","v_left":0.0,"v_right":1.0})";
  const Potential p = load_potential_config(pure);
  const Potential ref = make_pure_step(0.0, 1.0);
  for (double x : {-4.0, 0.0, 4.0}) CHECK(p(x) == ref(x));

  const std::string smooth = R"({"kind":"smooth-step","v_left":0.0,"v_right":1.0,"width":1.0})";
  const Potential s = load_potential_config(smooth);
  const Potential sref = make_smooth_step(0.0, 1.0, 1.0);
  for (double x = -5.0; x <= 5.0; x += 0.51) CHECK(s(x) == doctest::Approx(sref(x)));

  // serialize(load(doc)) reproduces numeric fields bit-for-bit
  const std::string ser1 = serialize_potential(s);
  const std::string ser2 = serialize_potential(load_potential_config(ser1));
  CHECK(ser1 == ser2);
}

TEST_CASE("config error paths") {
  CHECK_THROWS_AS(load_potential_config(R"({"kind":"pure-step","v_left":0.0})"), ConfigError);
  CHECK_THROWS_AS(load_potential_config("not json at all"), ConfigError);
  CHECK_THROWS_AS(load_potential_config(R"({"kind":"pure-step","v_left":2.0,"v_right":0.0})"),
                  ConfigError);
  // custom profiles must declare their decay data
  CHECK_THROWS_AS(load_potential_config(R"({"kind":"custom","v_left":0.0,"v_right":1.0,
    "pieces":[{"x_begin":-1.0,"x_end":1.0,"coeffs":[0.5]}]})"),
                  ConfigError);
}

TEST_CASE("custom piecewise profile evaluates and checks bounds") {
  std::vector<PolyPiece> pieces;
  pieces.push_back({-1.0, 1.0, {0.5, 0.25}});  // 0.5 + 0.25 (x+1)
  const Potential c = make_custom(0.0, 1.0, pieces, std::numeric_limits<double>::infinity(),
                                  0.0);
  CHECK(c(-2.0) == 0.0);
  CHECK(c(-1.0) == doctest::Approx(0.5));
  CHECK(c(0.0) == doctest::Approx(0.75));
  CHECK(c(1.0) == 1.0);
  CHECK(c(10.0) == 1.0);
}

TEST_CASE("declared decay bounds hold on a wide sample grid") {
  make_pure_step(0.0, 1.0).check_invariants();
  make_smooth_step(-0.5, 2.0, 0.7).check_invariants();
  make_step_plus_bump(0.0, 1.0, 0.3, 0.0, 1.0).check_invariants();

  std::mt19937 rng(20240817);
  std::uniform_real_distribution<double> v(-2.0, 2.0), w(0.2, 3.0);
  for (int i = 0; i < 20; ++i) {
    double a = v(rng), b = v(rng);
    if (a > b) std::swap(a, b);
    make_smooth_step(a, b, w(rng)).check_invariants();
  }
}

TEST_CASE("channel constants pick the side limits") {
  const Potential p = make_pure_step(-0.25, 1.5);
  CHECK(channel_constants(p, Side::Left).kappa == -0.25);
  CHECK(channel_constants(p, Side::Right).kappa == 1.5);
}

TEST_CASE("volterra tail bounds decrease and vanish where exact") {
  const Potential s = make_smooth_step(0.0, 1.0, 1.0);
  CHECK(s.tail_integral_right(5.0) > s.tail_integral_right(10.0));
  CHECK(s.tail_integral_left(-5.0) > s.tail_integral_left(-10.0));
  const Potential p = make_pure_step(0.0, 1.0);
  CHECK(p.tail_integral_right(0.0) == 0.0);
  CHECK(p.tail_integral_left(0.0) == 0.0);
}
