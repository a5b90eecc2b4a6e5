#include <doctest.h>

#include <cmath>
#include <limits>

#include "hjbexec/errors.hpp"
#include "hjbexec/model.hpp"

using namespace hjbexec;

TEST_CASE("clamped exponential kappa at the origin") {
  const auto k = CoefficientSpec::clamped_exp(0.5, 0.05, 5000.0);
  CHECK(evaluate_coefficient(k, 0.0) == doctest::Approx(0.5).epsilon(1e-15));
}

TEST_CASE("constant coefficient ignores y") {
  CHECK(evaluate_coefficient(CoefficientSpec::constant(2.0), -3.7) == 2.0);
}

TEST_CASE("power-of-kappa sigma where kappa = 2") {
  const auto k = CoefficientSpec::clamped_exp(0.5, 0.05, 5000.0);
  const auto s = CoefficientSpec::power_of(0.5, -0.5, k);
  const double y = std::log(4.0);  // 0.5 e^y = 2
  CHECK(evaluate_coefficient(k, y) == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(evaluate_coefficient(s, y) == doctest::Approx(2.0).epsilon(1e-14));
}

TEST_CASE("catalog tags") {
  CHECK_THROWS_AS(coefficient_from_tag("spline", {}), ConfigError);
  CHECK_THROWS_AS(coefficient_from_tag("affine", {{"slope", 1.0}}), ConfigError);
  CHECK_THROWS_AS(coefficient_from_tag("power_of_kappa", {{"base", 1.0}, {"exponent", 1.0}}), ConfigError);
  const auto a = coefficient_from_tag("affine", {{"intercept", 1.0}, {"slope", -5.0}});
  CHECK(a.tag() == "affine");
  CHECK(evaluate_coefficient(a, 2.0) == -9.0);
}

TEST_CASE("reference fields and their bounds") {
  const auto f = CoefficientFields::reference();
  CHECK(f.kappa_bounds().lo == doctest::Approx(0.05));
  CHECK(f.kappa_bounds().hi == doctest::Approx(5000.0));
  const Bounds kd = f.kappa_bounds_on(-5.0, 5.0);
  CHECK(kd.lo == doctest::Approx(0.05));
  CHECK(kd.hi == doctest::Approx(0.5 * std::exp(5.0)).epsilon(1e-14));
  const Bounds sd = f.sigma_bounds_on(-5.0, 5.0);
  CHECK(sd.lo == doctest::Approx(std::sqrt(0.1)).epsilon(1e-14));
  CHECK(sd.hi == doctest::Approx(std::sqrt(0.5 * std::exp(5.0) / 0.5)).epsilon(1e-14));
  CHECK(f.alpha(0.3) == doctest::Approx(-1.5));
  CHECK(f.beta(-2.0) == 1.0);
}

TEST_CASE("model parameter ranges") {
  ModelParams p;
  CHECK_NOTHROW(p.check());
  p.impact_exponent = 1.5;
  CHECK_THROWS_AS(p.check(), ConfigError);
  p.impact_exponent = 0.0;
  CHECK_THROWS_AS(p.check(), ConfigError);
  p = ModelParams{};
  p.horizon = 0.0;
  CHECK_THROWS_AS(p.check(), ConfigError);
  p = ModelParams{};
  p.risk_aversion = -0.1;
  CHECK_THROWS_AS(p.check(), ConfigError);
  p = ModelParams{};
  p.initial_price = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(p.check(), ConfigError);
}

TEST_CASE("validate: zero risk aversion gives threshold 0") {
  ModelParams p;
  p.risk_aversion = 0.0;
  p.penalty = 1.0;
  const auto r = validate(p, CoefficientFields::reference(), 101);
  CHECK(r.h3_threshold == 0.0);
  CHECK(r.h3_ok);
  CHECK(r.h2_bounds_ok);
}

TEST_CASE("validate: unit data") {
  ModelParams p;
  p.risk_aversion = 1.0;
  p.impact_exponent = 1.0;
  p.penalty = 2.0;
  const auto f = CoefficientFields::constant(1.0, 1.0);
  auto r = validate(p, f, 11);
  CHECK(r.h3_threshold == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(r.h3_ok);
  p.penalty = 0.5;
  r = validate(p, f, 11);
  CHECK_FALSE(r.h3_ok);
  CHECK_FALSE(r.messages.empty());
}

TEST_CASE("validate flags fields leaving their declared bounds") {
  const auto k = CoefficientSpec::affine(1.0, 0.5);
  CoefficientFields f(k, CoefficientSpec::constant(1.0), CoefficientSpec::constant(0.0),
                      CoefficientSpec::constant(1.0), Bounds{0.5, 1.5}, Bounds{1.0, 1.0});
  const auto r = validate(ModelParams{}, f, 101, -2.0, 2.0);
  CHECK_FALSE(r.h2_bounds_ok);
  CHECK(r.worst_violation == doctest::Approx(0.5));
  CHECK_THROWS_AS(validate(ModelParams{}, f, 1), UsageError);
}

TEST_CASE("h3 threshold is nondecreasing in gamma, sigma_hi and kappa_hi") {
  const double vals[] = {0.0, 0.01, 0.3, 1.0, 2.5, 10.0};
  const double phis[] = {0.25, 0.5, 0.75, 1.0};
  for (double phi : phis) {
    for (double g : vals) {
      for (double s : vals) {
        for (double k : vals) {
          if (k == 0.0) continue;
          const double base = h3_threshold(g, phi, s, k);
          CHECK(h3_threshold(g * 1.7 + 0.01, phi, s, k) >= base);
          CHECK(h3_threshold(g, phi, s * 1.7 + 0.01, k) >= base);
          CHECK(h3_threshold(g, phi, s, k * 1.7) >= base);
        }
      }
    }
  }
}

TEST_CASE("clamped exponential is nondecreasing and Lipschitz on a bounded domain") {
  const double k0 = 0.5, y_hi = 5.0;
  const auto k = CoefficientSpec::clamped_exp(k0, 0.05, 5000.0);
  const double L = k0 * std::exp(y_hi);
  double prev = evaluate_coefficient(k, -5.0);
  for (int i = 1; i <= 4000; ++i) {
    const double y0 = -5.0 + (i - 1) * 10.0 / 4000;
    const double y1 = -5.0 + i * 10.0 / 4000;
    const double v = evaluate_coefficient(k, y1);
    CHECK(v >= prev);
    CHECK(v - prev <= L * (y1 - y0) * (1.0 + 1e-12));
    CHECK(v >= 0.05);
    CHECK(v <= 5000.0);
    prev = v;
  }
}
