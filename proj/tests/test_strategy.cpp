#include <doctest.h>

#include <cmath>

#include "hjbexec/errors.hpp"
#include "hjbexec/montecarlo.hpp"
#include "hjbexec/strategy.hpp"
#include "oracles.hpp"

using namespace hjbexec;

namespace {

ModelParams riccati_params() {
  ModelParams p;
  p.horizon = 1.0;
  p.impact_exponent = 1.0;
  p.risk_aversion = 1.0;
  p.penalty = 2.0;
  p.initial_inventory = 10.0;
  return p;
}

const HjbSolution& table1_solution() {
  static const HjbSolution s = solve_hjb(ModelParams{}, CoefficientFields::reference(), build_grid(-5, 5, 201, 500, 5.0));
  return s;
}

}  // namespace

TEST_CASE("bilinear lookup") {
  HjbSolution s;
  s.grid = build_grid(0, 1, 2 + 1, 2, 1.0);
  s.z = Field(3, 3);
  for (int i = 0; i < 3; ++i) {
    s.z(i, 0) = -1.0;
    s.z(i, 1) = -3.0;
    s.z(i, 2) = -5.0;
  }
  CHECK(interpolate_z(s, 0.5, 0.5) == -3.0);
  CHECK(interpolate_z(s, 0.25, 0.25) == doctest::Approx(-2.0));
  CHECK(interpolate_z(s, 0.75, 0.75) == doctest::Approx(-4.0));
  std::size_t clamped = 0;
  CHECK(interpolate_z(s, 0.3, 7.0, &clamped) == doctest::Approx(-5.0));
  CHECK(clamped == 1);
}

TEST_CASE("lookup between time slices follows the coth solution") {
  const ModelParams p = riccati_params();
  const auto s = solve_hjb(p, CoefficientFields::constant(1.0, 1.0, 0.0, 1.0), build_grid(-1, 1, 21, 500, 1.0));
  REQUIRE(s.converged);
  for (double t : {0.0011, 0.3337, 0.5, 0.9991}) {
    CHECK(interpolate_z(s, t, 0.13) == doctest::Approx(oracle::riccati_coth(2.0, 1.0, t)).epsilon(2e-5));
  }
}

TEST_CASE("empty inventory does nothing") {
  ModelParams p;
  p.initial_inventory = 0.0;
  p.initial_cash = 12.0;
  const auto& s = table1_solution();
  const auto f = CoefficientFields::reference();
  const auto times = s.grid.times();
  const std::vector<double> y(times.size(), 0.3), dB(times.size() - 1, 0.01);
  const auto tr = simulate_execution(s, p, f, times, y, dB, 0.0, 40.0, 12.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(tr.nu_path[i] == 0.0);
    CHECK(tr.Q_path[i] == 0.0);
    CHECK(tr.X_path[i] == 12.0);
    CHECK(tr.w_path[i] == 12.0);
  }
  CHECK(performance_criterion(tr, p, f) == 0.0);
  for (double t : {0.0, 1.0, 4.0}) CHECK(inventory_bound(t, 0.06, 74.2, 3.0, 0.75, 0.0, 5.0) == 0.0);
}

TEST_CASE("mismatched path lengths are rejected") {
  const auto& s = table1_solution();
  const auto times = s.grid.times();
  const std::vector<double> y(times.size() - 1, 0.0), dB(times.size() - 1, 0.0);
  CHECK_THROWS_AS(simulate_execution(s, ModelParams{}, CoefficientFields::reference(), times, y, dB, 15, 40, 0),
                  UsageError);
}

TEST_CASE("inventory under the coth solution") {
  // Q(t) = q0 sinh(T - t + c) / sinh(T + c), c = arccoth A. The rate is held
  // at its left-end value on each piece, so the error is first order in the
  // piece length.
  const ModelParams p = riccati_params();
  const auto f = CoefficientFields::constant(1.0, 1.0, 0.0, 1.0);
  const auto s = solve_hjb(p, f, build_grid(-1, 1, 21, 500, 1.0));
  REQUIRE(s.converged);
  const auto times = s.grid.times();
  const std::vector<double> y(times.size(), 0.0), dB(times.size() - 1, 0.0);
  const double c = 0.5 * std::log(3.0);
  double errs[3];
  int k = 0;
  for (int sub : {1, 2, 8}) {
    const auto tr = simulate_execution(s, p, f, times, y, dB, 10.0, 40.0, 0.0, sub);
    double e = 0.0;
    for (std::size_t i = 0; i < times.size(); ++i) {
      const double exact = 10.0 * std::sinh(1.0 - times[i] + c) / std::sinh(1.0 + c);
      e = std::max(e, std::fabs(tr.Q_path[i] - exact) / 10.0);
    }
    errs[k++] = e;
  }
  CHECK(errs[0] < 5e-3);
  CHECK(errs[0] / errs[1] == doctest::Approx(2.0).epsilon(0.1));
  CHECK(errs[2] < 3e-4);
}

TEST_CASE("TWAP schedule") {
  ModelParams p;
  const auto f = CoefficientFields::reference();
  const auto times = uniform_times(5.0, 500);
  const std::vector<double> y(times.size(), 0.0), dB(times.size() - 1, 0.0);
  const auto tr = twap_trajectory(p, f, times, y, dB, 15.0, 40.0, 0.0);
  for (std::size_t i = 0; i < times.size(); ++i) {
    CHECK(tr.nu_path[i] == doctest::Approx(-3.0));
    CHECK(tr.Q_path[i] == doctest::Approx(15.0 * (1.0 - times[i] / 5.0)).scale(1.0).epsilon(1e-12));
  }
  CHECK(std::fabs(tr.Q_path.back()) < 1e-12);
}

TEST_CASE("TWAP criterion with constant coefficients") {
  ModelParams p;
  p.risk_aversion = 0.3;
  for (double phi : {0.5, 0.75, 1.0}) {
    p.impact_exponent = phi;
    const auto f = CoefficientFields::constant(0.7, 1.3, 0.0, 1.0);
    const auto times = uniform_times(5.0, 100);
    const std::vector<double> y(times.size(), 0.0), dB(times.size() - 1, 0.0);
    const auto tr = twap_trajectory(p, f, times, y, dB, 15.0, 40.0, 0.0);
    CHECK(performance_criterion(tr, p, f) ==
          doctest::Approx(twap_criterion_constant(0.7, 1.3, 0.3, phi, 15.0, 5.0)).epsilon(1e-11));
  }
  const double pp = 1.75;
  CHECK(twap_criterion_constant(0.5, 1.0, 0.05, 0.75, 15.0, 5.0) ==
        doctest::Approx(-0.5 * std::pow(3.0, pp) * 5.0 - 0.05 * std::pow(15.0, pp) * 5.0 / 2.75));
}

TEST_CASE("no trading pays running risk and the full penalty") {
  ModelParams p;
  const auto f = CoefficientFields::constant(0.5, 2.0);
  const auto times = uniform_times(5.0, 50);
  const std::vector<double> y(times.size(), 0.0), dB(times.size() - 1, 0.0);
  const auto tr = constant_rate_trajectory(p, f, times, y, dB, 15.0, 40.0, 0.0, 0.0);
  const double q = std::pow(15.0, 1.75);
  CHECK(performance_criterion(tr, p, f) == doctest::Approx(-0.05 * std::pow(2.0, 1.75) * q * 5.0 - 3.0 * q).epsilon(1e-12));
}

TEST_CASE("inventory bound at the start is q0") {
  for (double A : {1.0, 3.0, 100.0}) CHECK(inventory_bound(0.0, 0.06, 74.2, A, 0.75, -15.0, 5.0) == doctest::Approx(15.0));
}

TEST_CASE("optimal paths: signs, monotone inventory, wealth identity, bound") {
  const ModelParams p;
  const auto f = CoefficientFields::reference();
  const auto& s = table1_solution();
  REQUIRE(s.converged);
  const PathBatch batch(f, 0.0, s.grid.times(), 300, 7);
  const double ell = ell_constant(s.supersolution, p.penalty, p.horizon, p.impact_exponent);
  for (std::size_t k = 0; k < batch.n_paths(); ++k) {
    const FactorPath fp = batch.path(k);
    const auto tr = simulate_execution(s, p, f, batch.times(), fp.y, fp.dB, 15.0, 40.0, 0.0);
    CHECK(sign_violations(tr, 15.0) == 0);
    for (std::size_t i = 0; i < tr.times.size(); ++i) {
      CHECK(tr.w_path[i] == tr.X_path[i] + tr.Q_path[i] * tr.S_path[i]);
      if (i > 0) CHECK(std::fabs(tr.Q_path[i]) <= std::fabs(tr.Q_path[i - 1]));
    }
    CHECK(inventory_bound_check(tr, ell, s.kappa_bounds.hi, p.penalty, p.impact_exponent, 15.0, p.horizon).ok);
  }
}

TEST_CASE("selling short positions mirrors buying") {
  const ModelParams p;
  const auto f = CoefficientFields::reference();
  const auto& s = table1_solution();
  const PathBatch batch(f, 0.0, s.grid.times(), 5, 11);
  for (std::size_t k = 0; k < 5; ++k) {
    const FactorPath fp = batch.path(k);
    const auto a = simulate_execution(s, p, f, batch.times(), fp.y, fp.dB, 15.0, 40.0, 0.0);
    const auto b = simulate_execution(s, p, f, batch.times(), fp.y, fp.dB, -15.0, 40.0, 0.0);
    CHECK(sign_violations(b, -15.0) == 0);
    for (std::size_t i = 0; i < a.times.size(); ++i) {
      CHECK(b.Q_path[i] == doctest::Approx(-a.Q_path[i]));
      CHECK(b.nu_path[i] == doctest::Approx(-a.nu_path[i]));
    }
    CHECK(performance_criterion(a, p, f) == doctest::Approx(performance_criterion(b, p, f)));
  }
}

TEST_CASE("optimal strategy beats TWAP and other constant rates in mean") {
  const ModelParams p;
  const auto f = CoefficientFields::reference();
  const auto& s = table1_solution();
  const PathBatch batch(f, 0.0, s.grid.times(), 1000, 99);
  for (double frac : {0.5, 0.9, 1.0}) {
    double sum = 0.0, sum2 = 0.0;
    for (std::size_t k = 0; k < batch.n_paths(); ++k) {
      const FactorPath fp = batch.path(k);
      const auto o = simulate_execution(s, p, f, batch.times(), fp.y, fp.dB, 15.0, 40.0, 0.0);
      const auto c = constant_rate_trajectory(p, f, batch.times(), fp.y, fp.dB, 15.0, 40.0, 0.0, frac);
      const double d = performance_criterion(o, p, f) - performance_criterion(c, p, f);
      sum += d;
      sum2 += d * d;
    }
    const double n = static_cast<double>(batch.n_paths());
    const double mean = sum / n;
    const double se = std::sqrt((sum2 / n - mean * mean) / (n - 1));
    CHECK(mean - 3.0 * se > 0.0);
  }
}
