#include <doctest.h>

#include <cmath>
#include <limits>

#include "hjbexec/errors.hpp"
#include "hjbexec/hamiltonian.hpp"

using namespace hjbexec;

TEST_CASE("H examples") {
  CHECK(hamiltonian_H(0.0, 0.5) == 0.0);
  CHECK(hamiltonian_H(-2.0, 1.0) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(hamiltonian_H(-4.0, 0.5) == doctest::Approx(32.0).epsilon(1e-14));
}

TEST_CASE("H tilde examples") {
  CHECK(hamiltonian_Htilde(0.0, 1.0) == 0.0);
  CHECK(hamiltonian_Htilde(2.0, 1.0) == doctest::Approx(1.0).epsilon(1e-15));
  CHECK(hamiltonian_Htilde(3.0, 0.5) == doctest::Approx(4.0).epsilon(1e-14));
}

TEST_CASE("H and H tilde differ by (1+phi)^(1+1/phi)") {
  for (double phi : {0.1, 0.25, 0.5, 0.75, 0.9, 1.0}) {
    for (double p : {-30.0, -2.5, -1e-3, 1e-6, 0.7, 4.0, 123.0}) {
      const double lhs = hamiltonian_H(p, phi);
      const double rhs = std::pow(1.0 + phi, 1.0 + 1.0 / phi) * hamiltonian_Htilde(p, phi);
      CHECK(std::fabs(lhs - rhs) <= 1e-13 * std::fabs(lhs));
    }
  }
}

TEST_CASE("H is even, increasing in |p| and convex on each half-line") {
  for (double phi : {0.3, 0.75, 1.0}) {
    double prev = 0.0;
    for (int i = 1; i <= 200; ++i) {
      const double p = 0.05 * i;
      const double h = hamiltonian_H(p, phi);
      CHECK(h == hamiltonian_H(-p, phi));
      CHECK(h > prev);
      const double mid = hamiltonian_H(p - 0.025, phi);
      CHECK(mid <= 0.5 * (h + hamiltonian_H(p - 0.05, phi)) * (1.0 + 1e-14));
      prev = h;
    }
  }
}

TEST_CASE("Hamiltonian argument checks") {
  CHECK_THROWS_AS(hamiltonian_H(std::numeric_limits<double>::infinity(), 0.5), NumericError);
  CHECK_THROWS_AS(hamiltonian_H(std::nan(""), 0.5), NumericError);
  CHECK_THROWS_AS(hamiltonian_Htilde(1.0, 1.5), DomainError);
}

TEST_CASE("feedback rate examples") {
  CHECK(feedback_rate(0.0, 1.0, 7.0, 0.5) == 0.0);
  CHECK(feedback_rate(-1.0, 1.0, 5.0, 1.0) == doctest::Approx(-5.0).epsilon(1e-15));
  CHECK(feedback_rate(-4.0, 1.0, 1.0, 0.5) == doctest::Approx(-16.0).epsilon(1e-14));
  CHECK_THROWS_AS(feedback_rate(0.1, 1.0, 1.0, 0.5), DomainError);
  CHECK_THROWS_AS(feedback_rate(-0.1, 0.0, 1.0, 0.5), DomainError);
}

TEST_CASE("feedback rate is homogeneous in q and opposes the position") {
  for (double phi : {0.4, 0.75, 1.0}) {
    for (double z : {-1e-8, -0.2, -1.0, -7.5}) {
      for (double k : {0.05, 0.5, 74.0}) {
        const double base = feedback_rate(z, k, 1.0, phi);
        for (double q : {-15.0, -0.3, 0.0, 2.0, 15.0}) {
          const double nu = feedback_rate(z, k, q, phi);
          CHECK(q * nu <= 0.0);
          CHECK(nu == doctest::Approx(q * base).epsilon(1e-13));
        }
      }
    }
  }
}
