#include "hjbexec/hamiltonian.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "hjbexec/errors.hpp"

namespace hjbexec {

namespace {

void check_phi(double phi) {
  if (!(phi > 0.0 && phi <= 1.0)) {
    throw DomainError("phi must lie in (0, 1], got " + std::to_string(phi));
  }
}

void check_finite(double v, const char* what) {
  if (!std::isfinite(v)) throw NumericError(std::string("non-finite ") + what);
}

}  // namespace

double abs_pow(double p, double e) {
  const double a = std::fabs(p);
  if (a == 0.0) return 0.0;
  return std::exp(e * std::log(a));
}

double hamiltonian_H(double p, double phi) {
  check_finite(p, "momentum");
  check_phi(phi);
  return phi * abs_pow(p, 1.0 + 1.0 / phi);
}

double hamiltonian_Htilde(double p, double phi) {
  check_finite(p, "momentum");
  check_phi(phi);
  return phi * abs_pow(p / (1.0 + phi), 1.0 + 1.0 / phi);
}

double feedback_intensity(double z, double kappa, double phi) {
  if (!(kappa > 0.0)) throw DomainError("kappa must be > 0");
  if (z > 0.0) throw DomainError("feedback rate needs z <= 0");
  check_phi(phi);
  const double zc = std::min(z, -1e-30);
  return abs_pow(-zc / kappa, 1.0 / phi);
}

double feedback_rate(double z, double kappa, double q, double phi) {
  check_finite(z, "z");
  check_finite(q, "inventory");
  if (z == 0.0) {
    if (!(kappa > 0.0)) throw DomainError("kappa must be > 0");
    return 0.0;
  }
  return -feedback_intensity(z, kappa, phi) * q;
}

}  // namespace hjbexec
