#include "hjbexec/ode_bounds.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjbexec/errors.hpp"
#include "hjbexec/hamiltonian.hpp"

namespace hjbexec {

namespace {

constexpr double kRelTol = 1e-10;
constexpr long kMaxSubsteps = 1L << 24;

double rhs(double y, double a, double b, double r) { return a - b * abs_pow(y, r); }

// n RK4 steps from t1 down to t0 (h = (t0 - t1)/n < 0).
double rk4_backward(double y, double t1, double t0, long n, double a, double b,
                    double r) {
  const double h = (t0 - t1) / static_cast<double>(n);
  for (long k = 0; k < n; ++k) {
    const double k1 = rhs(y, a, b, r);
    const double k2 = rhs(y + 0.5 * h * k1, a, b, r);
    const double k3 = rhs(y + 0.5 * h * k2, a, b, r);
    const double k4 = rhs(y + h * k3, a, b, r);
    y += h / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
  }
  return y;
}

void check_grid(const std::vector<double>& g) {
  if (g.size() < 2) throw UsageError("time grid needs at least two points");
  if (g.front() != 0.0) throw UsageError("time grid must start at 0");
  for (std::size_t i = 1; i < g.size(); ++i) {
    if (!(g[i] > g[i - 1])) throw UsageError("time grid must be strictly ascending");
  }
}

}  // namespace

const char* to_string(CurveKind kind) {
  return kind == CurveKind::Subsolution ? "subsolution" : "supersolution";
}

double BoundingCurve::value_at(double t) const {
  if (times.empty()) throw UsageError("empty bounding curve");
  if (t <= times.front()) return values.front();
  if (t >= times.back()) return values.back();
  auto it = std::upper_bound(times.begin(), times.end(), t);
  const std::size_t i = static_cast<std::size_t>(it - times.begin()) - 1;
  const double w = (t - times[i]) / (times[i + 1] - times[i]);
  return (1.0 - w) * values[i] + w * values[i + 1];
}

double BoundingCurve::equilibrium() const {
  return a == 0.0 ? 0.0 : -std::pow(a / b, 1.0 / r);
}

std::vector<double> uniform_times(double T, int n) {
  if (!(T > 0.0) || n < 1) throw UsageError("uniform_times needs T > 0, n >= 1");
  std::vector<double> t(static_cast<std::size_t>(n) + 1);
  for (int i = 0; i <= n; ++i) t[static_cast<std::size_t>(i)] = T * i / n;
  t.back() = T;
  return t;
}

BoundingCurve solve_bounding_ode(double a, double b, double r, double A,
                                 const std::vector<double>& time_grid,
                                 CurveKind kind, OdeRegime regime) {
  if (!(a >= 0.0) || !(b > 0.0) || !(r > 1.0) || !(A >= 0.0) || !std::isfinite(a) ||
      !std::isfinite(b) || !std::isfinite(A)) {
    throw DomainError("bounding ODE needs a >= 0, b > 0, r > 1, A >= 0");
  }
  check_grid(time_grid);
  const double excess = b * std::pow(A, r) - a;
  if (excess <= 0.0 && regime == OdeRegime::Strict) {
    std::ostringstream os;
    os.precision(10);
    os << "bounding ODE infeasible: b*A^r - a = " << excess << " <= 0 (a = " << a
       << ", b = " << b << ", r = " << r << ", A = " << A << ")";
    throw InfeasibleError(os.str());
  }

  BoundingCurve c;
  c.kind = kind;
  c.a = a;
  c.b = b;
  c.r = r;
  c.A = A;
  c.reversed = excess < 0.0;
  c.times = time_grid;
  c.values.assign(time_grid.size(), -A);
  if (excess == 0.0) return c;

  for (std::size_t i = time_grid.size() - 1; i > 0; --i) {
    const double y1 = c.values[i];
    const double t1 = time_grid[i];
    const double t0 = time_grid[i - 1];
    const double lip = b * r * abs_pow(y1, r - 1.0);
    long n = std::max<long>(1, static_cast<long>(std::ceil((t1 - t0) * lip)));
    double prev = rk4_backward(y1, t1, t0, n, a, b, r);
    for (;;) {
      if (n > kMaxSubsteps) {
        throw NumericError("bounding ODE integration did not reach tolerance");
      }
      n *= 2;
      const double next = rk4_backward(y1, t1, t0, n, a, b, r);
      const double diff = std::fabs(next - prev);
      prev = next;
      if (diff <= kRelTol * std::max(std::fabs(next), std::numeric_limits<double>::min())) {
        break;
      }
    }
    if (!std::isfinite(prev)) throw NumericError("bounding ODE produced a non-finite value");
    c.values[i - 1] = prev;
  }
  c.values.back() = -A;
  return c;
}

OdeData subsolution_data(const ModelParams& p, Bounds kappa, Bounds sigma) {
  const double phi = p.impact_exponent;
  return {p.risk_aversion * std::pow(sigma.hi, 1.0 + phi),
          phi * std::pow(kappa.hi, -1.0 / phi)};
}

OdeData supersolution_data(const ModelParams& p, Bounds kappa, Bounds sigma) {
  const double phi = p.impact_exponent;
  return {p.risk_aversion * std::pow(sigma.lo, 1.0 + phi),
          phi * std::pow(kappa.lo, -1.0 / phi)};
}

double penalty_floor(double gamma, double phi, double sigma_lo, double kappa_lo) {
  const double inner =
      gamma * std::pow(sigma_lo, 1.0 + phi) * std::pow(kappa_lo, 1.0 / phi) / phi;
  if (inner == 0.0) return 0.0;
  return -std::pow(inner, phi / (phi + 1.0));
}

double ell_constant(const BoundingCurve& supersolution, double A, double T,
                    double phi) {
  if (supersolution.values.empty()) throw UsageError("ell_constant: empty curve");
  if (!(A > 0.0)) throw DomainError("ell_constant needs A > 0");
  const double eps = std::pow(A, -1.0 / phi);
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < supersolution.values.size(); ++i) {
    const double s = supersolution.times[i];
    const double v = std::fabs(supersolution.values[i]) * std::pow(T - s + eps, phi);
    best = std::min(best, v);
  }
  return best;
}

double penalty_for_fraction(double theta, double ell, double kappa_hi, double T,
                            double phi) {
  if (!(theta >= 0.0 && theta < 1.0)) throw DomainError("theta must lie in [0, 1)");
  if (!(ell > 0.0) || !(kappa_hi > 0.0) || !(T > 0.0)) {
    throw DomainError("penalty_for_fraction needs ell, kappa_hi, T > 0");
  }
  const double expo = std::pow(ell / kappa_hi, -1.0 / phi) * std::log(1.0 / (1.0 - theta));
  return std::pow(std::exp(expo) / T, phi);
}

Envelope blowup_envelope(double A, double phi, double t, double C, double T) {
  const double eps = std::isinf(A) ? 0.0 : std::pow(A, -1.0 / phi);
  const double s = std::pow(eps + T - t, phi);
  return {1.0 / (C * s), C / s};
}

double envelope_constant(double a, double b, double r, double A, double T) {
  const double phi = 1.0 / (r - 1.0);
  if (!(A > 0.0)) throw DomainError("envelope constant needs A > 0");
  if (b * std::pow(A, r) - a <= 0.0) {
    const double eq = std::pow(a / b, 1.0 / r);
    return std::max(1.0, eq * std::pow(std::pow(A, -1.0 / phi) + T, phi));
  }
  const double beta = b * (r - 1.0);
  const double k = a > 0.0 ? a * (r - 1.0) * T / std::pow(a / b, 1.0 / r) + 1.0 : 1.0;
  const double lower_c = std::pow(std::max(1.0, beta), phi);
  const double upper_c = std::pow(k, phi) * std::pow(std::min(1.0, beta), -phi);
  return std::max(lower_c, upper_c);
}

double envelope_constant(const BoundingCurve& sub, const BoundingCurve& super) {
  return std::max(envelope_constant(sub.a, sub.b, sub.r, sub.A, sub.horizon()),
                  envelope_constant(super.a, super.b, super.r, super.A, super.horizon()));
}

}  // namespace hjbexec
