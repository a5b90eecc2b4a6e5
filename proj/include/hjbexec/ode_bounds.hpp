#pragma once

#include <vector>

#include "hjbexec/model.hpp"

namespace hjbexec {

enum class CurveKind { Subsolution, Supersolution };

const char* to_string(CurveKind kind);

/// Samples of y' = a - b|y|^r, y(T) = -A on an ascending time grid.
///
/// In the regular regime (b A^r > a) the curve decreases toward -A and stays
/// below -(a/b)^(1/r). In the reversed regime (only produced on request) it
/// increases toward -A from the side of -(a/b)^(1/r).
struct BoundingCurve {
  CurveKind kind = CurveKind::Subsolution;
  double a = 0.0;
  double b = 1.0;
  double r = 2.0;
  double A = 1.0;
  bool reversed = false;
  std::vector<double> times;
  std::vector<double> values;

  double horizon() const { return times.empty() ? 0.0 : times.back(); }
  /// Linear interpolation, clamped to the grid ends.
  double value_at(double t) const;
  /// -(a/b)^(1/r), the stationary point of the ODE.
  double equilibrium() const;
};

enum class OdeRegime {
  Strict,      // InfeasibleError unless b A^r > a
  Permissive,  // also accepts b A^r <= a (non-decreasing curve)
};

/// Backward RK4 from t = T, halving the step on each grid interval until two
/// successive refinements agree to 1e-10 relative. values.back() == -A.
BoundingCurve solve_bounding_ode(double a, double b, double r, double A,
                                 const std::vector<double>& time_grid,
                                 CurveKind kind = CurveKind::Subsolution,
                                 OdeRegime regime = OdeRegime::Strict);

/// Uniform grid 0, T/n, ..., T.
std::vector<double> uniform_times(double T, int n);

/// ODE data (a, b) for the sub- and supersolution from the kappa/sigma range.
struct OdeData {
  double a;
  double b;
};
OdeData subsolution_data(const ModelParams& p, Bounds kappa, Bounds sigma);
OdeData supersolution_data(const ModelParams& p, Bounds kappa, Bounds sigma);

/// -(gamma sigma_lo^(1+phi) kappa_lo^(1/phi) / phi)^(phi/(phi+1)).
double penalty_floor(double gamma, double phi, double sigma_lo, double kappa_lo);

/// min over the curve samples of |zbar(s)| (T - s + A^(-1/phi))^phi.
double ell_constant(const BoundingCurve& supersolution, double A, double T,
                    double phi);

/// {(1/T) exp[(ell/kappa_hi)^(-1/phi) ln(1/(1-theta))]}^phi.
double penalty_for_fraction(double theta, double ell, double kappa_hi, double T,
                            double phi);

struct Envelope {
  double lower;
  double upper;
};

/// (1/(C s^phi), C/s^phi) with s = A^(-1/phi) + T - t. A = +inf gives the
/// singular-limit envelope.
Envelope blowup_envelope(double A, double phi, double t, double C, double T);

/// Explicit envelope constant for one curve of the y' = a - b|y|^r family.
double envelope_constant(double a, double b, double r, double A, double T);

/// Constant valid for both curves (max of the two).
double envelope_constant(const BoundingCurve& sub, const BoundingCurve& super);

}  // namespace hjbexec
