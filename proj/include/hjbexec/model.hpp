#pragma once

#include <functional>
#include <map>
#include <memory>
#include <string>
#include <variant>
#include <vector>

namespace hjbexec {

/// Scalar problem constants. Defaults reproduce the reference experiment
/// (horizon 5, liquidation of 15 shares, A = 3, phi = 0.75, gamma = 0.05).
struct ModelParams {
  double horizon = 5.0;            // T
  double impact_exponent = 0.75;   // phi, in (0, 1]
  double risk_aversion = 0.05;     // gamma >= 0
  double penalty = 3.0;            // A >= 0
  double initial_inventory = 15.0; // q0 (shares)
  double initial_price = 40.0;     // S0
  double initial_cash = 0.0;       // x0
  double initial_factor = 0.0;     // y0

  /// Throws ConfigError when a field is non-finite or out of range.
  void check() const;

  double cost_power() const { return 1.0 + impact_exponent; }
};

struct CoefficientSpec;

namespace coef {
struct Constant {
  double value;
};
struct Affine {
  double intercept;
  double slope;
};
// lo v ((scale * e^y) ^ hi)
struct ClampedExp {
  double scale;
  double lo;
  double hi;
};
// (base / inner(y))^exponent
struct PowerOf {
  double base;
  double exponent;
  std::shared_ptr<const CoefficientSpec> inner;
};
// Library-only extension point; bounds are obtained by sampling.
struct Callback {
  std::function<double(double)> fn;
  std::string name;
};
}  // namespace coef

/// One entry of the coefficient catalog.
struct CoefficientSpec {
  std::variant<coef::Constant, coef::Affine, coef::ClampedExp, coef::PowerOf,
               coef::Callback>
      form;

  static CoefficientSpec constant(double value);
  static CoefficientSpec affine(double intercept, double slope);
  static CoefficientSpec clamped_exp(double scale, double lo, double hi);
  static CoefficientSpec power_of(double base, double exponent,
                                  CoefficientSpec inner);
  static CoefficientSpec callback(std::function<double(double)> fn,
                                  std::string name);

  /// Catalog tag: constant, affine, clamped_exp, power_of_kappa, callback.
  std::string tag() const;
  std::string describe() const;
};

/// Builds a catalog entry from its tag and named parameters. power_of_kappa
/// needs `inner`. Unknown tags and missing parameters raise ConfigError.
CoefficientSpec coefficient_from_tag(const std::string& tag,
                                     const std::map<std::string, double>& params,
                                     const CoefficientSpec* inner = nullptr);

double evaluate_coefficient(const CoefficientSpec& spec, double y);

struct Bounds {
  double lo;
  double hi;
};

/// Range of the coefficient over [y_min, y_max]. Exact for catalog forms
/// (all are monotone), sampled for callbacks.
Bounds coefficient_bounds(const CoefficientSpec& spec, double y_min,
                          double y_max);

/// Range over the whole real line; entries may be infinite.
Bounds coefficient_bounds(const CoefficientSpec& spec);

/// kappa, sigma (liquidity and volatility as functions of the factor) and the
/// factor drift/diffusion alpha, beta, together with the global bounds
/// kappa_lo <= kappa <= kappa_hi, sigma_lo <= sigma <= sigma_hi.
class CoefficientFields {
 public:
  /// Bounds derived from the catalog forms; ConfigError when they are not
  /// finite or kappa is not bounded away from zero.
  CoefficientFields(CoefficientSpec kappa, CoefficientSpec sigma,
                    CoefficientSpec alpha, CoefficientSpec beta);
  CoefficientFields(CoefficientSpec kappa, CoefficientSpec sigma,
                    CoefficientSpec alpha, CoefficientSpec beta,
                    Bounds kappa_bounds, Bounds sigma_bounds);

  /// kappa = 0.05 v ((0.5 e^y) ^ 5000), sigma = (0.5 / kappa)^(-1/2),
  /// alpha = -5 y, beta = 1.
  static CoefficientFields reference(double kappa0 = 0.5);
  static CoefficientFields constant(double kappa, double sigma,
                                    double alpha = 0.0, double beta = 0.0);

  double kappa(double y) const { return evaluate_coefficient(kappa_, y); }
  double sigma(double y) const { return evaluate_coefficient(sigma_, y); }
  double alpha(double y) const { return evaluate_coefficient(alpha_, y); }
  double beta(double y) const { return evaluate_coefficient(beta_, y); }

  const Bounds& kappa_bounds() const { return kappa_bounds_; }
  const Bounds& sigma_bounds() const { return sigma_bounds_; }
  Bounds kappa_bounds_on(double y_min, double y_max) const;
  Bounds sigma_bounds_on(double y_min, double y_max) const;

  const CoefficientSpec& kappa_spec() const { return kappa_; }
  const CoefficientSpec& sigma_spec() const { return sigma_; }
  const CoefficientSpec& alpha_spec() const { return alpha_; }
  const CoefficientSpec& beta_spec() const { return beta_; }

 private:
  void check_bounds() const;

  CoefficientSpec kappa_;
  CoefficientSpec sigma_;
  CoefficientSpec alpha_;
  CoefficientSpec beta_;
  Bounds kappa_bounds_;
  Bounds sigma_bounds_;
};

struct ValidationReport {
  bool h2_bounds_ok = true;
  double worst_violation = 0.0;
  bool h3_ok = false;
  double h3_threshold = 0.0;
  std::vector<std::string> messages;
};

/// (gamma * sigma_hi^(1+phi) * kappa_hi^(1/phi) / phi)^(phi/(phi+1)); the
/// penalty must strictly exceed it for the bounding curves to decrease.
double h3_threshold(double gamma, double phi, double sigma_hi,
                    double kappa_hi);

/// Samples kappa and sigma on `sample_count` equispaced points of
/// [y_min, y_max] against the declared bounds and checks the penalty
/// threshold. Findings are reported, never thrown, except non-finite
/// parameters (ConfigError).
ValidationReport validate(const ModelParams& params,
                          const CoefficientFields& fields, int sample_count,
                          double y_min = -5.0, double y_max = 5.0);

}  // namespace hjbexec
