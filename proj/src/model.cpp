#include "hjbexec/model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjbexec/errors.hpp"

namespace hjbexec {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

void require_finite(double v, const char* name) {
  if (!std::isfinite(v)) {
    throw ConfigError(std::string("non-finite parameter: ") + name);
  }
}

double param(const std::map<std::string, double>& p, const std::string& tag,
             const char* key) {
  auto it = p.find(key);
  if (it == p.end()) {
    throw ConfigError("coefficient '" + tag + "' requires parameter '" + key +
                      "'");
  }
  require_finite(it->second, key);
  return it->second;
}

Bounds sampled_bounds(const std::function<double(double)>& fn, double y_min,
                      double y_max) {
  constexpr int kSamples = 2001;
  Bounds b{kInf, -kInf};
  for (int i = 0; i < kSamples; ++i) {
    const double y = y_min + (y_max - y_min) * i / (kSamples - 1);
    const double v = fn(y);
    b.lo = std::min(b.lo, v);
    b.hi = std::max(b.hi, v);
  }
  return b;
}

Bounds power_bounds(const coef::PowerOf& p, Bounds inner) {
  if (!(inner.lo > 0.0)) {
    throw ConfigError("power_of_kappa requires a strictly positive inner field");
  }
  const double v1 = std::pow(p.base / inner.lo, p.exponent);
  const double v2 = std::isinf(inner.hi) ? (p.exponent < 0 ? kInf : 0.0)
                                         : std::pow(p.base / inner.hi, p.exponent);
  return {std::min(v1, v2), std::max(v1, v2)};
}

}  // namespace

void ModelParams::check() const {
  require_finite(horizon, "T");
  require_finite(impact_exponent, "phi");
  require_finite(risk_aversion, "gamma");
  require_finite(penalty, "A");
  require_finite(initial_inventory, "q0");
  require_finite(initial_price, "S0");
  require_finite(initial_cash, "x0");
  require_finite(initial_factor, "y0");
  if (!(horizon > 0.0)) throw ConfigError("T must be > 0");
  if (!(impact_exponent > 0.0 && impact_exponent <= 1.0)) {
    throw ConfigError("phi must lie in (0, 1]");
  }
  if (risk_aversion < 0.0) throw ConfigError("gamma must be >= 0");
  if (penalty < 0.0) throw ConfigError("A must be >= 0");
}

CoefficientSpec CoefficientSpec::constant(double value) {
  return {coef::Constant{value}};
}
CoefficientSpec CoefficientSpec::affine(double intercept, double slope) {
  return {coef::Affine{intercept, slope}};
}
CoefficientSpec CoefficientSpec::clamped_exp(double scale, double lo,
                                             double hi) {
  if (!(scale > 0.0) || !(lo >= 0.0) || !(hi > lo)) {
    throw ConfigError("clamped_exp requires scale > 0 and 0 <= lo < hi");
  }
  return {coef::ClampedExp{scale, lo, hi}};
}
CoefficientSpec CoefficientSpec::power_of(double base, double exponent,
                                          CoefficientSpec inner) {
  if (!(base > 0.0)) throw ConfigError("power_of_kappa requires base > 0");
  return {coef::PowerOf{base, exponent,
                        std::make_shared<const CoefficientSpec>(std::move(inner))}};
}
CoefficientSpec CoefficientSpec::callback(std::function<double(double)> fn,
                                          std::string name) {
  return {coef::Callback{std::move(fn), std::move(name)}};
}

std::string CoefficientSpec::tag() const {
  return std::visit(Overloaded{
                        [](const coef::Constant&) { return std::string("constant"); },
                        [](const coef::Affine&) { return std::string("affine"); },
                        [](const coef::ClampedExp&) { return std::string("clamped_exp"); },
                        [](const coef::PowerOf&) { return std::string("power_of_kappa"); },
                        [](const coef::Callback&) { return std::string("callback"); },
                    },
                    form);
}

std::string CoefficientSpec::describe() const {
  std::ostringstream os;
  os.precision(17);
  std::visit(Overloaded{
                 [&](const coef::Constant& c) { os << "constant(" << c.value << ")"; },
                 [&](const coef::Affine& a) {
                   os << "affine(" << a.intercept << " + " << a.slope << "*y)";
                 },
                 [&](const coef::ClampedExp& c) {
                   os << "clamped_exp(" << c.lo << " v (" << c.scale << "*e^y) ^ " << c.hi
                      << ")";
                 },
                 [&](const coef::PowerOf& p) {
                   os << "power_of_kappa((" << p.base << "/kappa)^" << p.exponent << ")";
                 },
                 [&](const coef::Callback& c) { os << "callback(" << c.name << ")"; },
             },
             form);
  return os.str();
}

CoefficientSpec coefficient_from_tag(const std::string& tag,
                                     const std::map<std::string, double>& p,
                                     const CoefficientSpec* inner) {
  if (tag == "constant") return CoefficientSpec::constant(param(p, tag, "value"));
  if (tag == "affine") {
    return CoefficientSpec::affine(param(p, tag, "intercept"), param(p, tag, "slope"));
  }
  if (tag == "clamped_exp") {
    return CoefficientSpec::clamped_exp(param(p, tag, "scale"), param(p, tag, "lo"),
                                        param(p, tag, "hi"));
  }
  if (tag == "power_of_kappa") {
    if (inner == nullptr) {
      throw ConfigError("power_of_kappa needs the kappa field as its inner entry");
    }
    return CoefficientSpec::power_of(param(p, tag, "base"), param(p, tag, "exponent"),
                                     *inner);
  }
  throw ConfigError("unknown coefficient catalog tag '" + tag + "'");
}

double evaluate_coefficient(const CoefficientSpec& spec, double y) {
  return std::visit(
      Overloaded{
          [](const coef::Constant& c) { return c.value; },
          [y](const coef::Affine& a) { return a.intercept + a.slope * y; },
          [y](const coef::ClampedExp& c) {
            return std::max(c.lo, std::min(c.scale * std::exp(y), c.hi));
          },
          [y](const coef::PowerOf& p) {
            return std::pow(p.base / evaluate_coefficient(*p.inner, y), p.exponent);
          },
          [y](const coef::Callback& c) {
            if (!c.fn) throw ConfigError("callback coefficient without a function");
            return c.fn(y);
          },
      },
      spec.form);
}

Bounds coefficient_bounds(const CoefficientSpec& spec, double y_min,
                          double y_max) {
  return std::visit(
      Overloaded{
          [](const coef::Constant& c) { return Bounds{c.value, c.value}; },
          [&](const coef::Affine& a) {
            const double v1 = a.intercept + a.slope * y_min;
            const double v2 = a.intercept + a.slope * y_max;
            return Bounds{std::min(v1, v2), std::max(v1, v2)};
          },
          [&](const coef::ClampedExp& c) {
            return Bounds{std::max(c.lo, std::min(c.scale * std::exp(y_min), c.hi)),
                          std::max(c.lo, std::min(c.scale * std::exp(y_max), c.hi))};
          },
          [&](const coef::PowerOf& p) {
            return power_bounds(p, coefficient_bounds(*p.inner, y_min, y_max));
          },
          [&](const coef::Callback& c) { return sampled_bounds(c.fn, y_min, y_max); },
      },
      spec.form);
}

Bounds coefficient_bounds(const CoefficientSpec& spec) {
  return std::visit(
      Overloaded{
          [](const coef::Constant& c) { return Bounds{c.value, c.value}; },
          [](const coef::Affine& a) {
            return a.slope == 0.0 ? Bounds{a.intercept, a.intercept} : Bounds{-kInf, kInf};
          },
          [](const coef::ClampedExp& c) { return Bounds{c.lo, c.hi}; },
          [](const coef::PowerOf& p) {
            return power_bounds(p, coefficient_bounds(*p.inner));
          },
          [](const coef::Callback&) { return Bounds{-kInf, kInf}; },
      },
      spec.form);
}

CoefficientFields::CoefficientFields(CoefficientSpec kappa, CoefficientSpec sigma,
                                     CoefficientSpec alpha, CoefficientSpec beta)
    : kappa_(std::move(kappa)),
      sigma_(std::move(sigma)),
      alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      kappa_bounds_(coefficient_bounds(kappa_)),
      sigma_bounds_(coefficient_bounds(sigma_)) {
  check_bounds();
}

CoefficientFields::CoefficientFields(CoefficientSpec kappa, CoefficientSpec sigma,
                                     CoefficientSpec alpha, CoefficientSpec beta,
                                     Bounds kappa_bounds, Bounds sigma_bounds)
    : kappa_(std::move(kappa)),
      sigma_(std::move(sigma)),
      alpha_(std::move(alpha)),
      beta_(std::move(beta)),
      kappa_bounds_(kappa_bounds),
      sigma_bounds_(sigma_bounds) {
  check_bounds();
}

void CoefficientFields::check_bounds() const {
  if (!(kappa_bounds_.lo > 0.0) || !std::isfinite(kappa_bounds_.hi) ||
      kappa_bounds_.hi < kappa_bounds_.lo) {
    throw ConfigError("kappa needs finite bounds with 0 < kappa_lo <= kappa_hi");
  }
  if (!(sigma_bounds_.lo >= 0.0) || !std::isfinite(sigma_bounds_.hi) ||
      sigma_bounds_.hi < sigma_bounds_.lo) {
    throw ConfigError("sigma needs finite bounds with 0 <= sigma_lo <= sigma_hi");
  }
}

CoefficientFields CoefficientFields::reference(double kappa0) {
  auto kappa = CoefficientSpec::clamped_exp(kappa0, kappa0 / 10.0, kappa0 * 1e4);
  auto sigma = CoefficientSpec::power_of(kappa0, -0.5, kappa);
  return CoefficientFields(std::move(kappa), std::move(sigma),
                           CoefficientSpec::affine(0.0, -5.0),
                           CoefficientSpec::constant(1.0));
}

CoefficientFields CoefficientFields::constant(double kappa, double sigma,
                                              double alpha, double beta) {
  return CoefficientFields(CoefficientSpec::constant(kappa),
                           CoefficientSpec::constant(sigma),
                           CoefficientSpec::constant(alpha),
                           CoefficientSpec::constant(beta));
}

Bounds CoefficientFields::kappa_bounds_on(double y_min, double y_max) const {
  return coefficient_bounds(kappa_, y_min, y_max);
}

Bounds CoefficientFields::sigma_bounds_on(double y_min, double y_max) const {
  return coefficient_bounds(sigma_, y_min, y_max);
}

double h3_threshold(double gamma, double phi, double sigma_hi, double kappa_hi) {
  const double inner = gamma * std::pow(sigma_hi, 1.0 + phi) *
                       std::pow(kappa_hi, 1.0 / phi) / phi;
  return std::pow(inner, phi / (phi + 1.0));
}

ValidationReport validate(const ModelParams& params, const CoefficientFields& fields,
                          int sample_count, double y_min, double y_max) {
  params.check();
  if (sample_count < 2) throw UsageError("validate needs sample_count >= 2");
  if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_min < y_max)) {
    throw ConfigError("validation domain must satisfy y_min < y_max");
  }

  ValidationReport report;
  const Bounds kb = fields.kappa_bounds();
  const Bounds sb = fields.sigma_bounds();
  for (int i = 0; i < sample_count; ++i) {
    const double y = y_min + (y_max - y_min) * i / (sample_count - 1);
    const double k = fields.kappa(y);
    const double s = fields.sigma(y);
    const double viol = std::max({kb.lo - k, k - kb.hi, sb.lo - s, s - sb.hi, 0.0});
    if (!std::isfinite(k) || !std::isfinite(s)) {
      report.h2_bounds_ok = false;
      report.worst_violation = kInf;
      continue;
    }
    report.worst_violation = std::max(report.worst_violation, viol);
  }
  if (report.worst_violation > 0.0) {
    report.h2_bounds_ok = false;
    std::ostringstream os;
    os << "kappa/sigma leave their declared bounds by up to " << report.worst_violation;
    report.messages.push_back(os.str());
  }

  const double phi = params.impact_exponent;
  report.h3_threshold = h3_threshold(params.risk_aversion, phi, sb.hi, kb.hi);
  report.h3_ok = params.penalty > report.h3_threshold;
  {
    std::ostringstream os;
    os.precision(10);
    os << "penalty A = " << params.penalty << (report.h3_ok ? " exceeds" : " does not exceed")
       << " the threshold " << report.h3_threshold;
    if (!report.h3_ok) os << " (warning: bounding subsolution will not be decreasing)";
    report.messages.push_back(os.str());
  }
  if (sb.lo == 0.0) {
    report.messages.push_back("sigma_lo = 0: penalty floor degenerates to 0");
  }
  return report;
}

}  // namespace hjbexec
