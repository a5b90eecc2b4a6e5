#include "hjbexec/strategy.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "hjbexec/errors.hpp"
#include "hjbexec/hamiltonian.hpp"

namespace hjbexec {

namespace {

void check_inputs(const std::vector<double>& times, const std::vector<double>& y_path,
                  const std::vector<double>& dB) {
  if (times.size() < 2) throw UsageError("trajectory grid needs at least two times");
  if (y_path.size() != times.size()) throw UsageError("factor path length differs from the time grid");
  if (dB.size() + 1 != times.size()) throw UsageError("price increments must have one entry per interval");
}

ExecutionTrajectory empty_trajectory(const std::vector<double>& times,
                                     const std::vector<double>& y_path) {
  ExecutionTrajectory tr;
  const std::size_t n = times.size();
  tr.times = times;
  tr.y_path = y_path;
  tr.S_path.assign(n, 0.0);
  tr.nu_path.assign(n, 0.0);
  tr.Q_path.assign(n, 0.0);
  tr.X_path.assign(n, 0.0);
  tr.w_path.assign(n, 0.0);
  tr.cost.assign(n, 0.0);
  return tr;
}

// int_0^h (e^{-rate u})^p du
double decay_integral(double rate, double p, double h) {
  const double x = rate * p * h;
  if (x < 1e-10) return h * (1.0 - 0.5 * x);
  return -std::expm1(-x) / (rate * p);
}

}  // namespace

double interpolate_z(const HjbSolution& solution, double t, double y, std::size_t* clamped) {
  const Grid& g = solution.grid;
  t = std::clamp(t, 0.0, g.horizon);
  if (y < g.y_min || y > g.y_max) {
    if (clamped != nullptr) ++*clamped;
    y = std::clamp(y, g.y_min, g.y_max);
  }
  int i = std::min(static_cast<int>(std::floor(t / g.dt)), g.nt - 1);
  int j = std::min(static_cast<int>(std::floor((y - g.y_min) / g.dy)), g.ny - 2);
  i = std::max(i, 0);
  j = std::max(j, 0);
  const double wt = std::clamp((t - g.t(i)) / g.dt, 0.0, 1.0);
  const double wy = std::clamp((y - g.y(j)) / g.dy, 0.0, 1.0);
  const Field& z = solution.z;
  const double z0 = (1.0 - wy) * z(i, j) + wy * z(i, j + 1);
  const double z1 = (1.0 - wy) * z(i + 1, j) + wy * z(i + 1, j + 1);
  return (1.0 - wt) * z0 + wt * z1;
}

ExecutionTrajectory simulate_execution(const HjbSolution& solution, const ModelParams& params,
                                       const CoefficientFields& fields,
                                       const std::vector<double>& times,
                                       const std::vector<double>& y_path,
                                       const std::vector<double>& dB, double q0, double S0,
                                       double x0, int substeps) {
  check_inputs(times, y_path, dB);
  if (substeps < 1) throw UsageError("substeps must be >= 1");
  const double phi = params.impact_exponent;
  const double p = 1.0 + phi;
  const double gamma = params.risk_aversion;
  ExecutionTrajectory tr = empty_trajectory(times, y_path);
  const std::size_t n = times.size() - 1;

  double Q = q0, X = x0, S = S0, cost = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double y = y_path[i];
    const double kappa = fields.kappa(y);
    const double sig = fields.sigma(y);
    const double gs = gamma * std::pow(sig, p);
    const double z_here = interpolate_z(solution, times[i], y, &tr.clamped_lookups);
    const double rate_here = feedback_intensity(std::min(z_here, 0.0), kappa, phi);
    tr.S_path[i] = S;
    tr.Q_path[i] = Q;
    tr.X_path[i] = X;
    tr.w_path[i] = X + Q * S;
    tr.nu_path[i] = Q == 0.0 ? 0.0 : -rate_here * Q;
    tr.cost[i] = cost;
    if (i == n) break;

    const double h = (times[i + 1] - times[i]) / substeps;
    for (int k = 0; k < substeps; ++k) {
      double rate = rate_here;
      if (k > 0) {
        const double z = interpolate_z(solution, times[i] + k * h, y, nullptr);
        rate = feedback_intensity(std::min(z, 0.0), kappa, phi);
      }
      const double q_new = Q * std::exp(-rate * h);
      const double qp = std::pow(std::fabs(Q), p) * decay_integral(rate, p, h);
      const double impact = kappa * std::pow(rate, p) * qp;
      X += -S * (q_new - Q) - impact;
      cost += impact + gs * qp;
      Q = q_new;
    }
    S += sig * dB[i];
  }
  return tr;
}

ExecutionTrajectory constant_rate_trajectory(const ModelParams& params,
                                             const CoefficientFields& fields,
                                             const std::vector<double>& times,
                                             const std::vector<double>& y_path,
                                             const std::vector<double>& dB, double q0,
                                             double S0, double x0, double fraction) {
  check_inputs(times, y_path, dB);
  if (!(fraction >= 0.0 && fraction <= 1.0)) throw DomainError("rate fraction must lie in [0, 1]");
  const double phi = params.impact_exponent;
  const double p = 1.0 + phi;
  const double T = times.back() - times.front();
  const double nu = -fraction * q0 / T;
  const double gamma = params.risk_aversion;
  ExecutionTrajectory tr = empty_trajectory(times, y_path);
  const std::size_t n = times.size() - 1;

  // Q(t) = q0 (1 - fraction * s), s = (t - t0)/T; int |Q|^p dt in closed form.
  auto q_at = [&](double t) {
    const double s = (t - times.front()) / T;
    return q0 * (1.0 - fraction * s);
  };
  double X = x0, S = S0, cost = 0.0;
  for (std::size_t i = 0;; ++i) {
    const double y = y_path[i];
    const double Q = i == n && fraction == 1.0 ? 0.0 : q_at(times[i]);
    tr.S_path[i] = S;
    tr.Q_path[i] = Q;
    tr.X_path[i] = X;
    tr.w_path[i] = X + Q * S;
    tr.nu_path[i] = nu;
    tr.cost[i] = cost;
    if (i == n) break;
    const double kappa = fields.kappa(y);
    const double sig = fields.sigma(y);
    const double h = times[i + 1] - times[i];
    const double q_next = i + 1 == n && fraction == 1.0 ? 0.0 : q_at(times[i + 1]);
    double qp;
    if (fraction > 0.0) {
      const double u0 = std::fabs(Q), u1 = std::fabs(q_next);
      qp = (std::pow(u0, p + 1.0) - std::pow(u1, p + 1.0)) * h / ((p + 1.0) * (u0 - u1));
      if (!(u0 > u1)) qp = std::pow(u0, p) * h;
    } else {
      qp = std::pow(std::fabs(Q), p) * h;
    }
    const double impact = kappa * std::pow(std::fabs(nu), p) * h;
    X += -S * (q_next - Q) - impact;
    cost += impact + gamma * std::pow(sig, p) * qp;
    S += sig * dB[i];
  }
  return tr;
}

ExecutionTrajectory twap_trajectory(const ModelParams& params, const CoefficientFields& fields,
                                    const std::vector<double>& times,
                                    const std::vector<double>& y_path,
                                    const std::vector<double>& dB, double q0, double S0,
                                    double x0) {
  return constant_rate_trajectory(params, fields, times, y_path, dB, q0, S0, x0, 1.0);
}

double performance_criterion(const ExecutionTrajectory& traj, const ModelParams& params,
                             const CoefficientFields&) {
  if (traj.cost.empty()) throw UsageError("empty trajectory");
  return -traj.cost.back() -
         params.penalty * std::pow(std::fabs(traj.Q_path.back()), 1.0 + params.impact_exponent);
}

double twap_criterion_constant(double kappa, double sigma, double gamma, double phi,
                               double q0, double T) {
  const double p = 1.0 + phi;
  const double aq = std::fabs(q0);
  return -kappa * std::pow(aq / T, p) * T - gamma * std::pow(sigma, p) * std::pow(aq, p) * T / (2.0 + phi);
}

double inventory_bound(double t, double ell, double kappa_hi, double A, double phi, double q0,
                       double T) {
  const double eps = std::pow(A, -1.0 / phi);
  const double expo = std::pow(ell / kappa_hi, 1.0 / phi);
  return std::fabs(q0) * std::pow((T - t + eps) / (T + eps), expo);
}

InventoryBoundReport inventory_bound_check(const ExecutionTrajectory& traj, double ell,
                                           double kappa_hi, double A, double phi, double q0,
                                           double T) {
  InventoryBoundReport rep;
  rep.worst_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    const double bound = inventory_bound(traj.times[i], ell, kappa_hi, A, phi, q0, T);
    // relative slack for the last rounding in the exponential updates
    const double margin = bound - std::fabs(traj.Q_path[i]);
    rep.worst_margin = std::min(rep.worst_margin, margin);
    if (margin < -1e-12 * std::fabs(q0)) {
      ++rep.violations;
      rep.ok = false;
    }
  }
  return rep;
}

std::size_t sign_violations(const ExecutionTrajectory& traj, double q0) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < traj.times.size(); ++i) {
    if (q0 * traj.nu_path[i] > 0.0 || q0 * traj.Q_path[i] < 0.0) ++bad;
  }
  return bad;
}

}  // namespace hjbexec
