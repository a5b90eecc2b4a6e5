#pragma once

#include <cstddef>
#include <vector>

#include "hjbexec/model.hpp"
#include "hjbexec/pde_solver.hpp"

namespace hjbexec {

/// One simulated execution. `cost` is the running integral of
/// kappa|nu|^(1+phi) + gamma sigma^(1+phi)|Q|^(1+phi).
struct ExecutionTrajectory {
  std::vector<double> times;
  std::vector<double> y_path;
  std::vector<double> S_path;
  std::vector<double> nu_path;
  std::vector<double> Q_path;
  std::vector<double> X_path;
  std::vector<double> w_path;
  std::vector<double> cost;
  std::size_t clamped_lookups = 0;  // z lookups with y outside the grid
};

/// Bilinear interpolation of z; exact at nodes. t and y are clamped to the
/// grid, and `clamped` (if given) is incremented when y had to be clamped.
double interpolate_z(const HjbSolution& solution, double t, double y,
                     std::size_t* clamped = nullptr);

/// Optimal feedback execution along a given factor path. y_path has one
/// entry per time, dB one entry per interval. Each interval is split into
/// `substeps` pieces with the rate frozen at the left end of each piece;
/// inventory, impact cost and running cost are integrated exactly under the
/// frozen rate, cash uses the price at the left end of the interval.
ExecutionTrajectory simulate_execution(const HjbSolution& solution,
                                       const ModelParams& params,
                                       const CoefficientFields& fields,
                                       const std::vector<double>& times,
                                       const std::vector<double>& y_path,
                                       const std::vector<double>& dB, double q0,
                                       double S0, double x0, int substeps = 1);

/// Constant rate nu = -fraction * q0 / T (fraction in [0, 1]); fraction = 1
/// is TWAP and ends flat.
ExecutionTrajectory constant_rate_trajectory(const ModelParams& params,
                                             const CoefficientFields& fields,
                                             const std::vector<double>& times,
                                             const std::vector<double>& y_path,
                                             const std::vector<double>& dB,
                                             double q0, double S0, double x0,
                                             double fraction);

ExecutionTrajectory twap_trajectory(const ModelParams& params,
                                    const CoefficientFields& fields,
                                    const std::vector<double>& times,
                                    const std::vector<double>& y_path,
                                    const std::vector<double>& dB, double q0,
                                    double S0, double x0);

/// -cost(T) - A |Q_T|^(1+phi).
double performance_criterion(const ExecutionTrajectory& traj,
                             const ModelParams& params,
                             const CoefficientFields& fields);

/// TWAP criterion under constant kappa, sigma:
/// -kappa (|q0|/T)^(1+phi) T - gamma sigma^(1+phi) |q0|^(1+phi) T / (2+phi).
double twap_criterion_constant(double kappa, double sigma, double gamma,
                               double phi, double q0, double T);

/// |q0| ((T - t + A^(-1/phi)) / (T + A^(-1/phi)))^((ell/kappa_hi)^(1/phi)).
double inventory_bound(double t, double ell, double kappa_hi, double A,
                       double phi, double q0, double T);

struct InventoryBoundReport {
  bool ok = true;
  double worst_margin = 0.0;  // min over samples of bound - |Q|
  std::size_t violations = 0;
};

InventoryBoundReport inventory_bound_check(const ExecutionTrajectory& traj,
                                           double ell, double kappa_hi, double A,
                                           double phi, double q0, double T);

/// Samples violating q0 nu <= 0 or q0 Q >= 0.
std::size_t sign_violations(const ExecutionTrajectory& traj, double q0);

}  // namespace hjbexec
