#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "hjbexec/montecarlo.hpp"
#include "hjbexec/pde_solver.hpp"

namespace hjbexec {

struct SingularSettings {
  std::vector<double> A_values{3, 10, 30, 100, 300, 1000};
  std::size_t n_paths = 10000;
  std::uint64_t master_seed = 20240101;
  int nt = 0;  // 0: min(1e4, max(base nt, ceil(A_max^(1/phi) T / 10)))
  SolverOptions solver;  // tol <= 0 selects 1e-9 (absolute) for the sweep
  int threads = 0;
  int substeps = 1;
};

/// Step count for the shared grid when `nt` is not fixed.
int singular_time_steps(const std::vector<double>& A_values, double phi, double T,
                        int base_nt);

struct PenaltyLevel {
  double A = 0.0;
  bool converged = false;
  int iterations = 0;
  double z_origin = 0.0;        // z^A(0, y0)
  double mean_QT_pow = 0.0;     // E |Q_T|^(1+phi)
  double max_QT = 0.0;          // max |Q_T| over the shared paths
  double mean_J = 0.0;
  double se_J = 0.0;
  double bound_m_over_A = 0.0;  // -m / A
  std::vector<double> Q_half;   // Q at T/2 per path
  std::vector<double> Q_T;      // Q at T per path
};

struct PenaltySweep {
  Grid grid;
  ModelParams base;
  std::vector<PenaltyLevel> levels;
  std::vector<HjbSolution> solutions;
  double twap_mean = 0.0;  // m, simulated on the shared paths
  double twap_se = 0.0;
  double tol = 0.0;        // solver tolerance used
  bool z_monotone = true;  // nodewise z^{A_i} >= z^{A_{i+1}} - 10 tol for t < T
  double worst_monotone_violation = 0.0;
};

/// Solves per A on one shared grid and internal time mesh and runs the
/// shared-path Monte Carlo per A. ConfigError if A_values is not strictly
/// increasing and positive.
PenaltySweep penalty_sweep(const ModelParams& base, const CoefficientFields& fields,
                           const Grid& base_grid, const SingularSettings& settings);

struct EnvelopeRow {
  double t = 0.0;
  double lower = 0.0;
  double upper = 0.0;
  double min_abs_z = 0.0;  // over y nodes, largest-A solution
  double max_abs_z = 0.0;
  bool inside = false;
  std::vector<double> cauchy_gaps;  // |z^{A_i} - z^{A_{i+1}}|(t, y0)
};

struct EnvelopeReport {
  double C = 0.0;
  double A = 0.0;
  bool all_inside = true;
  std::vector<EnvelopeRow> rows;
};

EnvelopeReport singular_envelope_check(const PenaltySweep& sweep,
                                       const std::vector<double>& t_values);

struct ConvergenceReport {
  std::size_t pathwise_half_violations = 0;  // q0 Q^{A_i}_{T/2} < q0 Q^{A_{i+1}}_{T/2}
  std::size_t pathwise_terminal_violations = 0;
  bool QT_pow_decreasing = true;
  bool QT_pow_below_bound = true;  // E|Q_T|^(1+phi) <= -m/A
  bool max_QT_nonincreasing = true;
  bool criterion_nonincreasing = true;
  bool criterion_above_twap = true;
  std::vector<std::string> notes;
};

ConvergenceReport constrained_convergence_report(const PenaltySweep& sweep);

}  // namespace hjbexec
