#include "hjbexec/singular.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjbexec/errors.hpp"
#include "hjbexec/parallel.hpp"

namespace hjbexec {

int singular_time_steps(const std::vector<double>& A_values, double phi, double T, int base_nt) {
  if (A_values.empty()) throw ConfigError("singular sweep needs at least one A");
  const double a_max = *std::max_element(A_values.begin(), A_values.end());
  const double want = std::ceil(std::pow(a_max, 1.0 / phi) * T / 10.0);
  return static_cast<int>(std::min(1e4, std::max(static_cast<double>(base_nt), want)));
}

PenaltySweep penalty_sweep(const ModelParams& base, const CoefficientFields& fields,
                           const Grid& base_grid, const SingularSettings& settings) {
  const auto& As = settings.A_values;
  if (As.empty()) throw ConfigError("singular sweep needs at least one A");
  for (std::size_t i = 0; i < As.size(); ++i) {
    if (!(As[i] > 0.0) || !std::isfinite(As[i])) throw ConfigError("A values must be positive and finite");
    if (i > 0 && !(As[i] > As[i - 1])) throw ConfigError("A values must be strictly increasing");
  }
  base.check();
  PenaltySweep sw;
  sw.base = base;
  const int nt = settings.nt > 0 ? settings.nt
                                 : singular_time_steps(As, base.impact_exponent, base.horizon, base_grid.nt);
  sw.grid = build_grid(base_grid.y_min, base_grid.y_max, base_grid.ny, nt, base.horizon);

  SolverOptions opts = settings.solver;
  if (!(opts.tol > 0.0)) opts.tol = 1e-9;
  sw.tol = opts.tol;
  // One internal mesh for every A keeps the discretizations comparable.
  std::vector<long> mesh(static_cast<std::size_t>(nt), 1);
  for (double A : As) {
    ModelParams p = base;
    p.penalty = A;
    const std::vector<long> m = positivity_substeps(p, fields, sw.grid, opts);
    for (std::size_t n = 0; n < mesh.size(); ++n) mesh[n] = std::max(mesh[n], m[n]);
  }
  opts.min_substeps = mesh;

  const int threads = resolve_threads(settings.threads);
  sw.solutions.resize(As.size());
  // Each solve holds two fields on the internal mesh; at most two at a time.
  parallel_for(As.size(), std::min(threads, 2), [&](std::size_t i) {
    ModelParams p = base;
    p.penalty = As[i];
    sw.solutions[i] = solve_hjb(p, fields, sw.grid, opts);
  });

  const PathBatch batch = simulate_factor_paths(fields, base.initial_factor, sw.grid.times(),
                                                settings.n_paths, settings.master_seed);
  ExperimentOptions eo;
  eo.threads = threads;
  eo.substeps = settings.substeps;
  eo.probe_times = {0.5 * base.horizon, base.horizon};
  for (std::size_t i = 0; i < As.size(); ++i) {
    ModelParams p = base;
    p.penalty = As[i];
    const HjbSolution& sol = sw.solutions[i];
    PenaltyLevel lv;
    lv.A = As[i];
    lv.converged = sol.converged;
    lv.iterations = sol.iterations;
    lv.z_origin = interpolate_z(sol, 0.0, base.initial_factor);
    eo.with_twap = i == 0;
    const ExperimentResult r = run_experiment(p, fields, sol, batch, eo);
    if (i == 0) {
      sw.twap_mean = r.twap_mean;
      sw.twap_se = r.twap_se;
    }
    lv.mean_QT_pow = r.mean_abs_QT_pow;
    lv.max_QT = r.max_abs_QT;
    lv.mean_J = r.criterion_mean;
    lv.se_J = r.criterion_se;
    lv.Q_half = r.probe_Q[0];
    lv.Q_T = r.probe_Q[1];
    sw.levels.push_back(std::move(lv));
  }
  for (auto& lv : sw.levels) lv.bound_m_over_A = -sw.twap_mean / lv.A;

  for (std::size_t i = 0; i + 1 < sw.solutions.size(); ++i) {
    const Field& za = sw.solutions[i].z;
    const Field& zb = sw.solutions[i + 1].z;
    for (int n = 0; n < sw.grid.nt; ++n) {
      for (int j = 0; j < sw.grid.ny; ++j) {
        sw.worst_monotone_violation = std::max(sw.worst_monotone_violation, zb(n, j) - za(n, j));
      }
    }
  }
  sw.z_monotone = sw.worst_monotone_violation <= 10.0 * sw.tol;
  return sw;
}

EnvelopeReport singular_envelope_check(const PenaltySweep& sweep, const std::vector<double>& t_values) {
  if (sweep.solutions.empty()) throw UsageError("empty penalty sweep");
  const HjbSolution& last = sweep.solutions.back();
  const double T = sweep.base.horizon;
  const double phi = sweep.base.impact_exponent;
  EnvelopeReport rep;
  rep.A = last.params.penalty;
  rep.C = envelope_constant(last.subsolution, last.supersolution);
  for (double t : t_values) {
    if (!(t >= 0.0 && t < T)) throw DomainError("envelope times must lie in [0, T)");
    EnvelopeRow row;
    row.t = t;
    const Envelope env = blowup_envelope(rep.A, phi, t, rep.C, T);
    row.lower = env.lower;
    row.upper = env.upper;
    row.min_abs_z = std::numeric_limits<double>::infinity();
    for (int j = 0; j < last.grid.ny; ++j) {
      const double a = std::fabs(interpolate_z(last, t, last.grid.y(j)));
      row.min_abs_z = std::min(row.min_abs_z, a);
      row.max_abs_z = std::max(row.max_abs_z, a);
    }
    row.inside = row.min_abs_z >= row.lower && row.max_abs_z <= row.upper;
    rep.all_inside = rep.all_inside && row.inside;
    for (std::size_t i = 0; i + 1 < sweep.solutions.size(); ++i) {
      const double y0 = sweep.base.initial_factor;
      row.cauchy_gaps.push_back(std::fabs(interpolate_z(sweep.solutions[i], t, y0) -
                                          interpolate_z(sweep.solutions[i + 1], t, y0)));
    }
    rep.rows.push_back(std::move(row));
  }
  return rep;
}

ConvergenceReport constrained_convergence_report(const PenaltySweep& sweep) {
  ConvergenceReport rep;
  const double q0 = sweep.base.initial_inventory;
  const auto& lv = sweep.levels;
  const double slack = 1e-12 * std::max(1.0, std::fabs(q0));
  for (std::size_t i = 0; i + 1 < lv.size(); ++i) {
    for (std::size_t p = 0; p < lv[i].Q_half.size(); ++p) {
      if (q0 * lv[i + 1].Q_half[p] > q0 * lv[i].Q_half[p] + slack) ++rep.pathwise_half_violations;
      if (q0 * lv[i + 1].Q_T[p] > q0 * lv[i].Q_T[p] + slack) ++rep.pathwise_terminal_violations;
    }
    if (!(lv[i + 1].mean_QT_pow <= lv[i].mean_QT_pow)) rep.QT_pow_decreasing = false;
    if (lv[i + 1].max_QT > lv[i].max_QT) rep.max_QT_nonincreasing = false;
    const double se = std::hypot(lv[i].se_J, lv[i + 1].se_J);
    if (lv[i + 1].mean_J > lv[i].mean_J + 3.0 * se) rep.criterion_nonincreasing = false;
  }
  for (const auto& l : lv) {
    if (l.mean_QT_pow > l.bound_m_over_A) rep.QT_pow_below_bound = false;
    if (l.mean_J < sweep.twap_mean) rep.criterion_above_twap = false;
  }
  std::ostringstream os;
  os << "pathwise violations of q0*Q decreasing in A: " << rep.pathwise_half_violations
     << " at T/2, " << rep.pathwise_terminal_violations << " at T";
  rep.notes.push_back(os.str());
  if (q0 == 0.0) rep.notes.push_back("q0 = 0: all inventories vanish identically");
  return rep;
}

}  // namespace hjbexec
