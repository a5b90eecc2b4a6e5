#include "hjbexec/pde_solver.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "hjbexec/errors.hpp"
#include "hjbexec/hamiltonian.hpp"

namespace hjbexec {

std::vector<double> Grid::times() const {
  std::vector<double> t(static_cast<std::size_t>(nt) + 1);
  for (int i = 0; i <= nt; ++i) t[static_cast<std::size_t>(i)] = this->t(i);
  return t;
}

std::vector<double> Grid::nodes() const {
  std::vector<double> y(static_cast<std::size_t>(ny));
  for (int j = 0; j < ny; ++j) y[static_cast<std::size_t>(j)] = this->y(j);
  return y;
}

Grid build_grid(double y_min, double y_max, int ny, int nt, double T) {
  if (!std::isfinite(y_min) || !std::isfinite(y_max) || !(y_min < y_max)) {
    throw ConfigError("grid: need finite y_min < y_max");
  }
  if (ny < 3) throw ConfigError("grid: ny must be >= 3");
  if (nt < 1) throw ConfigError("grid: nt must be >= 1");
  if (!(T > 0.0) || !std::isfinite(T)) throw ConfigError("grid: T must be > 0");
  Grid g;
  g.y_min = y_min;
  g.y_max = y_max;
  g.ny = ny;
  g.nt = nt;
  g.horizon = T;
  g.dy = (y_max - y_min) / (ny - 1);
  g.dt = T / nt;
  return g;
}

Field::Field(int rows, int cols, double value)
    : rows_(rows),
      cols_(cols),
      data_(static_cast<std::size_t>(rows) * static_cast<std::size_t>(cols), value) {
  if (rows < 0 || cols < 0) throw UsageError("negative field shape");
}

namespace {

// Interior rows of the discretized b^2/2 d_yy + a d_y with the boundary
// extrapolation folded in. Index i corresponds to node j = i + 1.
struct SpatialOperator {
  int n = 0;
  std::vector<double> lo, di, up;
  bool monotone = true;
};

SpatialOperator build_operator(const CoefficientFields& fields, const Grid& g) {
  SpatialOperator op;
  op.n = g.ny - 2;
  const auto n = static_cast<std::size_t>(op.n);
  op.lo.assign(n, 0.0);
  op.di.assign(n, 0.0);
  op.up.assign(n, 0.0);
  const double dy = g.dy;
  for (std::size_t i = 0; i < n; ++i) {
    const double y = g.y(static_cast<int>(i) + 1);
    const double alpha = fields.alpha(y);
    const double beta = fields.beta(y);
    if (!std::isfinite(alpha) || !std::isfinite(beta)) {
      throw NumericError("non-finite drift or diffusion coefficient");
    }
    const double diff = 0.5 * beta * beta / (dy * dy);
    double l, u;
    if (std::fabs(alpha) * dy <= beta * beta) {
      l = std::max(0.0, diff - 0.5 * alpha / dy);
      u = std::max(0.0, diff + 0.5 * alpha / dy);
    } else if (alpha > 0.0) {
      l = diff;
      u = diff + alpha / dy;
    } else {
      l = diff - alpha / dy;
      u = diff;
    }
    op.lo[i] = l;
    op.up[i] = u;
    op.di[i] = -(l + u);
  }
  if (n == 1) {
    op.di[0] = op.lo[0] + op.di[0] + op.up[0];
    op.lo[0] = op.up[0] = 0.0;
  } else {
    op.di[0] += 2.0 * op.lo[0];
    op.up[0] -= op.lo[0];
    op.lo[0] = 0.0;
    op.di[n - 1] += 2.0 * op.up[n - 1];
    op.lo[n - 1] -= op.up[n - 1];
    op.up[n - 1] = 0.0;
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (op.lo[i] < 0.0 || op.up[i] < 0.0 || op.di[i] > 0.0) op.monotone = false;
  }
  return op;
}

class CnStepper {
 public:
  CnStepper(const SpatialOperator& op, int ny)
      : op_(op), ny_(ny), cp_(static_cast<std::size_t>(op.n)), dp_(static_cast<std::size_t>(op.n)) {}

  // h_cur from h_next over a step of length dt.
  void step(const double* h_next, double* h_cur, const double* c_next,
            const double* c_cur, const double* f_next, const double* f_cur,
            double dt) {
    const int n = op_.n;
    const double hd = 0.5 * dt;
    for (int i = 0; i < n; ++i) {
      const int j = i + 1;
      const auto ii = static_cast<std::size_t>(i);
      const double a = -hd * op_.lo[ii];
      const double b = 1.0 - hd * (op_.di[ii] + c_cur[j]);
      const double c = -hd * op_.up[ii];
      double rhs = h_next[j] + hd * ((op_.di[ii] + c_next[j]) * h_next[j] + f_cur[j] + f_next[j]);
      if (op_.lo[ii] != 0.0) rhs += hd * op_.lo[ii] * h_next[j - 1];
      if (op_.up[ii] != 0.0) rhs += hd * op_.up[ii] * h_next[j + 1];
      const double denom = i == 0 ? b : b - a * cp_[ii - 1];
      if (!(std::fabs(denom) > 1e-300) || !std::isfinite(denom)) {
        std::ostringstream os;
        os << "singular tridiagonal pivot at node " << j << " (dt = " << dt
           << ", c = " << c_cur[j] << ")";
        throw NumericError(os.str());
      }
      cp_[ii] = c / denom;
      dp_[ii] = (i == 0 ? rhs : rhs - a * dp_[ii - 1]) / denom;
    }
    h_cur[n] = dp_[static_cast<std::size_t>(n - 1)];
    for (int i = n - 2; i >= 0; --i) {
      const auto ii = static_cast<std::size_t>(i);
      h_cur[i + 1] = dp_[ii] - cp_[ii] * h_cur[i + 2];
    }
    if (n >= 2) {
      h_cur[0] = 2.0 * h_cur[1] - h_cur[2];
      h_cur[ny_ - 1] = 2.0 * h_cur[ny_ - 2] - h_cur[ny_ - 3];
    } else {
      h_cur[0] = h_cur[2] = h_cur[1];
    }
  }

 private:
  const SpatialOperator& op_;
  int ny_;
  std::vector<double> cp_, dp_;
};

// Substeps needed on a macro interval so that 1 + dt/2 (diag + c) >= 0.
long substeps(const SpatialOperator& op, const std::vector<double>& cabs, double dt) {
  double worst = 0.0;
  for (int i = 0; i < op.n; ++i) {
    worst = std::max(worst, std::fabs(op.di[static_cast<std::size_t>(i)]) +
                                cabs[static_cast<std::size_t>(i) + 1]);
  }
  return std::max<long>(1, static_cast<long>(std::ceil(0.5 * dt * worst * (1.0 + 1e-12))));
}

void check_shape(const Field& f, const Grid& g, const char* what) {
  if (f.rows() != g.nt + 1 || f.cols() != g.ny) {
    throw UsageError(std::string(what) + " does not match the grid shape");
  }
}

void check_finite(const std::vector<double>& v, const char* what) {
  for (double x : v) {
    if (!std::isfinite(x)) throw NumericError(std::string("non-finite entry in ") + what);
  }
}

// Solves y - dt/2 (b|y|^r - a) = rhs for y <= 0 (left side increasing in y).
double scalar_cn_solve(double rhs, double guess, double a, double b, double r, double dt) {
  const double hd = 0.5 * dt;
  auto g = [&](double y) { return y - hd * (b * abs_pow(y, r) - a); };
  double hi = 0.0;
  if (g(hi) < rhs) {
    throw NumericError("scalar Crank-Nicolson step has no nonpositive root");
  }
  double lo = std::min(guess, rhs) - 1.0;
  while (g(lo) > rhs) {
    lo = 2.0 * lo;
    if (!std::isfinite(lo)) throw NumericError("scalar Crank-Nicolson bracket failed");
  }
  double y = std::clamp(guess, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double gy = g(y) - rhs;
    if (gy > 0.0) hi = y; else lo = y;
    const double dg = 1.0 + hd * b * r * abs_pow(y, r - 1.0);
    double next = y - gy / dg;
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::fabs(next - y) <= 1e-16 * std::max(1.0, std::fabs(y)) || hi - lo <= 1e-300) {
      return next;
    }
    y = next;
  }
  return y;
}

}  // namespace

FrozenCoefficient freeze_coefficient(const BoundingCurve& subsolution,
                                     const CoefficientFields& fields,
                                     const Grid& grid, double phi) {
  if (subsolution.times.empty()) throw UsageError("freeze_coefficient: empty curve");
  if (std::fabs(subsolution.horizon() - grid.horizon) > 1e-12 * grid.horizon) {
    throw UsageError("freeze_coefficient: curve does not span the grid horizon");
  }
  FrozenCoefficient fc{Field(grid.nt + 1, grid.ny)};
  std::vector<double> kn(static_cast<std::size_t>(grid.ny));
  for (int j = 0; j < grid.ny; ++j) {
    kn[static_cast<std::size_t>(j)] = std::pow(fields.kappa(grid.y(j)), -1.0 / phi);
  }
  for (int i = 0; i <= grid.nt; ++i) {
    const double zp = abs_pow(subsolution.value_at(grid.t(i)), 1.0 / phi);
    for (int j = 0; j < grid.ny; ++j) {
      fc.c(i, j) = -(phi + 1.0) * zp * kn[static_cast<std::size_t>(j)];
    }
  }
  return fc;
}

Field solve_linear_pde(const Field& c, const Field& f, const std::vector<double>& terminal,
                       const CoefficientFields& fields, const Grid& grid,
                       LinearSolveInfo* info) {
  check_shape(c, grid, "c");
  check_shape(f, grid, "f");
  if (terminal.size() != static_cast<std::size_t>(grid.ny)) {
    throw UsageError("terminal data does not match the grid");
  }
  check_finite(c.data(), "c");
  check_finite(f.data(), "f");
  check_finite(terminal, "terminal data");

  const SpatialOperator op = build_operator(fields, grid);
  CnStepper stepper(op, grid.ny);
  const auto ny = static_cast<std::size_t>(grid.ny);
  Field out(grid.nt + 1, grid.ny);
  std::copy(terminal.begin(), terminal.end(), out.row(grid.nt));

  std::vector<double> h_next(terminal), h_cur(ny), cabs(ny);
  std::vector<double> c0(ny), c1(ny), f0(ny), f1(ny);
  long total = 0;
  bool nonpositive_c = true;
  for (double v : c.data()) nonpositive_c = nonpositive_c && v <= 0.0;

  for (int n = grid.nt - 1; n >= 0; --n) {
    for (std::size_t j = 0; j < ny; ++j) {
      cabs[j] = std::max(std::fabs(c(n, static_cast<int>(j))), std::fabs(c(n + 1, static_cast<int>(j))));
    }
    const long m = substeps(op, cabs, grid.dt);
    const double dt = grid.dt / static_cast<double>(m);
    total += m;
    auto interp = [&](const Field& src, double w, std::vector<double>& dst) {
      const double* a = src.row(n);
      const double* b = src.row(n + 1);
      for (std::size_t j = 0; j < ny; ++j) dst[j] = (1.0 - w) * a[j] + w * b[j];
    };
    for (long s = m - 1; s >= 0; --s) {
      const double w_next = static_cast<double>(s + 1) / static_cast<double>(m);
      const double w_cur = static_cast<double>(s) / static_cast<double>(m);
      interp(c, w_next, c1);
      interp(c, w_cur, c0);
      interp(f, w_next, f1);
      interp(f, w_cur, f0);
      stepper.step(h_next.data(), h_cur.data(), c1.data(), c0.data(), f1.data(), f0.data(), dt);
      std::swap(h_next, h_cur);
    }
    std::copy(h_next.begin(), h_next.end(), out.row(n));
  }
  if (info != nullptr) {
    info->internal_steps = total;
    info->discrete_monotone = op.monotone && nonpositive_c;
  }
  return out;
}

Field picard_step(const Field& z_prev, const FrozenCoefficient& c,
                  const CoefficientFields& fields, const Grid& grid, double phi,
                  double gamma, double A, const BoundingCurve* clamp_lower) {
  check_shape(z_prev, grid, "z_prev");
  check_shape(c.c, grid, "c");
  Field f(grid.nt + 1, grid.ny);
  for (int j = 0; j < grid.ny; ++j) {
    const double y = grid.y(j);
    const double kappa = fields.kappa(y);
    const double gs = gamma * std::pow(fields.sigma(y), 1.0 + phi);
    const double pk = phi * std::pow(kappa, -1.0 / phi);
    for (int i = 0; i <= grid.nt; ++i) {
      const double z = z_prev(i, j);
      f(i, j) = -gs + pk * abs_pow(z, 1.0 + 1.0 / phi) - c.c(i, j) * z;
    }
  }
  Field h = solve_linear_pde(c.c, f, std::vector<double>(static_cast<std::size_t>(grid.ny), -A),
                             fields, grid);
  for (int i = 0; i <= grid.nt; ++i) {
    const double lo = clamp_lower != nullptr ? clamp_lower->value_at(grid.t(i))
                                             : -std::numeric_limits<double>::infinity();
    for (int j = 0; j < grid.ny; ++j) h(i, j) = std::clamp(h(i, j), lo, 0.0);
  }
  return h;
}

BoundingCurve discrete_bounding_curve(double a, double b, double r, double A,
                                      const std::vector<double>& times, CurveKind kind) {
  if (!(a >= 0.0) || !(b > 0.0) || !(r > 1.0) || !(A >= 0.0)) {
    throw DomainError("bounding curve needs a >= 0, b > 0, r > 1, A >= 0");
  }
  if (times.size() < 2) throw UsageError("bounding curve needs at least two times");
  BoundingCurve c;
  c.kind = kind;
  c.a = a;
  c.b = b;
  c.r = r;
  c.A = A;
  c.reversed = b * std::pow(A, r) - a < 0.0;
  c.times = times;
  c.values.assign(times.size(), -A);
  for (std::size_t i = times.size() - 1; i > 0; --i) {
    const double dt = times[i] - times[i - 1];
    if (!(dt > 0.0)) throw UsageError("bounding curve times must be ascending");
    const double y1 = c.values[i];
    const double rhs = y1 + 0.5 * dt * (b * abs_pow(y1, r) - a);
    c.values[i - 1] = scalar_cn_solve(rhs, y1, a, b, r, dt);
  }
  return c;
}

std::vector<long> positivity_substeps(const ModelParams& params,
                                      const CoefficientFields& fields, const Grid& grid,
                                      const SolverOptions& options) {
  const double phi = params.impact_exponent;
  const double r = 1.0 + 1.0 / phi;
  const Bounds kb = options.bounds == BoundsSource::Domain
                        ? fields.kappa_bounds_on(grid.y_min, grid.y_max)
                        : fields.kappa_bounds();
  const Bounds sb = options.bounds == BoundsSource::Domain
                        ? fields.sigma_bounds_on(grid.y_min, grid.y_max)
                        : fields.sigma_bounds();
  const OdeData d = subsolution_data(params, kb, sb);
  const BoundingCurve sub = solve_bounding_ode(d.a, d.b, r, params.penalty, grid.times(),
                                               CurveKind::Subsolution, OdeRegime::Permissive);
  const SpatialOperator op = build_operator(fields, grid);
  const auto nyz = static_cast<std::size_t>(grid.ny);
  std::vector<double> kn(nyz), cabs(nyz);
  for (int j = 0; j < grid.ny; ++j) {
    kn[static_cast<std::size_t>(j)] = std::pow(fields.kappa(grid.y(j)), -1.0 / phi);
  }
  // The subsolution gives the largest |c| any sweep will see; 2% margin
  // covers the gap between the exact and the discrete curve.
  std::vector<long> m(static_cast<std::size_t>(grid.nt));
  for (std::size_t n = 0; n < m.size(); ++n) {
    const double zmax = 1.02 * std::max(std::fabs(sub.values[n]), std::fabs(sub.values[n + 1]));
    const double zp = abs_pow(zmax, 1.0 / phi);
    for (std::size_t j = 0; j < nyz; ++j) cabs[j] = (phi + 1.0) * zp * kn[j];
    m[n] = substeps(op, cabs, grid.dt);
  }
  return m;
}

HjbSolution solve_hjb(const ModelParams& params, const CoefficientFields& fields,
                      const Grid& grid, const SolverOptions& options) {
  params.check();
  if (std::fabs(grid.horizon - params.horizon) > 1e-12 * params.horizon) {
    throw ConfigError("grid horizon differs from T");
  }
  if (options.max_iter < 1) throw ConfigError("solver: max_iter must be >= 1");
  const double phi = params.impact_exponent;
  const double A = params.penalty;
  const double r = 1.0 + 1.0 / phi;
  const int ny = grid.ny;
  const auto nyz = static_cast<std::size_t>(ny);

  HjbSolution sol;
  sol.grid = grid;
  sol.params = params;
  sol.tol = options.tol > 0.0 ? options.tol : (A > 0.0 ? 1e-6 * A : 1e-12);
  if (options.bounds == BoundsSource::Domain) {
    sol.kappa_bounds = fields.kappa_bounds_on(grid.y_min, grid.y_max);
    sol.sigma_bounds = fields.sigma_bounds_on(grid.y_min, grid.y_max);
  } else {
    sol.kappa_bounds = fields.kappa_bounds();
    sol.sigma_bounds = fields.sigma_bounds();
  }
  const OdeData sub_d = subsolution_data(params, sol.kappa_bounds, sol.sigma_bounds);
  const OdeData sup_d = supersolution_data(params, sol.kappa_bounds, sol.sigma_bounds);
  sol.h3_ok = sub_d.b * std::pow(A, r) - sub_d.a > 0.0;
  if (!sol.h3_ok && options.require_h3) {
    throw ConfigError("penalty A does not exceed the threshold required for a decreasing subsolution");
  }

  const SpatialOperator op = build_operator(fields, grid);
  std::vector<double> kn(nyz), gs(nyz), pk(nyz);
  for (int j = 0; j < ny; ++j) {
    const double y = grid.y(j);
    const auto jj = static_cast<std::size_t>(j);
    kn[jj] = std::pow(fields.kappa(y), -1.0 / phi);
    gs[jj] = params.risk_aversion * std::pow(fields.sigma(y), 1.0 + phi);
    pk[jj] = phi * kn[jj];
  }

  std::vector<long> m = positivity_substeps(params, fields, grid, options);
  long total = 0;
  for (std::size_t n = 0; n < m.size(); ++n) {
    if (n < options.min_substeps.size()) m[n] = std::max(m[n], options.min_substeps[n]);
    total += m[n];
  }
  sol.discrete_monotone = op.monotone;
  if (total > options.max_internal_steps) {
    const double scale = static_cast<double>(options.max_internal_steps) / static_cast<double>(total);
    total = 0;
    for (auto& mi : m) {
      mi = std::max<long>(1, static_cast<long>(std::floor(static_cast<double>(mi) * scale)));
      total += mi;
    }
    sol.discrete_monotone = false;
  }
  std::vector<double> mesh;
  std::vector<std::size_t> macro_idx(static_cast<std::size_t>(grid.nt) + 1);
  mesh.reserve(static_cast<std::size_t>(total) + 1);
  for (int n = 0; n < grid.nt; ++n) {
    macro_idx[static_cast<std::size_t>(n)] = mesh.size();
    const long mn = m[static_cast<std::size_t>(n)];
    const double t0 = grid.t(n);
    const double t1 = grid.t(n + 1);
    for (long s = 0; s < mn; ++s) {
      mesh.push_back(t0 + (t1 - t0) * static_cast<double>(s) / static_cast<double>(mn));
    }
  }
  macro_idx.back() = mesh.size();
  mesh.push_back(grid.horizon);
  const std::size_t M = mesh.size() - 1;
  sol.internal_steps = static_cast<long>(M);

  const BoundingCurve sub = discrete_bounding_curve(sub_d.a, sub_d.b, r, A, mesh, CurveKind::Subsolution);
  const BoundingCurve sup = discrete_bounding_curve(sup_d.a, sup_d.b, r, A, mesh, CurveKind::Supersolution);

  for (std::size_t n = 0; n < M && sol.discrete_monotone; ++n) {
    const double zp = abs_pow(std::max(std::fabs(sub.values[n]), std::fabs(sub.values[n + 1])), 1.0 / phi);
    const double dt = mesh[n + 1] - mesh[n];
    for (int i = 0; i < op.n; ++i) {
      const double cc = (phi + 1.0) * zp * kn[static_cast<std::size_t>(i) + 1];
      if (0.5 * dt * (std::fabs(op.di[static_cast<std::size_t>(i)]) + cc) > 1.0) {
        sol.discrete_monotone = false;
        break;
      }
    }
  }

  Field L(static_cast<int>(M) + 1, ny), U(static_cast<int>(M) + 1, ny);
  for (std::size_t n = 0; n <= M; ++n) {
    std::fill(L.row(static_cast<int>(n)), L.row(static_cast<int>(n)) + ny, sub.values[n]);
    std::fill(U.row(static_cast<int>(n)), U.row(static_cast<int>(n)) + ny, sup.values[n]);
  }
  const double zmin = *std::min_element(sub.values.begin(), sub.values.end());
  const double guard_lo = zmin * (1.0 + 1e-6) - 1e-300;
  const double guard_hi = 1e-12;

  CnStepper stepper(op, ny);
  std::vector<double> c_next(nyz), c_cur(nyz), fl_next(nyz), fl_cur(nyz), fu_next(nyz), fu_cur(nyz);
  std::vector<double> old_l(nyz), old_u(nyz), new_l(nyz), new_u(nyz);

  auto coefficients = [&](std::size_t n, const double* lrow, const double* urow,
                          std::vector<double>& c, std::vector<double>& fl, std::vector<double>& fu) {
    const double sub_p = abs_pow(sub.values[n], 1.0 / phi);
    for (std::size_t j = 0; j < nyz; ++j) {
      const double lp = abs_pow(lrow[j], 1.0 / phi);
      const double up = abs_pow(urow[j], 1.0 / phi);
      const double base = options.freeze == FreezeMode::Refreeze ? lp : sub_p;
      c[j] = -(phi + 1.0) * base * kn[j];
      fl[j] = -gs[j] + pk[j] * std::fabs(lrow[j]) * lp - c[j] * lrow[j];
      fu[j] = -gs[j] + pk[j] * std::fabs(urow[j]) * up - c[j] * urow[j];
    }
  };

  for (int k = 1; k <= options.max_iter; ++k) {
    IterationRecord rec;
    rec.k = k;
    coefficients(M, L.row(static_cast<int>(M)), U.row(static_cast<int>(M)), c_next, fl_next, fu_next);
    for (std::size_t nn = M; nn-- > 0;) {
      const int n = static_cast<int>(nn);
      std::copy(L.row(n), L.row(n) + ny, old_l.begin());
      std::copy(U.row(n), U.row(n) + ny, old_u.begin());
      coefficients(nn, old_l.data(), old_u.data(), c_cur, fl_cur, fu_cur);
      const double dt = mesh[nn + 1] - mesh[nn];
      stepper.step(L.row(n + 1), new_l.data(), c_next.data(), c_cur.data(), fl_next.data(), fl_cur.data(), dt);
      stepper.step(U.row(n + 1), new_u.data(), c_next.data(), c_cur.data(), fu_next.data(), fu_cur.data(), dt);
      const double lo = sub.values[nn];
      for (std::size_t j = 0; j < nyz; ++j) {
        const double l = new_l[j];
        const double u = new_u[j];
        if (!(l >= guard_lo && l <= guard_hi && u >= guard_lo && u <= guard_hi)) {
          std::ostringstream os;
          os.precision(10);
          os << "iterate left the admissible band at sweep " << k << ", t = " << mesh[nn]
             << ", y = " << grid.y(static_cast<int>(j)) << " (lower " << l << ", upper " << u
             << ")";
          sol.aborted = true;
          sol.message = os.str();
          break;
        }
        new_l[j] = std::clamp(l, lo, 0.0);
        new_u[j] = std::clamp(u, lo, 0.0);
        rec.lower_violation = std::max(rec.lower_violation, old_l[j] - new_l[j]);
        rec.upper_violation = std::max(rec.upper_violation, new_u[j] - old_u[j]);
        rec.lower_change = std::max(rec.lower_change, std::fabs(new_l[j] - old_l[j]));
        rec.upper_change = std::max(rec.upper_change, std::fabs(new_u[j] - old_u[j]));
        rec.gap = std::max(rec.gap, std::fabs(new_u[j] - new_l[j]));
      }
      if (sol.aborted) break;
      std::copy(new_l.begin(), new_l.end(), L.row(n));
      std::copy(new_u.begin(), new_u.end(), U.row(n));
      std::swap(c_next, c_cur);
      std::swap(fl_next, fl_cur);
      std::swap(fu_next, fu_cur);
    }
    if (sol.aborted) break;
    sol.history.push_back(rec);
    sol.iterations = k;
    sol.gap = rec.gap;
    if (rec.gap < sol.tol) {
      sol.converged = true;
      break;
    }
  }

  sol.z = Field(grid.nt + 1, ny);
  sol.lower = Field(grid.nt + 1, ny);
  sol.upper = Field(grid.nt + 1, ny);
  std::vector<double> sub_macro(static_cast<std::size_t>(grid.nt) + 1), sup_macro(sub_macro.size());
  for (int n = 0; n <= grid.nt; ++n) {
    const std::size_t src = macro_idx[static_cast<std::size_t>(n)];
    sub_macro[static_cast<std::size_t>(n)] = sub.values[src];
    sup_macro[static_cast<std::size_t>(n)] = sup.values[src];
    for (int j = 0; j < ny; ++j) {
      const double l = L(static_cast<int>(src), j);
      const double u = U(static_cast<int>(src), j);
      sol.lower(n, j) = l;
      sol.upper(n, j) = u;
      sol.z(n, j) = n == grid.nt ? -A : 0.5 * (l + u);
    }
  }
  sol.subsolution = sub;
  sol.subsolution.times = grid.times();
  sol.subsolution.values = std::move(sub_macro);
  sol.supersolution = sup;
  sol.supersolution.times = grid.times();
  sol.supersolution.values = std::move(sup_macro);

  if (!sol.aborted) {
    std::ostringstream os;
    os.precision(6);
    os << (sol.converged ? "converged" : "not converged") << " after " << sol.iterations
       << " sweeps, gap " << sol.gap << " (tol " << sol.tol << ")";
    if (!sol.h3_ok) os << "; penalty below the threshold, reversed subsolution used";
    if (!sol.discrete_monotone) os << "; discrete comparison not guaranteed";
    sol.message = os.str();
  }
  return sol;
}

}  // namespace hjbexec
