#pragma once

#include <string>
#include <vector>

#include "hjbexec/model.hpp"
#include "hjbexec/ode_bounds.hpp"

namespace hjbexec {

/// Uniform time-space grid: ny nodes on [y_min, y_max], nt steps on [0, T].
struct Grid {
  double y_min = -5.0;
  double y_max = 5.0;
  int ny = 201;
  int nt = 500;
  double horizon = 5.0;
  double dy = 0.05;
  double dt = 0.01;

  double y(int j) const { return j == ny - 1 ? y_max : y_min + j * dy; }
  double t(int i) const { return i == nt ? horizon : i * dt; }
  std::vector<double> times() const;
  std::vector<double> nodes() const;
};

/// ConfigError unless y_min < y_max, ny >= 3, nt >= 1, T > 0.
Grid build_grid(double y_min, double y_max, int ny, int nt, double T);

/// Row-major (time x space) array.
class Field {
 public:
  Field() = default;
  Field(int rows, int cols, double value = 0.0);

  int rows() const { return rows_; }
  int cols() const { return cols_; }
  double& operator()(int i, int j) { return data_[index(i, j)]; }
  double operator()(int i, int j) const { return data_[index(i, j)]; }
  double* row(int i) { return data_.data() + index(i, 0); }
  const double* row(int i) const { return data_.data() + index(i, 0); }
  const std::vector<double>& data() const { return data_; }

 private:
  std::size_t index(int i, int j) const {
    return static_cast<std::size_t>(i) * static_cast<std::size_t>(cols_) +
           static_cast<std::size_t>(j);
  }
  int rows_ = 0;
  int cols_ = 0;
  std::vector<double> data_;
};

/// c = -(phi+1) (|zsub(t)| / kappa(y))^(1/phi) on the grid nodes.
struct FrozenCoefficient {
  Field c;
};

FrozenCoefficient freeze_coefficient(const BoundingCurve& subsolution,
                                     const CoefficientFields& fields,
                                     const Grid& grid, double phi);

struct LinearSolveInfo {
  long internal_steps = 0;
  bool discrete_monotone = true;
};

/// Backward Crank-Nicolson for dt h + b^2/2 h_yy + a h_y + c h + f = 0,
/// h(T) = terminal. Each macro step is split into enough substeps for the
/// explicit half of the scheme to stay nonnegative; c and f are interpolated
/// linearly in time between grid rows. Boundary nodes are closed by linear
/// extrapolation from the two nearest interior nodes.
Field solve_linear_pde(const Field& c, const Field& f,
                       const std::vector<double>& terminal,
                       const CoefficientFields& fields, const Grid& grid,
                       LinearSolveInfo* info = nullptr);

/// One Picard update: solves the linear problem with frozen c and forcing
/// -gamma sigma^(1+phi) + phi kappa^(-1/phi)|z_prev|^(1+1/phi) - c z_prev and
/// terminal -A, then clamps into [clamp_lower(t), 0] (into (-inf, 0] when
/// clamp_lower is null).
Field picard_step(const Field& z_prev, const FrozenCoefficient& c,
                  const CoefficientFields& fields, const Grid& grid, double phi,
                  double gamma, double A,
                  const BoundingCurve* clamp_lower = nullptr);

/// Scalar Crank-Nicolson analogue of solve_bounding_ode on an arbitrary
/// ascending grid (the same time scheme the grid solver applies to
/// spatially constant data).
BoundingCurve discrete_bounding_curve(double a, double b, double r, double A,
                                      const std::vector<double>& times,
                                      CurveKind kind);

enum class BoundsSource {
  Domain,    // kappa/sigma range over [y_min, y_max]
  Declared,  // global catalog bounds
};

enum class FreezeMode {
  Refreeze,  // c recomputed from the current lower iterate every sweep
  Fixed,     // c computed once from the subsolution
};

struct SolverOptions {
  double tol = 0.0;  // <= 0 selects 1e-6 * A
  int max_iter = 100;
  BoundsSource bounds = BoundsSource::Domain;
  FreezeMode freeze = FreezeMode::Refreeze;
  long max_internal_steps = 200000;
  bool require_h3 = false;
  // Lower bounds on the substep count per macro interval; lets several solves
  // share one internal time mesh.
  std::vector<long> min_substeps;
};

struct IterationRecord {
  int k = 0;
  double gap = 0.0;              // sup |upper - lower|
  double lower_change = 0.0;     // sup |lower_k - lower_{k-1}|
  double upper_change = 0.0;
  double lower_violation = 0.0;  // sup (lower_{k-1} - lower_k)^+
  double upper_violation = 0.0;  // sup (upper_k - upper_{k-1})^+
};

struct HjbSolution {
  Grid grid;
  Field z;
  Field lower;  // final lower bracket
  Field upper;  // final upper bracket
  BoundingCurve subsolution;    // seeds, sampled on grid times
  BoundingCurve supersolution;
  std::vector<IterationRecord> history;
  int iterations = 0;
  bool converged = false;
  bool aborted = false;
  double gap = 0.0;
  double tol = 0.0;
  ModelParams params;
  Bounds kappa_bounds{0.0, 0.0};
  Bounds sigma_bounds{0.0, 0.0};
  long internal_steps = 0;
  bool discrete_monotone = true;
  bool h3_ok = true;
  std::string message;
};

/// Substeps per macro interval that keep the explicit half of the scheme
/// nonnegative for every sweep of solve_hjb.
std::vector<long> positivity_substeps(const ModelParams& params,
                                      const CoefficientFields& fields, const Grid& grid,
                                      const SolverOptions& options = {});

/// Monotone bracketing iteration seeded by the sub- and supersolution.
/// Non-convergence is reported through `converged`, not thrown.
HjbSolution solve_hjb(const ModelParams& params, const CoefficientFields& fields,
                      const Grid& grid, const SolverOptions& options = {});

}  // namespace hjbexec
