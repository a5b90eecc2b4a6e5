#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "hjbexec/model.hpp"
#include "hjbexec/pde_solver.hpp"
#include "hjbexec/strategy.hpp"

namespace hjbexec {

enum class StreamTag : std::uint64_t { Factor = 1, Price = 2 };

/// Seed of the substream (master, path, tag); splitmix64 mixing.
std::uint64_t stream_seed(std::uint64_t master, std::uint64_t path, StreamTag tag);

struct FactorPath {
  std::vector<double> y;   // one value per time
  std::vector<double> dW;  // factor increments, one per interval
  std::vector<double> dB;  // price increments, one per interval
};

/// Euler-Maruyama factor paths. Paths are regenerated on demand from their
/// substreams, so path i is the same whatever the evaluation order and
/// thread count, and the same across parameter sweeps.
class PathBatch {
 public:
  PathBatch(CoefficientFields fields, double y0, std::vector<double> times,
            std::size_t n_paths, std::uint64_t master_seed);

  std::size_t n_paths() const { return n_paths_; }
  const std::vector<double>& times() const { return times_; }
  std::uint64_t master_seed() const { return seed_; }
  double y0() const { return y0_; }
  FactorPath path(std::size_t index) const;

 private:
  CoefficientFields fields_;
  double y0_;
  std::vector<double> times_;
  std::size_t n_paths_;
  std::uint64_t seed_;
};

PathBatch simulate_factor_paths(const CoefficientFields& fields, double y0,
                                const std::vector<double>& times,
                                std::size_t n_paths, std::uint64_t master_seed);

/// Batch-wide mean and variance of the increments against 0 and dt.
struct IncrementCheck {
  double dW_mean_z = 0.0;  // standardized deviations
  double dW_var_z = 0.0;
  double dB_mean_z = 0.0;
  double dB_var_z = 0.0;
  bool ok = false;  // all within 5 standard errors
};
IncrementCheck check_increments(const PathBatch& batch, int threads = 0);

struct Histogram {
  std::vector<double> edges;  // counts.size() + 1 entries
  std::vector<std::size_t> counts;
};

struct QuantityStats {
  std::string name;
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;  // sample standard deviation (n - 1)
  double min = 0.0;
  double max = 0.0;
  double q05 = 0.0, q25 = 0.0, q75 = 0.0, q95 = 0.0;
  Histogram histogram;
};

/// Linear-interpolation quantile of sorted data.
double quantile_sorted(const std::vector<double>& sorted, double p);
/// Freedman-Diaconis bins on sorted data (single bin when the IQR is 0).
Histogram fd_histogram(const std::vector<double>& sorted);
QuantityStats summarize(const std::string& name, std::vector<double> values);

struct TerminalRecord {
  std::size_t path = 0;
  double X_T = 0.0;
  double Q_T = 0.0;
  double w_T = 0.0;
  double criterion = 0.0;
  double twap_criterion = 0.0;
};

struct ExperimentOptions {
  int threads = 0;
  int substeps = 1;
  bool with_twap = true;
  std::vector<double> probe_times;  // Q recorded at the nearest grid time
};

struct ExperimentResult {
  std::vector<TerminalRecord> records;
  std::vector<QuantityStats> stats;  // X_T, Q_T, w_T
  double criterion_mean = 0.0;
  double criterion_se = 0.0;
  double twap_mean = 0.0;
  double twap_se = 0.0;
  double value_prediction = 0.0;  // z(0, y0) |q0|^(1+phi)
  double mean_abs_QT_pow = 0.0;   // E |Q_T|^(1+phi)
  double max_abs_QT = 0.0;
  std::size_t sign_violation_paths = 0;
  std::size_t bound_violation_paths = 0;
  double worst_bound_margin = 0.0;
  std::size_t clamped_lookups = 0;
  double ell = 0.0;
  double kappa_hi = 0.0;
  std::vector<std::vector<double>> probe_Q;  // [probe][path]
};

/// Optimal execution on every path of the batch, plus TWAP on the same
/// innovations. Reductions run in path order.
ExperimentResult run_experiment(const ModelParams& params,
                                const CoefficientFields& fields,
                                const HjbSolution& solution,
                                const PathBatch& batch,
                                const ExperimentOptions& options = {});

enum class SweepParam { Penalty, Phi, Gamma };

/// "A" or "penalty", "phi", "gamma"; ConfigError otherwise.
SweepParam parse_sweep_param(const std::string& name);
std::string to_string(SweepParam p);
ModelParams with_value(ModelParams params, SweepParam p, double value);

struct SweepEntry {
  double value = 0.0;
  ModelParams params;
  bool converged = false;
  int iterations = 0;
  double z_origin = 0.0;
  std::string message;
  ExperimentResult result;      // empty when the solve did not converge
  ExecutionTrajectory exhibit;  // optimal trajectory on the exhibit path
};

/// Re-solves per value and reuses the same batch for every value.
std::vector<SweepEntry> comparative_statics(const ModelParams& base,
                                            const CoefficientFields& fields,
                                            const Grid& grid,
                                            const SolverOptions& solver,
                                            SweepParam param,
                                            const std::vector<double>& values,
                                            const PathBatch& batch,
                                            const ExperimentOptions& options = {},
                                            std::size_t exhibit_path = 0);

}  // namespace hjbexec
