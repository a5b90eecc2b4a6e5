#include "hjbexec/montecarlo.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>

#include "hjbexec/errors.hpp"
#include "hjbexec/ode_bounds.hpp"
#include "hjbexec/parallel.hpp"

namespace hjbexec {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

struct Moments {
  double mean = 0.0;
  double sd = 0.0;
};

Moments moments(const std::vector<double>& v) {
  Moments m;
  if (v.empty()) return m;
  double s = 0.0;
  for (double x : v) s += x;
  m.mean = s / static_cast<double>(v.size());
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - m.mean) * (x - m.mean);
    m.sd = std::sqrt(ss / static_cast<double>(v.size() - 1));
  }
  return m;
}

std::size_t nearest_index(const std::vector<double>& times, double t) {
  auto it = std::lower_bound(times.begin(), times.end(), t);
  if (it == times.end()) return times.size() - 1;
  std::size_t i = static_cast<std::size_t>(it - times.begin());
  if (i > 0 && t - times[i - 1] < times[i] - t) --i;
  return i;
}

}  // namespace

std::uint64_t stream_seed(std::uint64_t master, std::uint64_t path, StreamTag tag) {
  std::uint64_t h = splitmix64(master);
  h = splitmix64(h ^ path);
  return splitmix64(h ^ static_cast<std::uint64_t>(tag));
}

PathBatch::PathBatch(CoefficientFields fields, double y0, std::vector<double> times,
                     std::size_t n_paths, std::uint64_t master_seed)
    : fields_(std::move(fields)),
      y0_(y0),
      times_(std::move(times)),
      n_paths_(n_paths),
      seed_(master_seed) {
  if (n_paths_ < 1) throw UsageError("n_paths must be >= 1");
  if (times_.size() < 2) throw UsageError("path grid needs at least two times");
  for (std::size_t i = 1; i < times_.size(); ++i) {
    if (!(times_[i] > times_[i - 1])) throw UsageError("path grid must be ascending");
  }
  if (!std::isfinite(y0_)) throw ConfigError("initial factor must be finite");
}

FactorPath PathBatch::path(std::size_t index) const {
  if (index >= n_paths_) throw UsageError("path index out of range");
  const std::size_t n = times_.size() - 1;
  FactorPath fp;
  fp.y.resize(n + 1);
  fp.dW.resize(n);
  fp.dB.resize(n);
  std::mt19937_64 gw(stream_seed(seed_, index, StreamTag::Factor));
  std::mt19937_64 gb(stream_seed(seed_, index, StreamTag::Price));
  std::normal_distribution<double> nw(0.0, 1.0), nb(0.0, 1.0);
  fp.y[0] = y0_;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = times_[i + 1] - times_[i];
    const double sh = std::sqrt(h);
    fp.dW[i] = sh * nw(gw);
    fp.dB[i] = sh * nb(gb);
    const double y = fp.y[i];
    fp.y[i + 1] = y + fields_.alpha(y) * h + fields_.beta(y) * fp.dW[i];
  }
  return fp;
}

PathBatch simulate_factor_paths(const CoefficientFields& fields, double y0,
                                const std::vector<double>& times, std::size_t n_paths,
                                std::uint64_t master_seed) {
  return PathBatch(fields, y0, times, n_paths, master_seed);
}

IncrementCheck check_increments(const PathBatch& batch, int threads) {
  const std::size_t np = batch.n_paths();
  std::vector<double> sw(np), sw2(np), sb(np), sb2(np);
  const auto& t = batch.times();
  parallel_for(np, resolve_threads(threads), [&](std::size_t p) {
    const FactorPath fp = batch.path(p);
    double a = 0, a2 = 0, b = 0, b2 = 0;
    for (std::size_t i = 0; i < fp.dW.size(); ++i) {
      const double sh = std::sqrt(t[i + 1] - t[i]);
      const double zw = fp.dW[i] / sh, zb = fp.dB[i] / sh;
      a += zw;
      a2 += zw * zw;
      b += zb;
      b2 += zb * zb;
    }
    sw[p] = a;
    sw2[p] = a2;
    sb[p] = b;
    sb2[p] = b2;
  });
  const double N = static_cast<double>(np) * static_cast<double>(t.size() - 1);
  auto total = [](const std::vector<double>& v) { return std::accumulate(v.begin(), v.end(), 0.0); };
  IncrementCheck c;
  c.dW_mean_z = total(sw) / N * std::sqrt(N);
  c.dW_var_z = (total(sw2) / N - 1.0) / std::sqrt(2.0 / N);
  c.dB_mean_z = total(sb) / N * std::sqrt(N);
  c.dB_var_z = (total(sb2) / N - 1.0) / std::sqrt(2.0 / N);
  c.ok = std::fabs(c.dW_mean_z) < 5 && std::fabs(c.dW_var_z) < 5 && std::fabs(c.dB_mean_z) < 5 &&
         std::fabs(c.dB_var_z) < 5;
  return c;
}

double quantile_sorted(const std::vector<double>& s, double p) {
  if (s.empty()) throw UsageError("quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw DomainError("quantile level must lie in [0, 1]");
  const double h = (static_cast<double>(s.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, s.size() - 1);
  return s[lo] + (h - static_cast<double>(lo)) * (s[hi] - s[lo]);
}

Histogram fd_histogram(const std::vector<double>& s) {
  Histogram hist;
  if (s.empty()) return hist;
  const double lo = s.front(), hi = s.back();
  const double iqr = quantile_sorted(s, 0.75) - quantile_sorted(s, 0.25);
  const double width = 2.0 * iqr * std::cbrt(1.0 / static_cast<double>(s.size()));
  std::size_t bins = 1;
  if (width > 0.0 && hi > lo) {
    bins = static_cast<std::size_t>(std::ceil((hi - lo) / width));
    bins = std::clamp<std::size_t>(bins, 1, 10000);
  }
  hist.edges.resize(bins + 1);
  for (std::size_t k = 0; k <= bins; ++k) {
    hist.edges[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins);
  }
  hist.edges.back() = hi;
  hist.counts.assign(bins, 0);
  const double span = hi - lo;
  for (double v : s) {
    std::size_t k = span > 0.0 ? static_cast<std::size_t>((v - lo) / span * static_cast<double>(bins)) : 0;
    hist.counts[std::min(k, bins - 1)]++;
  }
  return hist;
}

QuantityStats summarize(const std::string& name, std::vector<double> values) {
  if (values.empty()) throw UsageError("summarize: no values");
  QuantityStats q;
  q.name = name;
  q.n = values.size();
  const Moments m = moments(values);
  q.mean = m.mean;
  q.sd = m.sd;
  std::sort(values.begin(), values.end());
  q.min = values.front();
  q.max = values.back();
  q.q05 = quantile_sorted(values, 0.05);
  q.q25 = quantile_sorted(values, 0.25);
  q.q75 = quantile_sorted(values, 0.75);
  q.q95 = quantile_sorted(values, 0.95);
  q.histogram = fd_histogram(values);
  return q;
}

ExperimentResult run_experiment(const ModelParams& params, const CoefficientFields& fields,
                                const HjbSolution& solution, const PathBatch& batch,
                                const ExperimentOptions& options) {
  const auto& times = batch.times();
  if (std::fabs(times.back() - params.horizon) > 1e-12 * params.horizon || times.front() != 0.0) {
    throw UsageError("path grid must span [0, T]");
  }
  const double phi = params.impact_exponent;
  const double p = 1.0 + phi;
  const double q0 = params.initial_inventory;
  const double A = params.penalty;
  const double T = params.horizon;
  const std::size_t np = batch.n_paths();

  ExperimentResult res;
  res.kappa_hi = solution.kappa_bounds.hi;
  const bool check_bound = A > 0.0;
  if (check_bound) res.ell = ell_constant(solution.supersolution, A, T, phi);
  std::vector<std::size_t> probe_idx;
  for (double t : options.probe_times) probe_idx.push_back(nearest_index(times, t));
  res.probe_Q.assign(probe_idx.size(), std::vector<double>(np, 0.0));

  res.records.resize(np);
  std::vector<std::size_t> signs(np), bounds(np), clamps(np);
  std::vector<double> margins(np, std::numeric_limits<double>::infinity());
  parallel_for(np, resolve_threads(options.threads), [&](std::size_t i) {
    const FactorPath fp = batch.path(i);
    const ExecutionTrajectory tr =
        simulate_execution(solution, params, fields, times, fp.y, fp.dB, q0,
                           params.initial_price, params.initial_cash, options.substeps);
    TerminalRecord& rec = res.records[i];
    rec.path = i;
    rec.X_T = tr.X_path.back();
    rec.Q_T = tr.Q_path.back();
    rec.w_T = tr.w_path.back();
    rec.criterion = performance_criterion(tr, params, fields);
    signs[i] = sign_violations(tr, q0);
    clamps[i] = tr.clamped_lookups;
    if (check_bound) {
      const InventoryBoundReport b = inventory_bound_check(tr, res.ell, res.kappa_hi, A, phi, q0, T);
      bounds[i] = b.violations;
      margins[i] = b.worst_margin;
    }
    for (std::size_t k = 0; k < probe_idx.size(); ++k) res.probe_Q[k][i] = tr.Q_path[probe_idx[k]];
    if (options.with_twap) {
      const ExecutionTrajectory tw = twap_trajectory(params, fields, times, fp.y, fp.dB, q0,
                                                     params.initial_price, params.initial_cash);
      rec.twap_criterion = performance_criterion(tw, params, fields);
    }
  });

  std::vector<double> X(np), Q(np), W(np), J(np), TW(np);
  double qpow = 0.0;
  res.worst_bound_margin = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < np; ++i) {
    const TerminalRecord& r = res.records[i];
    X[i] = r.X_T;
    Q[i] = r.Q_T;
    W[i] = r.w_T;
    J[i] = r.criterion;
    TW[i] = r.twap_criterion;
    qpow += std::pow(std::fabs(r.Q_T), p);
    res.max_abs_QT = std::max(res.max_abs_QT, std::fabs(r.Q_T));
    res.sign_violation_paths += signs[i] > 0 ? 1 : 0;
    res.bound_violation_paths += bounds[i] > 0 ? 1 : 0;
    res.clamped_lookups += clamps[i];
    res.worst_bound_margin = std::min(res.worst_bound_margin, margins[i]);
  }
  res.mean_abs_QT_pow = qpow / static_cast<double>(np);
  const Moments mj = moments(J);
  res.criterion_mean = mj.mean;
  res.criterion_se = mj.sd / std::sqrt(static_cast<double>(np));
  if (options.with_twap) {
    const Moments mt = moments(TW);
    res.twap_mean = mt.mean;
    res.twap_se = mt.sd / std::sqrt(static_cast<double>(np));
  }
  res.value_prediction = interpolate_z(solution, 0.0, batch.y0()) * std::pow(std::fabs(q0), p);
  res.stats.push_back(summarize("X_T", X));
  res.stats.push_back(summarize("Q_T", Q));
  res.stats.push_back(summarize("w_T", W));
  return res;
}

SweepParam parse_sweep_param(const std::string& name) {
  if (name == "A" || name == "penalty") return SweepParam::Penalty;
  if (name == "phi") return SweepParam::Phi;
  if (name == "gamma") return SweepParam::Gamma;
  throw ConfigError("unknown sweep parameter '" + name + "' (expected A, phi or gamma)");
}

std::string to_string(SweepParam p) {
  switch (p) {
    case SweepParam::Penalty: return "A";
    case SweepParam::Phi: return "phi";
    case SweepParam::Gamma: return "gamma";
  }
  return "?";
}

ModelParams with_value(ModelParams params, SweepParam p, double value) {
  switch (p) {
    case SweepParam::Penalty: params.penalty = value; break;
    case SweepParam::Phi: params.impact_exponent = value; break;
    case SweepParam::Gamma: params.risk_aversion = value; break;
  }
  params.check();
  return params;
}

std::vector<SweepEntry> comparative_statics(const ModelParams& base,
                                            const CoefficientFields& fields, const Grid& grid,
                                            const SolverOptions& solver, SweepParam param,
                                            const std::vector<double>& values,
                                            const PathBatch& batch,
                                            const ExperimentOptions& options,
                                            std::size_t exhibit_path) {
  if (values.empty()) throw ConfigError("sweep needs at least one value");
  if (exhibit_path >= batch.n_paths()) throw UsageError("exhibit path out of range");
  std::vector<SweepEntry> out;
  out.reserve(values.size());
  const FactorPath exhibit = batch.path(exhibit_path);
  for (double v : values) {
    SweepEntry e;
    e.value = v;
    e.params = with_value(base, param, v);
    const HjbSolution sol = solve_hjb(e.params, fields, grid, solver);
    e.converged = sol.converged;
    e.iterations = sol.iterations;
    e.message = sol.message;
    e.z_origin = interpolate_z(sol, 0.0, e.params.initial_factor);
    if (sol.converged) {
      e.result = run_experiment(e.params, fields, sol, batch, options);
      e.exhibit = simulate_execution(sol, e.params, fields, batch.times(), exhibit.y, exhibit.dB,
                                     e.params.initial_inventory, e.params.initial_price,
                                     e.params.initial_cash, options.substeps);
    }
    out.push_back(std::move(e));
  }
  return out;
}

}  // namespace hjbexec
