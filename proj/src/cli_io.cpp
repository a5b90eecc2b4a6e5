#include "hjbexec/cli_io.hpp"

#include <cmath>
#include <cstdio>
#include <ctime>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <sstream>

#include "hjbexec/errors.hpp"
#include "hjbexec/parallel.hpp"

namespace hjbexec {

namespace fs = std::filesystem;

std::string format_double(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

namespace {

std::string label(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

void write_file(const fs::path& dir, const std::string& name, const std::string& content) {
  const fs::path p = dir / name;
  std::ofstream f(p, std::ios::binary | std::ios::trunc);
  if (!f) throw OutputError("cannot write " + p.string());
  f << content;
  if (!f.flush()) throw OutputError("cannot write " + p.string());
}

fs::path prepare_dir(const std::string& out_dir) {
  const fs::path dir(out_dir);
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec || !fs::is_directory(dir)) throw OutputError("cannot create output directory " + out_dir);
  const fs::path probe = dir / ".write_probe";
  {
    std::ofstream f(probe, std::ios::binary | std::ios::trunc);
    if (!f || !(f << "x") || !f.flush()) throw OutputError("output directory " + out_dir + " is not writable");
  }
  fs::remove(probe, ec);
  return dir;
}

std::string utc_timestamp() {
  const std::time_t now = std::time(nullptr);
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string kv(const std::string& k, const std::string& v) { return k + " = " + v + "\n"; }
std::string kv(const std::string& k, double v) { return kv(k, format_double(v)); }
std::string kvb(const std::string& k, bool v) { return kv(k, std::string(v ? "true" : "false")); }
std::string kvi(const std::string& k, long long v) { return kv(k, std::to_string(v)); }

std::string experiment_summary(const ExperimentResult& r) {
  std::string s;
  s += kv("criterion_mean", r.criterion_mean);
  s += kv("criterion_se", r.criterion_se);
  s += kv("twap_mean", r.twap_mean);
  s += kv("twap_se", r.twap_se);
  s += kv("value_prediction", r.value_prediction);
  s += kv("mean_abs_QT_pow", r.mean_abs_QT_pow);
  s += kv("max_abs_QT", r.max_abs_QT);
  s += kvi("sign_violation_paths", static_cast<long long>(r.sign_violation_paths));
  s += kvi("bound_violation_paths", static_cast<long long>(r.bound_violation_paths));
  s += kv("worst_bound_margin", r.worst_bound_margin);
  s += kvi("clamped_lookups", static_cast<long long>(r.clamped_lookups));
  s += kv("ell", r.ell);
  s += kv("kappa_hi", r.kappa_hi);
  return s;
}

void write_experiment(const fs::path& dir, const std::string& suffix, const ExperimentResult& r,
                      const ExecutionTrajectory& exhibit) {
  write_file(dir, "stats" + suffix + ".csv", stats_csv(r.stats));
  write_file(dir, "histogram" + suffix + ".csv", histogram_csv(r.stats));
  write_file(dir, "terminal" + suffix + ".csv", terminal_csv(r.records));
  write_file(dir, "trajectory" + suffix + ".csv", trajectory_csv(exhibit));
  write_file(dir, "summary" + suffix + ".txt", experiment_summary(r));
}

ExperimentOptions experiment_options(const RunConfig& cfg, int threads) {
  ExperimentOptions o;
  o.threads = threads;
  o.substeps = cfg.substeps;
  return o;
}

int cmd_validate(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const CoefficientFields fields = cfg.fields();
  const ValidationReport rep = validate(cfg.model, fields, 1001, cfg.y_min, cfg.y_max);
  const Bounds kd = fields.kappa_bounds_on(cfg.y_min, cfg.y_max);
  const Bounds sd = fields.sigma_bounds_on(cfg.y_min, cfg.y_max);
  std::string s;
  s += kvb("h2_bounds_ok", rep.h2_bounds_ok);
  s += kv("worst_violation", rep.worst_violation);
  s += kvb("h3_ok", rep.h3_ok);
  s += kv("h3_threshold", rep.h3_threshold);
  s += kv("penalty", cfg.model.penalty);
  s += kv("kappa_declared_lo", fields.kappa_bounds().lo);
  s += kv("kappa_declared_hi", fields.kappa_bounds().hi);
  s += kv("sigma_declared_lo", fields.sigma_bounds().lo);
  s += kv("sigma_declared_hi", fields.sigma_bounds().hi);
  s += kv("kappa_domain_lo", kd.lo);
  s += kv("kappa_domain_hi", kd.hi);
  s += kv("sigma_domain_lo", sd.lo);
  s += kv("sigma_domain_hi", sd.hi);
  s += kv("penalty_floor", penalty_floor(cfg.model.risk_aversion, cfg.model.impact_exponent, sd.lo, kd.lo));
  for (std::size_t i = 0; i < rep.messages.size(); ++i) s += kv("message_" + std::to_string(i), rep.messages[i]);
  write_file(dir, "validation.txt", s);
  for (const auto& m : rep.messages) log << "validate: " << m << "\n";
  return kExitOk;
}

int cmd_bounds(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const CoefficientFields fields = cfg.fields();
  const Grid grid = cfg.grid();
  const bool domain = cfg.bounds == "domain";
  const Bounds kb = domain ? fields.kappa_bounds_on(grid.y_min, grid.y_max) : fields.kappa_bounds();
  const Bounds sb = domain ? fields.sigma_bounds_on(grid.y_min, grid.y_max) : fields.sigma_bounds();
  const ModelParams& p = cfg.model;
  const double r = 1.0 + 1.0 / p.impact_exponent;
  const OdeData sd = subsolution_data(p, kb, sb);
  const OdeData pd = supersolution_data(p, kb, sb);
  const std::vector<double> times = grid.times();
  const BoundingCurve sub = solve_bounding_ode(sd.a, sd.b, r, p.penalty, times, CurveKind::Subsolution,
                                               cfg.require_h3 ? OdeRegime::Strict : OdeRegime::Permissive);
  const BoundingCurve sup = solve_bounding_ode(pd.a, pd.b, r, p.penalty, times, CurveKind::Supersolution,
                                               OdeRegime::Permissive);
  write_file(dir, "subsolution.csv", curve_csv(sub));
  write_file(dir, "supersolution.csv", curve_csv(sup));
  std::string s;
  s += kv("r", r);
  s += kv("sub_a", sub.a);
  s += kv("sub_b", sub.b);
  s += kvb("sub_reversed", sub.reversed);
  s += kv("sub_at_0", sub.values.front());
  s += kv("super_a", sup.a);
  s += kv("super_b", sup.b);
  s += kvb("super_reversed", sup.reversed);
  s += kv("super_at_0", sup.values.front());
  s += kv("ell", p.penalty > 0.0 ? ell_constant(sup, p.penalty, p.horizon, p.impact_exponent) : 0.0);
  s += kv("envelope_C", envelope_constant(sub, sup));
  s += kv("penalty_floor", penalty_floor(p.risk_aversion, p.impact_exponent, sb.lo, kb.lo));
  write_file(dir, "bounds.txt", s);
  if (sub.reversed) log << "bounds: penalty below the decreasing-subsolution threshold, subsolution increases toward -A\n";
  return kExitOk;
}

HjbSolution solve_logged(const RunConfig& cfg, const ModelParams& params, const CoefficientFields& fields,
                         const Grid& grid, std::ostream& log) {
  HjbSolution sol = solve_hjb(params, fields, grid, cfg.solver());
  log << "solve: " << (sol.converged ? "converged" : "not converged") << " after " << sol.iterations
      << " iterations, gap " << format_double(sol.gap) << "\n";
  if (!sol.message.empty()) log << "solve: " << sol.message << "\n";
  return sol;
}

int cmd_solve(const RunConfig& cfg, const fs::path& dir, std::ostream& log) {
  const CoefficientFields fields = cfg.fields();
  const HjbSolution sol = solve_logged(cfg, cfg.model, fields, cfg.grid(), log);
  write_file(dir, "solution.csv", solution_csv(sol));
  write_file(dir, "solution_meta.txt", solution_metadata(sol));
  write_file(dir, "history.csv", history_csv(sol));
  return sol.converged ? kExitOk : kExitNotConverged;
}

int cmd_simulate(const RunConfig& cfg, const fs::path& dir, int threads, std::ostream& log) {
  const CoefficientFields fields = cfg.fields();
  const Grid grid = cfg.grid();
  const HjbSolution sol = solve_logged(cfg, cfg.model, fields, grid, log);
  write_file(dir, "solution.csv", solution_csv(sol));
  write_file(dir, "solution_meta.txt", solution_metadata(sol));
  write_file(dir, "history.csv", history_csv(sol));
  if (!sol.converged) return kExitNotConverged;
  const PathBatch batch = simulate_factor_paths(fields, cfg.model.initial_factor, grid.times(),
                                                static_cast<std::size_t>(cfg.n_paths), cfg.master_seed);
  const ExperimentResult r = run_experiment(cfg.model, fields, sol, batch, experiment_options(cfg, threads));
  const FactorPath fp = batch.path(static_cast<std::size_t>(cfg.exhibit_path));
  const ExecutionTrajectory ex =
      simulate_execution(sol, cfg.model, fields, batch.times(), fp.y, fp.dB, cfg.model.initial_inventory,
                         cfg.model.initial_price, cfg.model.initial_cash, cfg.substeps);
  write_experiment(dir, "", r, ex);
  log << "simulate: mean criterion " << format_double(r.criterion_mean) << " (se "
      << format_double(r.criterion_se) << "), prediction " << format_double(r.value_prediction) << "\n";
  return kExitOk;
}

int cmd_sweep(const RunConfig& cfg, const fs::path& dir, int threads, std::ostream& log) {
  const CoefficientFields fields = cfg.fields();
  const Grid grid = cfg.grid();
  const SweepParam param = parse_sweep_param(cfg.sweep_param);
  const PathBatch batch = simulate_factor_paths(fields, cfg.model.initial_factor, grid.times(),
                                                static_cast<std::size_t>(cfg.n_paths), cfg.master_seed);
  const auto entries = comparative_statics(cfg.model, fields, grid, cfg.solver(), param, cfg.sweep_values,
                                           batch, experiment_options(cfg, threads),
                                           static_cast<std::size_t>(cfg.exhibit_path));
  std::string table = "param,value,converged,iterations,z_at_origin,mean_X_T,mean_Q_T,mean_w_T,sd_X_T,sd_Q_T,sd_w_T,criterion_mean,criterion_se\n";
  bool all = true;
  for (const auto& e : entries) {
    all = all && e.converged;
    table += to_string(param) + "," + format_double(e.value) + "," + (e.converged ? "1" : "0") + "," +
             std::to_string(e.iterations) + "," + format_double(e.z_origin);
    if (e.converged) {
      for (const auto& q : e.result.stats) table += "," + format_double(q.mean);
      for (const auto& q : e.result.stats) table += "," + format_double(q.sd);
      table += "," + format_double(e.result.criterion_mean) + "," + format_double(e.result.criterion_se);
      write_experiment(dir, "_" + to_string(param) + "_" + label(e.value), e.result, e.exhibit);
    } else {
      table += ",,,,,,,,";
      log << "sweep: " << to_string(param) << " = " << label(e.value) << " did not converge: " << e.message << "\n";
    }
    table += "\n";
  }
  write_file(dir, "sweep.csv", table);
  return all ? kExitOk : kExitNotConverged;
}

int cmd_singular(const RunConfig& cfg, const fs::path& dir, int threads, std::ostream& log) {
  const CoefficientFields fields = cfg.fields();
  SingularSettings st;
  st.A_values = cfg.singular_A;
  st.n_paths = static_cast<std::size_t>(cfg.singular_paths);
  st.master_seed = cfg.master_seed;
  st.nt = cfg.singular_nt;
  st.solver = cfg.solver();
  st.threads = threads;
  st.substeps = cfg.substeps;
  const PenaltySweep sweep = penalty_sweep(cfg.model, fields, cfg.grid(), st);
  write_file(dir, "singular.csv", singular_csv(sweep));

  const EnvelopeReport env = singular_envelope_check(sweep, cfg.envelope_times);
  std::string e = "t,lower,upper,min_abs_z,max_abs_z,inside\n";
  for (const auto& row : env.rows) {
    e += format_double(row.t) + "," + format_double(row.lower) + "," + format_double(row.upper) + "," +
         format_double(row.min_abs_z) + "," + format_double(row.max_abs_z) + "," + (row.inside ? "1" : "0") + "\n";
  }
  write_file(dir, "envelope.csv", e);

  const ConvergenceReport c = constrained_convergence_report(sweep);
  std::string s;
  s += kvi("nt", sweep.grid.nt);
  s += kv("tol", sweep.tol);
  s += kv("twap_mean", sweep.twap_mean);
  s += kv("twap_se", sweep.twap_se);
  s += kvb("z_monotone", sweep.z_monotone);
  s += kv("worst_monotone_violation", sweep.worst_monotone_violation);
  s += kv("envelope_C", env.C);
  s += kvb("envelope_inside", env.all_inside);
  s += kvi("pathwise_half_violations", static_cast<long long>(c.pathwise_half_violations));
  s += kvi("pathwise_terminal_violations", static_cast<long long>(c.pathwise_terminal_violations));
  s += kvb("QT_pow_decreasing", c.QT_pow_decreasing);
  s += kvb("QT_pow_below_bound", c.QT_pow_below_bound);
  s += kvb("max_QT_nonincreasing", c.max_QT_nonincreasing);
  s += kvb("criterion_nonincreasing", c.criterion_nonincreasing);
  s += kvb("criterion_above_twap", c.criterion_above_twap);
  for (std::size_t i = 0; i < c.notes.size(); ++i) s += kv("note_" + std::to_string(i), c.notes[i]);
  write_file(dir, "singular_report.txt", s);

  bool all = true;
  for (const auto& l : sweep.levels) {
    if (!l.converged) {
      all = false;
      log << "singular: A = " << label(l.A) << " did not converge\n";
    }
  }
  return all ? kExitOk : kExitNotConverged;
}

}  // namespace

std::string solution_csv(const HjbSolution& sol) {
  const Grid& g = sol.grid;
  std::string s = "t,y,z\n";
  s.reserve(static_cast<std::size_t>(g.nt + 1) * static_cast<std::size_t>(g.ny) * 64);
  for (int i = 0; i <= g.nt; ++i) {
    const std::string t = format_double(g.t(i)) + ",";
    for (int j = 0; j < g.ny; ++j) {
      s += t;
      s += format_double(g.y(j));
      s += ",";
      s += format_double(sol.z(i, j));
      s += "\n";
    }
  }
  return s;
}

std::string solution_metadata(const HjbSolution& sol) {
  const Grid& g = sol.grid;
  const ModelParams& p = sol.params;
  std::string s;
  s += kv("y_min", g.y_min);
  s += kv("y_max", g.y_max);
  s += kvi("ny", g.ny);
  s += kvi("nt", g.nt);
  s += kv("T", p.horizon);
  s += kv("phi", p.impact_exponent);
  s += kv("gamma", p.risk_aversion);
  s += kv("A", p.penalty);
  s += kv("q0", p.initial_inventory);
  s += kv("kappa_lo", sol.kappa_bounds.lo);
  s += kv("kappa_hi", sol.kappa_bounds.hi);
  s += kv("sigma_lo", sol.sigma_bounds.lo);
  s += kv("sigma_hi", sol.sigma_bounds.hi);
  s += kvi("iterations", sol.iterations);
  s += kvb("converged", sol.converged);
  s += kvb("aborted", sol.aborted);
  s += kv("gap", sol.gap);
  s += kv("tol", sol.tol);
  s += kvi("internal_steps", sol.internal_steps);
  s += kvb("discrete_monotone", sol.discrete_monotone);
  s += kvb("h3_ok", sol.h3_ok);
  if (!sol.message.empty()) s += kv("message", sol.message);
  return s;
}

std::string history_csv(const HjbSolution& sol) {
  std::string s = "k,gap,lower_change,upper_change,lower_violation,upper_violation\n";
  for (const auto& h : sol.history) {
    s += std::to_string(h.k) + "," + format_double(h.gap) + "," + format_double(h.lower_change) + "," +
         format_double(h.upper_change) + "," + format_double(h.lower_violation) + "," +
         format_double(h.upper_violation) + "\n";
  }
  return s;
}

std::string curve_csv(const BoundingCurve& curve) {
  std::string s = "t,value\n";
  for (std::size_t i = 0; i < curve.times.size(); ++i) {
    s += format_double(curve.times[i]) + "," + format_double(curve.values[i]) + "\n";
  }
  return s;
}

std::string stats_csv(const std::vector<QuantityStats>& stats) {
  std::string s = "quantity,mean,std,q05,q25,q75,q95\n";
  for (const auto& q : stats) {
    s += q.name + "," + format_double(q.mean) + "," + format_double(q.sd) + "," + format_double(q.q05) + "," +
         format_double(q.q25) + "," + format_double(q.q75) + "," + format_double(q.q95) + "\n";
  }
  return s;
}

std::string histogram_csv(const std::vector<QuantityStats>& stats) {
  std::string s = "quantity,bin_left,bin_right,count\n";
  for (const auto& q : stats) {
    const Histogram& h = q.histogram;
    for (std::size_t b = 0; b < h.counts.size(); ++b) {
      s += q.name + "," + format_double(h.edges[b]) + "," + format_double(h.edges[b + 1]) + "," +
           std::to_string(h.counts[b]) + "\n";
    }
  }
  return s;
}

std::string terminal_csv(const std::vector<TerminalRecord>& records) {
  std::string s = "path,X_T,Q_T,w_T\n";
  for (const auto& r : records) {
    s += std::to_string(r.path) + "," + format_double(r.X_T) + "," + format_double(r.Q_T) + "," +
         format_double(r.w_T) + "\n";
  }
  return s;
}

std::string trajectory_csv(const ExecutionTrajectory& tr) {
  std::string s = "t,y,S,nu,Q,X,w\n";
  for (std::size_t i = 0; i < tr.times.size(); ++i) {
    s += format_double(tr.times[i]) + "," + format_double(tr.y_path[i]) + "," + format_double(tr.S_path[i]) +
         "," + format_double(tr.nu_path[i]) + "," + format_double(tr.Q_path[i]) + "," +
         format_double(tr.X_path[i]) + "," + format_double(tr.w_path[i]) + "\n";
  }
  return s;
}

std::string singular_csv(const PenaltySweep& sweep) {
  std::string s = "A,z_at_origin,mean_QT_pow,max_QT,mean_J\n";
  for (const auto& l : sweep.levels) {
    s += format_double(l.A) + "," + format_double(l.z_origin) + "," + format_double(l.mean_QT_pow) + "," +
         format_double(l.max_QT) + "," + format_double(l.mean_J) + "\n";
  }
  return s;
}

std::string manifest_text(const Manifest& m) {
  std::string s;
  s += kv("subcommand", m.subcommand);
  s += kv("timestamp", m.timestamp);
  s += kv("config_hash", m.config_hash);
  s += kv("seed", std::to_string(m.seed));
  s += kv("version", m.version);
  return s;
}

Manifest parse_manifest(const std::string& text) {
  std::map<std::string, std::string> kvs;
  std::istringstream in(text);
  std::string line;
  while (std::getline(in, line)) {
    const auto eq = line.find(" = ");
    if (eq == std::string::npos) continue;
    kvs[line.substr(0, eq)] = line.substr(eq + 3);
  }
  auto get = [&](const char* k) {
    auto it = kvs.find(k);
    if (it == kvs.end()) throw ConfigError(std::string("manifest: missing ") + k);
    return it->second;
  };
  Manifest m;
  m.subcommand = get("subcommand");
  m.timestamp = get("timestamp");
  m.config_hash = get("config_hash");
  m.seed = std::stoull(get("seed"));
  m.version = get("version");
  return m;
}

int run(const std::string& subcommand, RunConfig cfg, const std::string& out_dir, int threads,
        std::ostream& log) {
  static const char* known[] = {"validate", "bounds", "solve", "simulate", "sweep", "singular"};
  bool ok = false;
  for (const char* k : known) ok = ok || subcommand == k;
  if (!ok) {
    log << "error: unknown subcommand '" << subcommand << "'\n";
    return kExitUsage;
  }
  if (!out_dir.empty()) cfg.out_dir = out_dir;
  try {
    cfg.check();
    const fs::path dir = prepare_dir(cfg.out_dir);
    write_file(dir, "config.toml", cfg.canonical());
    Manifest m{subcommand, utc_timestamp(), hex64(cfg.hash()), cfg.master_seed, kSoftwareVersion};
    write_file(dir, "manifest.txt", manifest_text(m));
    const int t = resolve_threads(threads);
    if (subcommand == "validate") return cmd_validate(cfg, dir, log);
    if (subcommand == "bounds") return cmd_bounds(cfg, dir, log);
    if (subcommand == "solve") return cmd_solve(cfg, dir, log);
    if (subcommand == "simulate") return cmd_simulate(cfg, dir, t, log);
    if (subcommand == "sweep") return cmd_sweep(cfg, dir, t, log);
    return cmd_singular(cfg, dir, t, log);
  } catch (const OutputError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUnwritable;
  } catch (const UsageError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    log << "error: " << e.what() << "\n";
    return kExitSemantic;
  }
}

int run(const RunRequest& request, std::ostream& log) {
  RunConfig cfg;
  try {
    cfg = request.config_path.empty() ? parse_config("") : load_config(request.config_path);
    if (request.seed) cfg.master_seed = *request.seed;
    if (request.param) cfg.sweep_param = *request.param;
    if (request.values) cfg.sweep_values = *request.values;
  } catch (const ParseError& e) {
    log << "error: " << request.config_path << ": " << e.what() << "\n";
    return kExitUsage;
  } catch (const UsageError& e) {
    log << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ConfigError& e) {
    log << "error: " << e.what() << "\n";
    return kExitSemantic;
  }
  return run(request.subcommand, std::move(cfg), request.out_dir, request.threads, log);
}

}  // namespace hjbexec
