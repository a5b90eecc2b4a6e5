#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "hjbexec/errors.hpp"
#include "hjbexec/model.hpp"
#include "hjbexec/pde_solver.hpp"

namespace hjbexec {

/// Syntax error in a configuration file, with its 1-based line.
class ParseError : public std::runtime_error {
 public:
  ParseError(int line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  int line() const { return line_; }

 private:
  int line_;
};

struct CoefficientEntry {
  std::string form;                              // catalog tag
  std::vector<std::pair<std::string, double>> params;  // sorted by name
};

struct RunConfig {
  ModelParams model;
  CoefficientEntry kappa{"clamped_exp", {{"hi", 5000.0}, {"lo", 0.05}, {"scale", 0.5}}};
  CoefficientEntry sigma{"power_of_kappa", {{"base", 0.5}, {"exponent", -0.5}}};
  CoefficientEntry alpha{"affine", {{"intercept", 0.0}, {"slope", -5.0}}};
  CoefficientEntry beta{"constant", {{"value", 1.0}}};

  double y_min = -5.0;
  double y_max = 5.0;
  int ny = 201;
  int nt = 500;

  double tol = 0.0;  // 0: 1e-6 * A
  int max_iter = 100;
  std::string bounds = "domain";    // domain | declared
  std::string freeze = "refreeze";  // refreeze | fixed
  long max_internal_steps = 200000;
  bool require_h3 = false;

  long n_paths = 10000;
  std::uint64_t master_seed = 20240101;
  int substeps = 1;

  std::string sweep_param = "gamma";
  std::vector<double> sweep_values{0.005, 0.05, 0.5};
  long exhibit_path = 0;

  std::vector<double> singular_A{3, 10, 30, 100, 300, 1000};
  long singular_paths = 10000;
  int singular_nt = 0;
  std::vector<double> envelope_times{0.0, 2.5, 4.9, 4.99};

  std::string out_dir = "out";

  /// Builds the fields; ConfigError (with the field path) on bad entries.
  CoefficientFields fields() const;
  Grid grid() const;
  SolverOptions solver() const;
  /// Full semantic validation; ConfigError naming the offending key.
  void check() const;

  /// Every key in a fixed order, floats with 17 significant digits. Parsing
  /// the canonical text gives back an identical config.
  std::string canonical() const;
  /// FNV-1a 64 of canonical().
  std::uint64_t hash() const;
};

/// TOML subset: [section] / [a.b] headers, key = value with numbers,
/// booleans, "strings" and [arrays] of numbers; '#' comments. Unknown
/// sections or keys raise ConfigError; syntax problems raise ParseError.
RunConfig parse_config(const std::string& text);

/// Reads and parses a file; an unreadable file raises UsageError.
RunConfig load_config(const std::string& path);

std::string hex64(std::uint64_t v);

}  // namespace hjbexec
