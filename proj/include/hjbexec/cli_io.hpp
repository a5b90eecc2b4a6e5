#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "hjbexec/config.hpp"
#include "hjbexec/montecarlo.hpp"
#include "hjbexec/singular.hpp"

namespace hjbexec {

inline constexpr const char* kSoftwareVersion = "0.1.0";

enum ExitCode : int {
  kExitOk = 0,
  kExitNotConverged = 1,
  kExitUsage = 2,
  kExitSemantic = 3,
  kExitUnwritable = 4,
};

/// Output directory cannot be created or written.
class OutputError : public std::runtime_error {
 public:
  explicit OutputError(const std::string& what) : std::runtime_error(what) {}
};

/// %.17g
std::string format_double(double v);

std::string solution_csv(const HjbSolution& sol);
std::string solution_metadata(const HjbSolution& sol);
std::string history_csv(const HjbSolution& sol);
std::string curve_csv(const BoundingCurve& curve);
std::string stats_csv(const std::vector<QuantityStats>& stats);
std::string histogram_csv(const std::vector<QuantityStats>& stats);
std::string terminal_csv(const std::vector<TerminalRecord>& records);
std::string trajectory_csv(const ExecutionTrajectory& traj);
std::string singular_csv(const PenaltySweep& sweep);

struct Manifest {
  std::string subcommand;
  std::string timestamp;
  std::string config_hash;
  std::uint64_t seed = 0;
  std::string version;
};

std::string manifest_text(const Manifest& m);
/// Reads back manifest_text output; ConfigError on missing entries.
Manifest parse_manifest(const std::string& text);

struct RunRequest {
  std::string subcommand;
  std::string config_path;  // empty: built-in defaults
  std::string out_dir;      // empty: output.directory from the config
  std::optional<std::uint64_t> seed;
  std::optional<std::string> param;
  std::optional<std::vector<double>> values;
  int threads = 0;  // 0: HJB_EXEC_THREADS or hardware concurrency
};

/// Runs one subcommand (validate, bounds, solve, simulate, sweep, singular)
/// and writes its files. Diagnostics go to `log`. Returns an ExitCode.
int run(const RunRequest& request, std::ostream& log);

/// Same, on an already loaded config.
int run(const std::string& subcommand, RunConfig config, const std::string& out_dir,
        int threads, std::ostream& log);

}  // namespace hjbexec
