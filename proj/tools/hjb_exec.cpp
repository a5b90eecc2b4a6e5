// hjb-exec: command-line front end for the execution solver.
#include <CLI11.hpp>

#include <iostream>
#include <sstream>

#include "hjbexec/cli_io.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Optimal execution under stochastic volatility and liquidity"};
  app.set_version_flag("--version", hjbexec::kSoftwareVersion);
  app.require_subcommand(1, 1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  std::string param;
  std::string values;

  const std::pair<const char*, const char*> commands[] = {
      {"validate", "check parameters and hypotheses, write validation.txt"},
      {"bounds", "sub- and supersolution curves"},
      {"solve", "solve for z on the grid"},
      {"simulate", "solve, then Monte Carlo the optimal strategy"},
      {"sweep", "comparative statics over one parameter"},
      {"singular", "penalty ladder toward the constrained problem"},
  };
  for (const auto& [name, help] : commands) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->add_option("--config", config_path, "TOML configuration (defaults when omitted)");
    sub->add_option("--out", out_dir, "output directory (overrides output.directory)");
    sub->add_option("--seed", seed, "master seed (overrides montecarlo.master_seed)");
    if (std::string(name) == "sweep") {
      sub->add_option("--param", param, "A, phi or gamma");
      sub->add_option("--values", values, "comma-separated values");
    }
  }

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : hjbexec::kExitUsage;
  }

  CLI::App* chosen = app.get_subcommands().front();
  hjbexec::RunRequest req;
  req.subcommand = chosen->get_name();
  req.config_path = config_path;
  req.out_dir = out_dir;
  if (chosen->count("--seed") > 0) req.seed = seed;
  if (!param.empty()) req.param = param;
  if (!values.empty()) {
    std::vector<double> v;
    std::stringstream ss(values);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        std::size_t used = 0;
        v.push_back(std::stod(item, &used));
        if (used != item.size()) throw std::invalid_argument(item);
      } catch (const std::exception&) {
        std::cerr << "error: --values: cannot parse '" << item << "'\n";
        return hjbexec::kExitUsage;
      }
    }
    req.values = v;
  }
  return hjbexec::run(req, std::cerr);
}
