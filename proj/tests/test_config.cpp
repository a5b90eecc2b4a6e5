#include <doctest.h>

#include <cmath>

#include "hjbexec/config.hpp"
#include "hjbexec/errors.hpp"

using namespace hjbexec;

TEST_CASE("empty text gives the reference preset") {
  const RunConfig c = parse_config("");
  CHECK(c.model.horizon == 5.0);
  CHECK(c.model.initial_inventory == 15.0);
  CHECK(c.model.impact_exponent == 0.75);
  CHECK(c.model.risk_aversion == 0.05);
  CHECK(c.model.penalty == 3.0);
  CHECK(c.y_min == -5.0);
  CHECK(c.y_max == 5.0);
  const auto f = c.fields();
  CHECK(f.kappa(0.0) == doctest::Approx(0.5));
  CHECK(f.kappa_bounds().lo == doctest::Approx(0.05));
  CHECK(f.kappa_bounds().hi == doctest::Approx(5000.0));
  CHECK(f.alpha(1.0) == -5.0);
  CHECK(f.beta(2.0) == 1.0);
}

TEST_CASE("impact exponent out of range is a semantic error") {
  try {
    parse_config("[model]\nphi = 1.5\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("model") != std::string::npos);
  }
}

TEST_CASE("penalty sweep configuration") {
  const RunConfig c = parse_config("[model]\nA = 10\ngamma = 0.05\nphi = 0.75\n");
  CHECK(c.model.penalty == 10.0);
  CHECK(c.model.risk_aversion == 0.05);
  CHECK(c.model.impact_exponent == 0.75);
}

TEST_CASE("unknown keys and sections name the field") {
  try {
    parse_config("[solver]\ntolerance = 1e-6\n");
    FAIL("expected an error");
  } catch (const ConfigError& e) {
    CHECK(std::string(e.what()).find("solver.tolerance") != std::string::npos);
  }
  CHECK_THROWS_AS(parse_config("[plots]\nx = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("T = 5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[coefficients.kappa]\nform = \"constant\"\nslope = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[coefficients.kappa]\nform = \"cubic\"\n"), ConfigError);
}

TEST_CASE("syntax errors carry the line") {
  try {
    parse_config("# comment\n[model]\nT = 5\nphi 0.5\n");
    FAIL("expected an error");
  } catch (const ParseError& e) {
    CHECK(e.line() == 4);
  }
  CHECK_THROWS_AS(parse_config("[model\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[model]\nT = 5x\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[output]\ndirectory = \"abc\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[model]\nT = 5\nT = 6\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[model]\n[model]\n"), ParseError);
}

TEST_CASE("type mismatches are semantic errors") {
  CHECK_THROWS_AS(parse_config("[model]\nT = \"five\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nny = 20.5\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\nrequire_h3 = 1\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[grid]\nny = 2\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[solver]\nbounds = \"global\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\nparam = \"kappa\"\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[sweep]\nparam = \"phi\"\nvalues = [0.5, 2.0]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[singular]\nA_values = [10, 3]\n"), ConfigError);
  CHECK_THROWS_AS(parse_config("[montecarlo]\nmaster_seed = -1\n"), ConfigError);
}

TEST_CASE("full file with comments, arrays and coefficient overrides") {
  const RunConfig c = parse_config(R"(
# desk run
[model]
T = 2.5          # horizon
q0 = -10
[coefficients.kappa]
form = "constant"
value = 0.8
[coefficients.sigma]
form = "affine"
intercept = 1.0
slope = 0.0
[montecarlo]
n_paths = 1_000
master_seed = 18446744073709551615
[sweep]
param = "phi"
values = [
  0.5,   # low
  1.0,
]
[singular]
envelope_times = [0, 1, 2.4]
[output]
directory = "runs/a #1"
)");
  CHECK(c.model.horizon == 2.5);
  CHECK(c.model.initial_inventory == -10.0);
  CHECK(c.n_paths == 1000);
  CHECK(c.master_seed == 18446744073709551615ULL);
  CHECK(c.sweep_values == std::vector<double>{0.5, 1.0});
  CHECK(c.out_dir == "runs/a #1");
  const auto f = c.fields();
  CHECK(f.kappa(3.0) == 0.8);
  CHECK(f.sigma(-1.0) == 1.0);
}

TEST_CASE("canonical text round-trips to the same hash") {
  RunConfig c = parse_config("[model]\nA = 10\ngamma = 0.1\n[sweep]\nvalues = [0.1, 0.2]\n");
  const RunConfig back = parse_config(c.canonical());
  CHECK(back.canonical() == c.canonical());
  CHECK(back.hash() == c.hash());
  c.model.penalty = 11.0;
  CHECK(c.hash() != back.hash());
  CHECK(hex64(0x1234) == "0000000000001234");
  const RunConfig d = parse_config("");
  CHECK(parse_config(d.canonical()).hash() == d.hash());
}

TEST_CASE("missing file") {
  CHECK_THROWS_AS(load_config("/nonexistent/config.toml"), UsageError);
}
