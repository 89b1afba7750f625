#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <sstream>

#include "adhesion/config.hpp"
#include "adhesion/csv.hpp"
#include "test_util.hpp"

using namespace adhesion;

namespace {

const char* kSample = R"(
# comment line
[model]
d = 1
sigma_plus = 1.25
sigma_minus = 0.75
alpha_plus = 1.5   # rate out of +1
alpha_minus = 0.5

[potential]
eta_scale = 0.1
mode = 1 : 1.0 : 1.0
mode = 2 : -0.25 : 0.5

[numerics]
N = 128
dt = 5e-4
K = 16
horizon = 2.5
snapshots = 0.5, 1.0, 2.5
p_plus0 = 0.8

[run]
seed = 77
repeats = 4
workers = 2

[experiment]
name = poc-scan
N_ladder = 32, 64
)";

}  // namespace

TEST_CASE("raw parsing: sections, comments, repeated keys, errors") {
  const RawConfig raw = RawConfig::parse_string(kSample);
  CHECK(raw.get("model", "d") == "1");
  CHECK(raw.get_double("model", "sigma_plus") == 1.25);
  CHECK(raw.get_all("potential", "mode").size() == 2);
  CHECK(raw.get_or("missing", "key", "fallback") == "fallback");
  CHECK(raw.get_int_or("numerics", "N", 0) == 128);
  CHECK_THROWS_AS(raw.get("model", "nope"), ConfigError);
  CHECK_THROWS_AS(RawConfig::parse_string("[model\nd = 1\n"), ConfigError);
  CHECK_THROWS_AS(RawConfig::parse_string("[model]\njust a line\n"), ConfigError);
}

TEST_CASE("experiment config resolves the model and numerics blocks") {
  const ExperimentConfig cfg = ExperimentConfig::from_raw(RawConfig::parse_string(kSample));
  CHECK(cfg.d == 1);
  CHECK(cfg.diff.sigma_minus == 0.75);
  CHECK(cfg.rates.alpha_plus == 1.5);
  CHECK(cfg.potential.modes.size() == 2);
  CHECK(cfg.potential.modes[1].k[0] == 2);
  CHECK(cfg.potential.modes[1].u_coeff == -0.25);
  CHECK(cfg.potential.eta_scale == 0.1);
  CHECK(cfg.n_particles == 128);
  CHECK(cfg.dt == 5e-4);
  CHECK(cfg.snapshots.size() == 3);
  CHECK(cfg.spin_law0.p_plus == 0.8);
  CHECK(cfg.matched_laws);
  CHECK(cfg.seed == 77);
  CHECK(cfg.experiment == "poc-scan");
  CHECK(cfg.n_ladder == std::vector<double>{32, 64});
  CHECK(cfg.resolved_workers() == 2);
  CHECK(cfg.resolved_delta() == doctest::Approx(1.0 / std::sqrt(128.0)));
}

TEST_CASE("auto dt follows the stability ceiling") {
  ExperimentConfig cfg = ExperimentConfig::from_raw(RawConfig::parse_string(kSample));
  cfg.dt = 0.0;
  const double eta = estimate_eta(cfg.potential, 16).eta();
  CHECK(cfg.resolved_dt() == doctest::Approx(default_dt_max(eta, cfg.rates)));
}

TEST_CASE("config validation rejects inconsistent blocks") {
  CHECK_THROWS_AS(
      ExperimentConfig::from_raw(RawConfig::parse_string("[model]\nd = 3\n")),
      ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_raw(RawConfig::parse_string(
                      "[model]\nd = 1\n[potential]\nmode = 1,1 : 1 : 1\n")),
                  ConfigError);
  CHECK_THROWS_AS(ExperimentConfig::from_raw(RawConfig::parse_string(
                      "[model]\nd = 1\nsigma_plus = 0\n")),
                  std::exception);
  // mismatched bar law flips the matched flag
  const ExperimentConfig cfg = ExperimentConfig::from_raw(RawConfig::parse_string(
      "[model]\nd = 1\n[numerics]\np_plus0 = 1.0\np_plus0_bar = 0.5\n"));
  CHECK(!cfg.matched_laws);
  CHECK(cfg.spin_law0_bar.p_plus == 0.5);
}

TEST_CASE("worker count: config value, environment override") {
  ExperimentConfig cfg;
  cfg.workers = 3;
  CHECK(cfg.resolved_workers() == 3);
  setenv("ADHESION_WORKERS", "7", 1);
  CHECK(cfg.resolved_workers() == 7);
  unsetenv("ADHESION_WORKERS");
  CHECK(cfg.resolved_workers() == 3);
  cfg.workers = 0;
  CHECK(cfg.resolved_workers() >= 1);
}

TEST_CASE("doubles round-trip through the shortest decimal form") {
  testutil::Lcg gen(1);
  for (int i = 0; i < 5000; ++i) {
    double x = (gen.uniform() - 0.5) * std::pow(10.0, gen.uniform(-12.0, 12.0));
    CHECK(std::stod(format_double(x)) == x);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK(format_double(1.0) == "1");
  CHECK(format_double(-0.25) == "-0.25");
}

TEST_CASE("tables round-trip through csv byte-for-byte") {
  Table t{"demo", {"a", "b", "c"}, {}};
  t.row().num(0.1).integer(-7).text("x");
  t.row().num(1e-300).num(3.141592653589793).text("");
  std::stringstream ss;
  write_csv(t, ss);
  const std::string first = ss.str();
  const Table back = read_csv(ss, "demo");
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  std::stringstream ss2;
  write_csv(back, ss2);
  CHECK(ss2.str() == first);
}

TEST_CASE("empty tables emit a header-only csv") {
  Table t{"empty", {"x", "y"}, {}};
  std::stringstream ss;
  write_csv(t, ss);
  CHECK(ss.str() == "x,y\n");
}
