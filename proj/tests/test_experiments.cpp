#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>

#include "adhesion/experiments.hpp"
#include "test_util.hpp"

using namespace adhesion;

namespace {

ExperimentConfig small_weak_config() {
  ExperimentConfig cfg;
  cfg.d = 1;
  cfg.diff = DiffusionSpec{1.0, 1.0};
  cfg.rates = FlipRates{1.0, 1.0};
  cfg.potential.d = 1;
  cfg.potential.modes.push_back({BasisIndex{1}, 1.0, 1.0});
  cfg.potential.eta_scale = 0.1;
  cfg.n_particles = 32;
  cfg.dt = 2e-3;
  cfg.spectral_K = 8;
  cfg.horizon = 0.4;
  cfg.seed = 11;
  cfg.repeats = 3;
  cfg.workers = 1;
  cfg.n_ladder = {16, 32};
  cfg.plateau_times = {0.2, 0.4};
  cfg.plateau_n = 16;
  return cfg;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

TEST_CASE("rate bound formulas") {
  const RateBounds b = RateBounds::from(0.5, DiffusionSpec{1.0, 2.0}, FlipRates{1.0, 0.5}, 1);
  CHECK(b.c0 == doctest::Approx(2.0 * M_PI * (M_PI - 0.5)).epsilon(1e-14));
  CHECK(b.c_star == doctest::Approx(2.0 * M_PI * M_PI - 1.5 * M_PI * 0.5).epsilon(1e-14));
  CHECK(b.mixing == 1.5);
  CHECK(b.effective_poc() == doctest::Approx(1.5));

  const RateBounds d2 = RateBounds::from(1.0, DiffusionSpec{1.0, 1.0}, FlipRates{1.0, 1.0}, 2);
  CHECK(d2.c0 == doctest::Approx(M_PI * (M_PI - std::sqrt(2.0))).epsilon(1e-14));
}

TEST_CASE("gates refuse out-of-regime runs unless exploratory") {
  ExperimentConfig cfg = small_weak_config();
  cfg.potential.eta_scale = 5.0;  // certified eta far above the c0 gate
  CHECK_THROWS_AS(run_poc_scan(cfg), GateError);
  cfg.allow_exploratory = true;
  cfg.n_ladder = {8, 16};
  cfg.repeats = 2;
  cfg.horizon = 0.1;
  cfg.plateau_times.clear();
  const RunArtifacts art = run_poc_scan(cfg);
  CHECK(art.report.find("exploratory") != std::string::npos);
}

TEST_CASE("poc scan emits the documented tables deterministically across workers") {
  ExperimentConfig cfg = small_weak_config();
  const std::string dir1 = "exp_out_w1";
  const std::string dir2 = "exp_out_w4";
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);

  cfg.workers = 1;
  emit(run_poc_scan(cfg), dir1);
  cfg.workers = 4;
  emit(run_poc_scan(cfg), dir2);

  for (const std::string name :
       {"poc_ladder.csv", "poc_slope.csv", "poc_plateau.csv", "report.txt"}) {
    CHECK(slurp(dir1 + "/" + name) == slurp(dir2 + "/" + name));
  }

  const Table ladder = read_csv_file(dir1 + "/poc_ladder.csv");
  CHECK(ladder.columns.size() == 8);
  CHECK(ladder.rows.size() == 2);  // one snapshot per ladder entry
  const Table slope = read_csv_file(dir1 + "/poc_slope.csv");
  CHECK(slope.rows.size() == 1);
  std::filesystem::remove_all(dir1);
  std::filesystem::remove_all(dir2);
}

TEST_CASE("mismatched initial spin laws decay along the scan") {
  ExperimentConfig cfg = small_weak_config();
  cfg.spin_law0 = SpinLaw::from_p_plus(1.0);
  cfg.spin_law0_bar = SpinLaw::from_p_plus(0.3);
  cfg.matched_laws = false;
  cfg.horizon = 1.2;
  cfg.repeats = 6;
  cfg.n_ladder = {192};
  cfg.snapshots = {0.0, 0.4, 0.8, 1.2};
  cfg.plateau_times.clear();
  const RunArtifacts art = run_poc_scan(cfg);
  const Table& ladder = art.tables[0];
  REQUIRE(ladder.rows.size() == 4);
  // disagreement column tracks the closed-form decay from |dp| = 0.7
  std::vector<double> dis;
  for (const auto& row : ladder.rows) dis.push_back(std::stod(row[7]));
  for (std::size_t i = 1; i < dis.size(); ++i) CHECK(dis[i] < dis[i - 1]);
  const double expected = 0.7 * std::exp(-cfg.rates.total() * 1.2);
  CHECK(std::abs(dis.back() - expected) < 5.0 * std::sqrt(0.1 / (6.0 * 192.0)));
}

TEST_CASE("contraction on identical data is identically zero") {
  ExperimentConfig cfg = small_weak_config();
  cfg.horizon = 0.5;
  cfg.contract_p_plus_a = 0.5;
  cfg.contract_p_plus_b = 0.5;
  cfg.contract_perturb_a = {1, 0.05, 0.0};
  cfg.contract_perturb_b = {1, 0.05, 0.0};
  const RunArtifacts art = run_contraction(cfg);
  const Table& decay = art.tables[0];
  for (const auto& row : decay.rows) {
    CHECK(std::stod(row[1]) < 1e-12);
    CHECK(std::stod(row[2]) < 1e-12);
  }
}

TEST_CASE("contraction decays monotonically with the exact spin rate") {
  ExperimentConfig cfg = small_weak_config();
  cfg.horizon = 4.0;
  cfg.dt = 1e-3;
  cfg.contract_p_plus_a = 0.85;
  cfg.contract_p_plus_b = -1.0;  // stationary split
  cfg.contract_perturb_a = {1, 0.1, -0.05};
  cfg.contract_perturb_b = {};
  const RunArtifacts art = run_contraction(cfg);
  const Table& summary = art.tables[1];
  REQUIRE(summary.rows.size() == 1);
  const double rate_x = std::stod(summary.rows[0][3]);
  const double rate_y = std::stod(summary.rows[0][5]);
  const int monotone = std::stoi(summary.rows[0][6]);
  CHECK(monotone == 1);
  CHECK(rate_x > 0.0);
  CHECK(rate_y == doctest::Approx(cfg.rates.total()).epsilon(1e-6));
  CHECK(std::stod(summary.rows[0][7]) < 1e-10);  // mass drift
}

TEST_CASE("threshold table emits every scanned mode") {
  ExperimentConfig cfg = small_weak_config();
  cfg.spectral_K = 6;
  const RunArtifacts art = run_thresholds(cfg);
  const Table& t = art.tables[0];
  CHECK(t.rows.size() == 6);
  CHECK(art.report.find("k_star 1") != std::string::npos);
}

TEST_CASE("emit honors the format switch and round-trips") {
  RunArtifacts art;
  Table t{"tiny", {"a"}, {}};
  t.row().num(0.5);
  art.tables.push_back(t);
  art.report = "hello\n";
  const std::string dir = "emit_test_dir";
  std::filesystem::remove_all(dir);
  emit(art, dir, "csv");
  CHECK(std::filesystem::exists(dir + "/tiny.csv"));
  CHECK(!std::filesystem::exists(dir + "/report.txt"));
  emit(art, dir, "report");
  CHECK(std::filesystem::exists(dir + "/report.txt"));
  const Table back = read_csv_file(dir + "/tiny.csv");
  CHECK(back.columns == t.columns);
  CHECK(back.rows == t.rows);
  std::filesystem::remove_all(dir);
}

TEST_CASE("parallel runs touch every slot exactly once") {
  std::vector<int> hits(64, 0);
  parallel_runs(64, 4, [&](int r) { hits[static_cast<std::size_t>(r)] += 1; });
  for (int h : hits) CHECK(h == 1);
  std::vector<int> serial(5, 0);
  parallel_runs(5, 1, [&](int r) { serial[static_cast<std::size_t>(r)] += 1; });
  for (int h : serial) CHECK(h == 1);
}
