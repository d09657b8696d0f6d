#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>
#include <sstream>

#include "mixfbm/errors.hpp"
#include "mixfbm/harness.hpp"

using namespace mixfbm;
using doctest::Approx;
namespace fs = std::filesystem;

namespace {
fs::path scratch(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("mixfbm_harness_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}
std::string slurp(const fs::path& p) {
  std::ifstream in(p);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}
std::size_t columns(const std::string& line) {
  return static_cast<std::size_t>(std::count(line.begin(), line.end(), ',')) + 1;
}
ExperimentConfig small_config() {
  ExperimentConfig c;
  c.grid_n = 64;
  c.path_points = 128;
  c.replicates = 1;
  c.params.theta = 0.0;
  c.master_seed = 12345;
  c.threads = 1;
  return c;
}
}  // namespace

TEST_CASE("config validation and JSON") {
  ExperimentConfig c;
  CHECK_NOTHROW(c.validate());
  c.replicates = 0;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.path_points = 100;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.t_sequence = {1, 5, 5};
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.grid_n = 30;
  CHECK_THROWS_AS(c.validate(), DomainError);
  c = {};
  c.params.hurst = {0.4, 0.9};
  CHECK_THROWS_AS(c.validate(), DomainError);

  auto parsed = config_from_json(R"({"h1": 0.55, "h2": 0.85, "sigma": 2, "theta": 1.5,
      "t_horizon": 3, "grid_n": 128, "path_points": 256, "replicates": 10, "seed": 7,
      "t_sequence": [1, 2, 4], "output_dir": "out", "grading": 2.5, "path_grading": 1.2,
      "threads": 2})");
  CHECK(parsed.params.hurst.h1 == 0.55);
  CHECK(parsed.params.hurst.h2 == 0.85);
  CHECK(parsed.params.sigma == 2.0);
  CHECK(parsed.params.theta == 1.5);
  CHECK(parsed.params.horizon_T == 3.0);
  CHECK(parsed.grid_n == 128);
  CHECK(parsed.path_points == 256);
  CHECK(parsed.replicates == 10);
  CHECK(parsed.master_seed == 7u);
  CHECK(parsed.t_sequence == std::vector<double>{1, 2, 4});
  CHECK(parsed.output_dir == "out");
  CHECK(parsed.grading == 2.5);
  CHECK(parsed.path_grading == 1.2);
  CHECK(parsed.threads == 2u);

  auto again = config_from_json(config_to_json(parsed));
  CHECK(config_to_json(again) == config_to_json(parsed));

  // partial documents keep the base values
  auto partial = config_from_json(R"({"replicates": 3})", parsed);
  CHECK(partial.replicates == 3);
  CHECK(partial.grid_n == 128);

  CHECK_THROWS_AS(config_from_json(R"({"replicate": 3})"), DomainError);
  CHECK_THROWS_AS(config_from_json(R"({"grid_n": "many"})"), DomainError);
  CHECK_THROWS_AS(config_from_json("[1,2]"), DomainError);
  CHECK_THROWS_AS(config_from_json("{not json"), DomainError);

  auto dir = scratch("config");
  {
    std::ofstream out(dir / "c.json");
    out << R"({"h1": 0.7, "h2": 0.99})";
  }
  auto loaded = load_config((dir / "c.json").string());
  CHECK(loaded.params.hurst.h1 == 0.7);
  CHECK_THROWS_AS(load_config((dir / "missing.json").string()), IoError);
}

TEST_CASE("path grid") {
  auto g = path_grid(2.0, 10, 1.5);
  REQUIRE(g.size() == 11u);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == Approx(2.0));
  CHECK(g[1] == Approx(2.0 * std::pow(0.1, 1.5)));
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
  CHECK_THROWS_AS(path_grid(0.0, 10, 1.5), DomainError);
  CHECK_THROWS_AS(path_grid(1.0, 10, 0.5), DomainError);
}

TEST_CASE("Kolmogorov-Smirnov") {
  std::mt19937_64 rng(1);
  std::normal_distribution<double> nd;
  std::vector<double> z(1000);
  for (auto& v : z) v = nd(rng);
  auto ok = ks_normal(z);
  CHECK(ok.stat < 0.05);
  CHECK(ok.pvalue > 0.01);
  for (auto& v : z) v += 0.3;
  auto shifted = ks_normal(z);
  CHECK(shifted.pvalue < 1e-6);
  CHECK(kolmogorov_pvalue(0.01, 1000) > kolmogorov_pvalue(0.05, 1000));
  CHECK(kolmogorov_pvalue(0.0, 1000) == Approx(1.0));
  // reference: D = 0.043 at n = 1000 has p about 0.05
  CHECK(kolmogorov_pvalue(0.043, 1000) == Approx(0.05).epsilon(0.1));
  CHECK_THROWS_AS(ks_normal({}), DomainError);
}

TEST_CASE("Monte Carlo run: determinism and export") {
  auto cfg = small_config();
  auto a = run_mc(cfg);
  REQUIRE(a.theta_hats.size() == 1u);
  CHECK(std::isfinite(a.theta_hats[0]));
  auto d1 = scratch("mc1"), d2 = scratch("mc2");
  export_report(a, d1.string());
  cfg.threads = 3;
  auto b = run_mc(cfg);
  export_report(b, d2.string());
  CHECK(a.theta_hats == b.theta_hats);
  // report.json records the thread count, the tables must not
  for (const char* f : {"mc_summary.csv", "asymptotics.csv"})
    CHECK(slurp(d1 / f) == slurp(d2 / f));
  b.config.threads = a.config.threads;
  CHECK(report_to_json(a) == report_to_json(b));

  cfg.replicates = 300;
  cfg.params.theta = 1.0;
  auto r = run_mc(cfg);
  CHECK(r.se_mean == Approx(std::sqrt(r.var_hat / r.replicates)));
  CHECK(r.var_pred > 0);
  CHECK(r.var_pred_paper > 0);
  CHECK(std::abs(r.mean_hat - 1.0) <= 4 * r.se_mean);
  CHECK(r.ks_pvalue > 0.001);
  REQUIRE(r.per_T.size() == 1u);
  CHECK(r.per_T[0].var_hat == r.var_hat);
  CHECK(r.asymptotic_var_closed_form == Approx(0.984684299463348).epsilon(1e-8));

  auto dir = scratch("mc3");
  auto files = export_report(r, dir.string());
  CHECK(files.size() == 3u);
  std::istringstream summary(slurp(dir / "mc_summary.csv"));
  std::string line;
  int rows = 0;
  while (std::getline(summary, line)) {
    CHECK(columns(line) == 8u);
    ++rows;
  }
  CHECK(rows == 2);
  std::istringstream asym(slurp(dir / "asymptotics.csv"));
  while (std::getline(asym, line)) CHECK(columns(line) == 6u);

  auto back = load_report_json((dir / "report.json").string());
  CHECK(report_to_json(back) == report_to_json(r));
  CHECK(back.theta_hats == r.theta_hats);
  CHECK(slurp(dir / "report.json").find("\"version\"") != std::string::npos);

  CHECK(export_report(r, scratch("csv").string(), ExportFormat::Csv).size() == 2u);
  CHECK(export_report(r, scratch("json").string(), ExportFormat::Json).size() == 1u);

  MCReport empty = r;
  empty.theta_hats.clear();
  auto edir = scratch("empty");
  CHECK_THROWS_AS(export_report(empty, edir.string()), DomainError);
  CHECK(fs::is_empty(edir));
  CHECK_THROWS_AS(export_report(r, "/proc/mixfbm_no_such_dir/x"), IoError);
  CHECK_THROWS_AS(load_report_json((edir / "nothing.json").string()), IoError);
}

TEST_CASE("asymptotics run") {
  auto cfg = small_config();
  cfg.t_sequence = {1, 5, 25};
  auto r = run_asymptotics(cfg);
  CHECK(r.kind == ReportKind::Asymptotics);
  REQUIRE(r.per_T.size() == 3u);
  for (const auto& row : r.per_T) {
    CHECK(row.ok);
    CHECK(row.var_exact > 0);
    CHECK(row.scaled_var == Approx(std::pow(row.T, 0.2) * row.var_exact));
    CHECK(row.var_paper / row.var_exact == Approx(r.per_T[0].var_paper / r.per_T[0].var_exact).epsilon(1e-12));
  }
  CHECK(r.per_T[1].var_exact < r.per_T[0].var_exact);
  CHECK(r.slope < 0);
  CHECK(r.slope_expected == Approx(-0.2));
  auto dir = scratch("asym");
  auto files = export_report(r, dir.string());
  CHECK(files.size() == 2u);
  auto back = load_report_json((dir / "report.json").string());
  CHECK(report_to_json(back) == report_to_json(r));

  cfg.t_sequence = {1, 5};
  CHECK_THROWS_AS(run_asymptotics(cfg), DomainError);
}
