#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include "impact/models.hpp"
#include "impact/pricing.hpp"

namespace fs = std::filesystem;

namespace {

std::string binary() {
  const char* bin = std::getenv("IMPACT_PRICER_BIN");
  REQUIRE(bin != nullptr);
  return bin;
}

std::string config_dir() {
  const char* dir = std::getenv("IMPACT_PRICER_CONFIG_DIR");
  REQUIRE(dir != nullptr);
  return dir;
}

int run_cli(const std::string& args) {
  const std::string cmd = binary() + " " + args + " >/dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::vector<std::vector<std::string>> read_csv(const fs::path& p) {
  std::vector<std::vector<std::string>> rows;
  std::ifstream in(p);
  REQUIRE(in.good());
  std::string line;
  while (std::getline(in, line)) {
    std::vector<std::string> cells;
    std::stringstream ss(line);
    std::string cell;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    rows.push_back(cells);
  }
  return rows;
}

fs::path fresh_dir(const std::string& name) {
  const fs::path dir = fs::temp_directory_path() / ("impact_cli_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

}  // namespace

TEST_CASE("quote: values and byte-identical reruns") {
  const fs::path out1 = fresh_dir("quote1");
  const fs::path out2 = fresh_dir("quote2");
  const std::string cfg = config_dir() + "/quote_gauss.json";
  CHECK(run_cli("quote --config " + cfg + " --out " + out1.string()) == 0);
  CHECK(run_cli("quote --config " + cfg + " --out " + out2.string()) == 0);
  const std::string a = slurp(out1 / "quote.csv");
  CHECK(a == slurp(out2 / "quote.csv"));

  const auto rows = read_csv(out1 / "quote.csv");
  REQUIRE(rows.size() == 5);
  CHECK(rows[0] == std::vector<std::string>{"q_1", "quote"});
  CHECK(std::stod(rows[1][1]) == doctest::Approx(0.0).epsilon(1e-12));
  CHECK(std::stod(rows[2][1]) == doctest::Approx(0.5).epsilon(1e-10));
  CHECK(std::stod(rows[3][1]) == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("bounds: u = 0 row collapses to E0[h]") {
  const fs::path out = fresh_dir("bounds");
  CHECK(run_cli("bounds --config " + config_dir() + "/bachelier_desk.json --out " +
                out.string()) == 0);
  const auto rows = read_csv(out / "bounds.csv");
  REQUIRE(rows.size() >= 2);
  // first data row is u = 0
  CHECK(std::stod(rows[1][0]) == 0.0);
  const double lower = std::stod(rows[1][1]);
  const double q0 = std::stod(rows[1][2]);
  const double upper = std::stod(rows[1][3]);
  CHECK(lower == q0);
  CHECK(upper == q0);
  CHECK(q0 == doctest::Approx(-2.0).epsilon(1e-9));
  // classification column present (classify_p = 0, a sell-arbitrage price)
  CHECK(rows[0].back() == "classification");
  CHECK(rows[2].back() == "sell_arbitrage");
}

TEST_CASE("schedule reproduces the linear Bachelier demand") {
  const fs::path out = fresh_dir("schedule");
  CHECK(run_cli("schedule --config " + config_dir() +
                "/bachelier_desk.json --out " + out.string()) == 0);
  const auto rows = read_csv(out / "schedule.csv");
  REQUIRE(rows.size() == 102);
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double p = std::stod(rows[i][0]);
    const double u_hat = std::stod(rows[i][1]);
    CHECK(u_hat == doctest::Approx(-(p + 1.0)).epsilon(1e-8));
  }
}

TEST_CASE("pepq: example instance and the equilibrium-arbitrage demo") {
  const fs::path out = fresh_dir("pepq");
  CHECK(run_cli("pepq --config " + config_dir() + "/pepq_example.json --out " +
                out.string()) == 0);
  auto rows = read_csv(out / "pepq.csv");
  REQUIRE(rows.size() == 2);
  CHECK(std::stod(rows[1][0]) == doctest::Approx(1.0).epsilon(1e-7));
  CHECK(std::stod(rows[1][1]) == doctest::Approx(-1.0).epsilon(1e-7));

  const fs::path arb = fresh_dir("pepq_arb");
  CHECK(run_cli("pepq --config " + config_dir() + "/pepq_arbitrage.json --out " +
                arb.string()) == 0);
  rows = read_csv(arb / "pepq.csv");
  REQUIRE(rows.size() == 2);
  // p* = -1 with u* = 0.2: outside both sides' bounds, a buy-arbitrage price
  CHECK(std::stod(rows[1][0]) == doctest::Approx(0.2).epsilon(1e-6));
  CHECK(std::stod(rows[1][1]) == doctest::Approx(-1.0).epsilon(1e-6));
  CHECK(rows[1][4] == "buy_arbitrage");
  CHECK(std::stod(rows[1][6]) == doctest::Approx(0.16).epsilon(1e-6));
}

TEST_CASE("region: raster slice and determinism") {
  const fs::path out = fresh_dir("region");
  CHECK(run_cli("region --config " + config_dir() + "/region_fig.json --out " +
                out.string()) == 0);
  const auto rows = read_csv(out / "region.csv");
  REQUIRE(rows.size() == 1 + 161 * 79);
  // p2 = 0 rows are all inside
  int zero_rows = 0;
  for (std::size_t i = 1; i < rows.size(); ++i) {
    if (std::stod(rows[i][1]) == 0.0) {
      ++zero_rows;
      CHECK(rows[i][2] == "1");
    }
  }
  CHECK(zero_rows == 161);
  const fs::path again = fresh_dir("region2");
  CHECK(run_cli("region --config " + config_dir() + "/region_fig.json --out " +
                again.string()) == 0);
  CHECK(slurp(out / "region.csv") == slurp(again / "region.csv"));
}

TEST_CASE("simulate emits trajectories and passing checks") {
  const fs::path out = fresh_dir("simulate");
  CHECK(run_cli("simulate --config " + config_dir() +
                "/bachelier_desk.json --out " + out.string()) == 0);
  const auto summary = read_csv(out / "simulate_summary.csv");
  REQUIRE(summary.size() == 2);
  const auto& header = summary[0];
  const auto& cells = summary[1];
  REQUIRE(header.size() == cells.size());
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == "budget_ok") CHECK(cells[i] == "1");
    if (header[i] == "flagged") CHECK(cells[i] == "0");
    if (header[i] == "identity_max_gap")
      CHECK(std::stod(cells[i]) <= 50.0 / 256.0);
  }
  const auto traj = read_csv(out / "simulate.csv");
  CHECK(traj.size() == 1 + 257);
}

TEST_CASE("bounds rows re-derive from the library operations") {
  const fs::path out = fresh_dir("respot");
  CHECK(run_cli("bounds --config " + config_dir() +
                "/bachelier_desk.json --out " + out.string()) == 0);
  // rebuild the same setup in-process and re-derive each row
  using namespace impact;
  BachelierSpec spec{StepFunction::constant(1.0, {1.0}),
                     StepFunction::constant(1.0, {0.0}),
                     StepFunction::constant_matrix(1.0, 1, {1.0}),
                     StepFunction::constant(1.0, {1.0})};
  ExpectationEngine engine;
  engine.method = Method::Quadrature;
  engine.quad_nodes = 96;
  engine.seed = 11;
  ClaimSetup setup{MakerSpec{2.0, spec.sigma0(), spec.assets()},
                   InvestorSpec{2.0, spec.sigma1()}, spec.claim(), engine};
  const auto rows = read_csv(out / "bounds.csv");
  for (std::size_t i = 1; i < rows.size(); ++i) {
    const double u = std::stod(rows[i][0]);
    CHECK(std::stod(rows[i][1]) ==
          doctest::Approx(lower_bound(setup, u)).epsilon(1e-14));
    CHECK(std::stod(rows[i][2]) ==
          doctest::Approx(q0_price(setup)).epsilon(1e-14));
    CHECK(std::stod(rows[i][3]) ==
          doctest::Approx(upper_bound(setup, u)).epsilon(1e-14));
  }
}

TEST_CASE("digital model runs simulate and bounds end to end") {
  const fs::path out = fresh_dir("digital");
  CHECK(run_cli("simulate --config " + config_dir() +
                "/digital_bounds.json --out " + out.string()) == 0);
  const auto summary = read_csv(out / "simulate_summary.csv");
  REQUIRE(summary.size() == 2);
  for (std::size_t i = 0; i < summary[0].size(); ++i)
    if (summary[0][i] == "budget_ok") CHECK(summary[1][i] == "1");
  CHECK(run_cli("bounds --config " + config_dir() +
                "/digital_bounds.json --out " + out.string()) == 0);
  const auto rows = read_csv(out / "bounds.csv");
  // last row is u = 100: bounds within 0.05 of {0, 1}
  CHECK(std::stod(rows.back()[0]) == 100.0);
  CHECK(std::stod(rows.back()[1]) <= 0.05);
  CHECK(std::stod(rows.back()[3]) >= 0.95);
}

TEST_CASE("two-dimensional bachelier with explicit grids: frozen closed forms") {
  const fs::path out = fresh_dir("b2d");
  CHECK(run_cli("quote --config " + config_dir() + "/bachelier_2d.json --out " +
                out.string()) == 0);
  auto rows = read_csv(out / "quote.csv");
  REQUIRE(rows.size() == 3);
  // X(q) = (gamma/2)(q'Cq + 2 q'Cov(Psi, Sigma_0)) with the piecewise f:
  // 0.75 (2.025 + 2 * 0.702) = 2.57175
  CHECK(std::stod(rows[2][2]) == doctest::Approx(2.57175).epsilon(1e-10));

  CHECK(run_cli("bounds --config " + config_dir() + "/bachelier_2d.json --out " +
                out.string()) == 0);
  rows = read_csv(out / "bounds.csv");
  // E0[h] = -gamma int y'f dt = -1.5 * 0.74; upper(1) adds gamma int|y|^2/2
  CHECK(std::stod(rows[1][2]) == doctest::Approx(-1.11).epsilon(1e-10));
  CHECK(std::stod(rows[2][3]) == doctest::Approx(0.765).epsilon(1e-9));
}

TEST_CASE("maker-count asymptotics stays on the closed-form scale") {
  const fs::path out = fresh_dir("asym_makers");
  CHECK(run_cli("asymptotics --config " + config_dir() +
                "/asymptotics_maker_count.json --out " + out.string()) == 0);
  const auto rows = read_csv(out / "asymptotics.csv");
  REQUIRE(rows.size() == 7);
  // Gaussian closed form: u*/n = (1.0 - 0.2) Cov(h,Z_i)/(2 Var(h)) = 0.2
  for (std::size_t i = 1; i < rows.size(); ++i)
    CHECK(std::stod(rows[i][4]) == doctest::Approx(0.2).epsilon(1e-7));
}

TEST_CASE("asymptotics schedule converges to the configured rate") {
  const fs::path out = fresh_dir("asym");
  CHECK(run_cli("asymptotics --config " + config_dir() +
                "/asymptotics_large_claim.json --out " + out.string()) == 0);
  const auto rows = read_csv(out / "asymptotics.csv");
  REQUIRE(rows.size() >= 3);
  const double last_scaled = std::stod(rows.back()[4]);
  CHECK(last_scaled == doctest::Approx(1.0).epsilon(0.02));
}

TEST_CASE("config errors exit with code 2 and solver errors with 3") {
  const fs::path out = fresh_dir("errors");
  const fs::path bad = out / "bad.json";
  std::ofstream(bad) << R"({"model": "bachelier", "unknown_key": 1})";
  CHECK(run_cli("bounds --config " + bad.string() + " --out " + out.string()) ==
        2);
  const fs::path degenerate = out / "degenerate.json";
  std::ofstream(degenerate) << R"({
    "model": "generic", "dim": 1,
    "claim": {"z": [1.0]},
    "pepq": {
      "side_a": {"gamma": 1.0, "alpha": 1.0, "assets": [{"z": [1.0]}]},
      "side_b": {"gamma": 1.0, "alpha": 1.0, "assets": [{"z": [1.0]}]}
    }
  })";
  CHECK(run_cli("pepq --config " + degenerate.string() + " --out " +
                out.string()) == 3);
  CHECK(run_cli("bounds --config " + out.string() + "/missing.json --out " +
                out.string()) == 2);
}

TEST_CASE("seed override changes the Monte Carlo stream deterministically") {
  const fs::path a = fresh_dir("seed_a");
  const fs::path b = fresh_dir("seed_b");
  const fs::path c = fresh_dir("seed_c");
  const std::string cfg = config_dir() + "/quote_gauss.json";
  CHECK(run_cli("quote --config " + cfg + " --engine mc --paths 20000 --seed 1 --out " +
                a.string()) == 0);
  CHECK(run_cli("quote --config " + cfg + " --engine mc --paths 20000 --seed 1 --out " +
                b.string()) == 0);
  CHECK(run_cli("quote --config " + cfg + " --engine mc --paths 20000 --seed 2 --out " +
                c.string()) == 0);
  CHECK(slurp(a / "quote.csv") == slurp(b / "quote.csv"));
  CHECK(slurp(a / "quote.csv") != slurp(c / "quote.csv"));
}
