#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "mluq/config.hpp"
#include "mluq/report_io.hpp"

using namespace mluq;

namespace {

namespace fs = std::filesystem;

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  REQUIRE(in.good());
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

int run_cli(const std::string& args) {
  const std::string cmd = std::string(MLUQ_CLI_PATH) + " " + args + " > /dev/null 2>&1";
  const int status = std::system(cmd.c_str());
  return WEXITSTATUS(status);
}

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& name) : path(fs::temp_directory_path() / name) {
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

}  // namespace

TEST_CASE("config file parsing with sections and overrides") {
  TempDir tmp("mluq_cli_cfg");
  const fs::path cfg = tmp.path / "run.cfg";
  {
    std::ofstream out(cfg);
    out << "# sample configuration\n"
           "[problem]\n"
           "name = affine-sine\n"
           "d = 2\n"
           "s = 4\n"
           "[run]\n"
           "driver = mimc\n"
           "eps = 4e-3, 2e-3\n"
           "seed = 11\n"
           "[solver]\n"
           "kind = multigrid\n";
  }
  const RunConfig parsed = parse_config(cfg.string(), {{"problem.d", "1"}});
  CHECK(parsed.problem_name == "affine-sine");
  CHECK(parsed.d == 1);  // override wins
  CHECK(parsed.s == 4);
  CHECK(parsed.driver == DriverKind::mimc);
  REQUIRE(parsed.eps.size() == 2);
  CHECK(parsed.eps[0] == 4e-3);
  CHECK(parsed.seed == 11);
  CHECK(parsed.solver.kind == SolverKind::multigrid);
  validate_config(parsed);
}

TEST_CASE("config errors carry line and key diagnostics") {
  TempDir tmp("mluq_cli_badcfg");
  const fs::path cfg = tmp.path / "bad.cfg";
  {
    std::ofstream out(cfg);
    out << "[run]\nnonsense_key = 3\n";
  }
  try {
    (void)parse_config(cfg.string());
    FAIL("expected ConfigError");
  } catch (const ConfigError& e) {
    const std::string msg = e.what();
    CHECK(msg.find("line 2") != std::string::npos);
    CHECK(msg.find("nonsense_key") != std::string::npos);
  }
}

TEST_CASE("validation invariants") {
  RunConfig cfg;
  cfg.eps = {1e-3};
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);  // no seed
  cfg.seed = 1;
  validate_config(cfg);
  cfg.eps = {0.5};  // >= 1/e
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
  cfg.eps = {1e-3};
  cfg.driver = DriverKind::miqmc;
  cfg.lattice_source = LatticeSource::file;
  cfg.lattice_file = "";
  CHECK_THROWS_AS(validate_config(cfg), ConfigError);
}

TEST_CASE("config hash distinguishes seeds and is stable") {
  RunConfig a;
  a.seed = 1;
  a.eps = {1e-3};
  RunConfig b = a;
  CHECK(config_hash(a) == config_hash(b));
  b.seed = 2;
  CHECK(config_hash(a) != config_hash(b));
}

TEST_CASE("level CSV round trip") {
  std::vector<LevelRecord> recs(2);
  recs[0].key = {0};
  recs[0].mean = 0.125;
  recs[0].raw_variance = 1e-4;
  recs[0].variance_of_mean = 1e-6;
  recs[0].cost_per_sample = 3;
  recs[0].n = 100;
  recs[0].r = 1;
  recs[0].total_cost = 300;
  recs[1].key = {1, 2};
  recs[1].mean = -0.5;
  recs[1].n = 16;
  recs[1].r = 32;
  std::ostringstream os;
  write_level_csv(os, recs);
  std::istringstream is(os.str());
  const auto back = read_level_csv(is);
  REQUIRE(back.size() == 2);
  CHECK(back[0].key == recs[0].key);
  CHECK(back[0].mean == recs[0].mean);
  CHECK(back[0].total_cost == recs[0].total_cost);
  CHECK(back[1].key == recs[1].key);
  CHECK(back[1].r == 32);
}

TEST_CASE("cli: fixed seed runs are byte identical") {
  TempDir tmp1("mluq_cli_run1");
  TempDir tmp2("mluq_cli_run2");
  const std::string common =
      "run --driver mimc --eps 8e-3 --seed 7 --dim 2 --sdim 4";
  REQUIRE(run_cli(common + " --out " + tmp1.path.string()) == 0);
  REQUIRE(run_cli(common + " --out " + tmp2.path.string()) == 0);
  CHECK(slurp(tmp1.path / "results.jsonl") == slurp(tmp2.path / "results.jsonl"));
  CHECK(slurp(tmp1.path / "levels_0.csv") == slurp(tmp2.path / "levels_0.csv"));
  // serial run matches too, independent of worker count
  TempDir tmp3("mluq_cli_run3");
  REQUIRE(run_cli(common + " --threads 1 --out " + tmp3.path.string()) == 0);
  CHECK(slurp(tmp1.path / "results.jsonl") == slurp(tmp3.path / "results.jsonl"));
}

TEST_CASE("cli: screen emits the full simplex table") {
  TempDir tmp("mluq_cli_screen");
  REQUIRE(run_cli("screen --driver mimc --seed 3 --dim 2 --sdim 4 --out " +
                  tmp.path.string()) == 0);
  const std::string csv = slurp(tmp.path / "screen.csv");
  // header + C(4+2,2) = 15 rows
  int lines = 0;
  for (char ch : csv)
    if (ch == '\n') ++lines;
  CHECK(lines == 16);
}

TEST_CASE("cli: exit codes") {
  CHECK(run_cli("run --driver bogus --eps 1e-3 --seed 1") == 2);
  CHECK(run_cli("run --driver mlmc --eps 1e-3") == 2);       // seed mandatory
  CHECK(run_cli("run --driver mlmc --eps 0.9 --seed 1") == 2);  // eps >= 1/e
  CHECK(run_cli("definitely-not-a-subcommand") == 2);
  TempDir tmp("mluq_cli_codes");
  CHECK(run_cli("run --driver miqmc --eps 4e-3 --seed 1 --dim 2 --sdim 4"
                " --lattice-file /does/not/exist --out " +
                tmp.path.string()) == 2);
  CHECK(run_cli("verify --seed 1 --dim 1") == 0);
}

TEST_CASE("cli: rates re-fit from a saved table") {
  TempDir tmp("mluq_cli_rates");
  REQUIRE(run_cli("screen --driver mlmc --seed 5 --dim 1 --sdim 4 --out " +
                  tmp.path.string()) == 0);
  CHECK(run_cli("rates --table " + (tmp.path / "screen.csv").string()) == 0);
  CHECK(run_cli("rates --table /does/not/exist.csv") == 2);
}

TEST_CASE("cli: mlmc and mlmc-comb coincide in 1D") {
  TempDir tmp1("mluq_cli_eq1");
  TempDir tmp2("mluq_cli_eq2");
  REQUIRE(run_cli("run --driver mlmc --eps 4e-3 --seed 13 --dim 1 --out " +
                  tmp1.path.string()) == 0);
  REQUIRE(run_cli("run --driver mlmc-comb --eps 4e-3 --seed 13 --dim 1 --out " +
                  tmp2.path.string()) == 0);
  CHECK(slurp(tmp1.path / "levels_0.csv") == slurp(tmp2.path / "levels_0.csv"));
}
