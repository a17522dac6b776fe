#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <sys/wait.h>

#include "hoffns/hoffns.hpp"

using namespace hoffns;
namespace fs = std::filesystem;

namespace {

fs::path fresh_dir(const std::string& name) {
  fs::path p = fs::temp_directory_path() / ("hoffns_cli_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

int cli(const std::string& args) {
  const std::string cmd = std::string(HOFFNS_CLI) + " " + args + " > /dev/null 2>&1";
  const int raw = std::system(cmd.c_str());
  return WIFEXITED(raw) ? WEXITSTATUS(raw) : -1;
}

fs::path scenario(const std::string& name) { return fs::path(HOFFNS_SCENARIOS_DIR) / (name + ".ini"); }

RunConfig small_config() {
  return parse_config_string(R"(
[scenario]
name = small
[grid]
n = 16
[tensor]
preset = random_symmetric 7 0.05
[initial]
data = acoustic(1, 0.01)
[solver]
t_end = 0.2
cadence = 0.05
)");
}

}  // namespace

TEST_CASE("config parsing and defaults", "[cli]") {
  RunConfig c = parse_config_string("[grid]\nn = 32\n[law]\ngamma = 1.4\n");
  CHECK(c.n == 32);
  CHECK(c.law.gamma == 1.4);
  CHECK(c.d == 2);
  CHECK(c.eta == 0.1);
  CHECK(c.tensor.preset == "zero");

  RunConfig a = load_config(scenario("ac3").string());
  CHECK(a.tensor.preset == "random_symmetric");
  CHECK(a.tensor.seed == 7);
  CHECK(a.initial.kind == "acoustic");
  CHECK(a.initial.k == 1);
  CHECK(a.deltas == std::vector<double>{0.4, 0.2, 0.1});
}

TEST_CASE("config errors carry their key or line", "[cli]") {
  auto key_of = [](const std::string& text) {
    try {
      parse_config_string(text);
    } catch (const ConfigError& e) {
      return e.key();
    }
    return std::string("<none>");
  };
  CHECK(key_of("[grid]\nn = 12\n") == "grid.n");
  CHECK(key_of("[grid]\nsize = 12\n") == "grid.size");
  CHECK(key_of("[law]\ngamma = 1\n") == "law");
  CHECK(key_of("[tensor]\npreset = fancy\n") == "tensor.preset");
  CHECK(key_of("[tensor]\npreset = table\ntable = 1 2 3\n") == "tensor.table");
  CHECK(key_of("[initial]\ndata = acoustic(1)\n") == "initial.data");
  CHECK(key_of("[grid]\nn = sixteen\n") == "grid.n");
  CHECK(key_of("[grid\nn = 16\n").rfind("line ", 0) == 0);
  CHECK(key_of("[mollifier]\ndelta = 2\n") == "mollifier.delta");
  CHECK_THROWS_AS(load_config("/nonexistent/config.ini"), ConfigError);
}

TEST_CASE("config round trip", "[cli]") {
  for (const char* name : {"ac3", "equilibrium", "asymmetric", "too_large", "not_coercive"}) {
    RunConfig c = load_config(scenario(name).string());
    CHECK(parse_config_string(serialize_config(c)) == c);
  }
  RunConfig m = small_config();
  m.tensor.time = "sin";
  m.tensor.omega = 2.5;
  m.tensor.time_offset = 1.0;
  m.tensor.space = "cos_profile";
  m.tensor.axis = 2;
  m.tensor.space_offset = 2.0;
  m.initial.kind = "random_bandlimited";
  m.initial.seed = 12;
  m.initial.kmax = 3;
  m.initial.eps = 0.1 / 3.0;
  m.deltas = {0.3, 0.15, 0.075};
  CHECK(parse_config_string(serialize_config(m)) == m);
}

TEST_CASE("OUTPUT_DIR overrides the configured directory", "[cli]") {
  setenv("OUTPUT_DIR", "/tmp/elsewhere", 1);
  RunConfig c = load_config(scenario("ac3").string());
  unsetenv("OUTPUT_DIR");
  CHECK(c.output_dir == "/tmp/elsewhere");
}

TEST_CASE("check command", "[cli]") {
  auto dir = fresh_dir("check");
  std::ostringstream log;
  CHECK(cmd_check(load_config(scenario("equilibrium").string()), dir, log) == exit_code::ok);
  CHECK(fs::exists(dir / "hypotheses.json"));

  log.str("");
  CHECK(cmd_check(load_config(scenario("asymmetric").string()), dir, log) == exit_code::validation);
  CHECK(log.str().find("H1") != std::string::npos);
  CHECK(log.str().find("(1,1,1,2)") != std::string::npos);
  auto j = Json::parse(slurp(dir / "hypotheses.json"));
  CHECK(j["first_failure"] == "H1");

  log.str("");
  CHECK(cmd_check(load_config(scenario("too_large").string()), dir, log) == exit_code::validation);
  CHECK(log.str().find("H4") != std::string::npos);
  CHECK(log.str().find("= 2 > 1") != std::string::npos);
  CHECK(Json::parse(slurp(dir / "hypotheses.json"))["H4"]["ratio"].get<double>() == Catch::Approx(2.0));
}

TEST_CASE("run command outputs", "[cli]") {
  auto dir = fresh_dir("run");
  std::ostringstream log;
  RunConfig c = small_config();
  c.t_end = 0.0;
  REQUIRE(cmd_run(c, dir, false, log) == exit_code::ok);
  std::string csv = slurp(dir / "timeseries.csv");
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2);  // header plus one row

  auto eq = fresh_dir("run_eq");
  REQUIRE(cmd_run(load_config(scenario("equilibrium").string()), eq, false, log) == exit_code::ok);
  CsvTable t = read_csv(eq / "timeseries.csv");
  CHECK(t.header == csv_columns());
  for (const auto& row : t.rows)
    for (std::size_t k = 2; k < row.size() - 2; ++k) CHECK(row[k] == 0.0);

  // refused without --force, accepted with it
  auto bad = fresh_dir("run_bad");
  RunConfig big = small_config();
  big.tensor.amp = 0.2;
  CHECK(cmd_run(big, bad, false, log) == exit_code::validation);
  CHECK_FALSE(fs::exists(bad / "timeseries.csv"));
  CHECK(cmd_run(big, bad, true, log) == exit_code::ok);
}

TEST_CASE("reruns are byte-identical", "[cli]") {
  auto a = fresh_dir("det_a"), b = fresh_dir("det_b");
  std::ostringstream log;
  RunConfig c = small_config();
  REQUIRE(cmd_run(c, a, false, log) == exit_code::ok);
  REQUIRE(cmd_run(c, b, false, log) == exit_code::ok);
  CHECK(slurp(a / "timeseries.csv") == slurp(b / "timeseries.csv"));
  CHECK(slurp(a / "summary.json") == slurp(b / "summary.json"));
  auto s = Json::parse(slurp(a / "summary.json"));
  CHECK(s["completed"] == true);
  CHECK(s["samples"] == 5);
}

TEST_CASE("solver failures give a runtime exit and a summary", "[cli]") {
  auto dir = fresh_dir("fail");
  std::ostringstream log;
  RunConfig c = small_config();
  c.rho_floor = 0.9999999;  // the acoustic density dips below this immediately
  CHECK(cmd_run(c, dir, false, log) == exit_code::runtime);
  auto s = Json::parse(slurp(dir / "summary.json"));
  CHECK(s["completed"] == false);
  CHECK(s["failure"]["kind"] == "positivity");
}

TEST_CASE("sweep of repeated widths gives zero differences", "[cli]") {
  RunConfig c = small_config();
  c.deltas = {0.1, 0.1, 0.1};
  c.sweep_t0 = 0.0;
  SweepOutcome o = sweep_delta(c, 2);
  REQUIRE(o.complete);
  for (double d : o.differences) CHECK(d == 0.0);
}

TEST_CASE("isotropic sweep is bounded by the data differences", "[cli]") {
  RunConfig c = parse_config_string(R"(
[grid]
n = 16
[initial]
data = shear(1, 0.05)
[solver]
t_end = 0.5
cadence = 0.05
sweep_t0 = 0.1
[mollifier]
deltas = 0.4 0.2 0.1
)");
  SweepOutcome o = sweep_delta(c, 1);
  REQUIRE(o.complete);
  SpectralGrid g(2, 16);
  InitialData id = make_initial(g, c.law, c.initial);
  for (std::size_t i = 0; i + 1 < c.deltas.size(); ++i) {
    VectorField a = mollify(g, id.u, c.deltas[i]), b = mollify(g, id.u, c.deltas[i + 1]);
    double d2 = 0.0;
    for (int q = 0; q < 2; ++q)
      for (std::size_t p = 0; p < g.size(); ++p) d2 += (a[q][p] - b[q][p]) * (a[q][p] - b[q][p]);
    const double data = std::sqrt(d2 * g.cell_volume() * (c.t_end - c.sweep_t0));
    CHECK(o.differences[i] <= data);
    CHECK(o.differences[i] > 0.0);
  }
  CHECK(o.decreasing);
}

TEST_CASE("sweep validation", "[cli]") {
  RunConfig c = small_config();
  c.deltas = {0.1, 0.2, 0.05};
  CHECK_THROWS_AS(validate_sweep(c), ConfigError);
  c.deltas = {0.2, 0.1};
  CHECK_THROWS_AS(validate_sweep(c), ConfigError);
}

TEST_CASE("report renders an SVG", "[cli]") {
  auto dir = fresh_dir("report");
  std::ostringstream log;
  REQUIRE(cmd_run(small_config(), dir, false, log) == exit_code::ok);
  REQUIRE(cmd_report(dir / "timeseries.csv", dir, log) == exit_code::ok);
  std::string svg = slurp(dir / "report.svg");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("bootstrap_ratio") != std::string::npos);
  std::ofstream(dir / "broken.csv") << "t,a\n1,2,3\n";
  CHECK_THROWS_AS(cmd_report(dir / "broken.csv", dir, log), ConfigError);
}

TEST_CASE("verify suite and its mutation canaries", "[cli]") {
  auto names_failing = [](Mutation m) {
    std::vector<std::string> out;
    for (const auto& r : run_verify_suite(m))
      if (!r.pass) out.push_back(r.name);
    return out;
  };
  CHECK(names_failing(Mutation::None).empty());
  auto flip = names_failing(Mutation::H1SignFlip);
  CHECK(std::find(flip.begin(), flip.end(), "scalar.ineg2_nonnegative") != flip.end());
  auto clamp = names_failing(Mutation::MollifierClamp);
  CHECK(clamp == std::vector<std::string>{"spectral.mollifier_convergence"});
  CHECK_THROWS_AS(parse_mutation("bogus"), ConfigError);
}

TEST_CASE("command-line exit codes", "[cli]") {
  auto dir = fresh_dir("exe");
  const std::string out = " --out " + dir.string();
  CHECK(cli("check --config " + scenario("ac3").string() + out) == 0);
  CHECK(cli("check --config " + scenario("asymmetric").string() + out) == 1);
  CHECK(cli("check --config " + scenario("not_coercive").string() + out) == 1);
  CHECK(cli("check --config /nonexistent.ini" + out) == 1);
  CHECK(cli("run" + out) == 1);
  CHECK(cli("frobnicate") == 1);
  CHECK(cli("run --config " + scenario("equilibrium").string() + out) == 0);
  CHECK(fs::exists(dir / "timeseries.csv"));
  CHECK(cli("report" + out) == 0);
  CHECK(fs::exists(dir / "report.svg"));
  CHECK(cli("verify --mutate mollifier_clamp" + out) == 3);
  CHECK(fs::exists(dir / "verify.json"));
}
