#include <doctest.h>

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "cli/app.hpp"
#include "cli/commands.hpp"
#include "cli/config.hpp"
#include "cli/report.hpp"
#include "flipconc/errors.hpp"

namespace fs = std::filesystem;
using namespace flipconc;
using namespace flipconc::cli;

namespace {

std::string data(const std::string& name) {
  const char* env = std::getenv("FLIPCONC_DATA");
  return (fs::path(env ? env : FLIPCONC_DATA_DIR) / name).string();
}

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run invoke(std::vector<std::string> args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    path = fs::temp_directory_path() / ("flipconc_cli_" + std::to_string(std::rand()) + "_" +
                                        std::to_string(reinterpret_cast<std::uintptr_t>(this)));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string operator/(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::string without_timestamp(const std::string& text) {
  std::istringstream in(text);
  std::string line, kept;
  while (std::getline(in, line)) {
    if (line.find("generated") == std::string::npos) kept += line + '\n';
  }
  return kept;
}

nlohmann::json load_json(const std::string& path) { return nlohmann::json::parse(slurp(path)); }

std::vector<std::vector<std::string>> columns(const std::string& path) {
  std::vector<std::vector<std::string>> rows;
  std::istringstream in(slurp(path));
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream ls(line);
    std::vector<std::string> row;
    std::string tok;
    while (ls >> tok) row.push_back(tok);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace

TEST_CASE("dobrushin prints c(U), the summability norm and the GCB constant") {
  TempDir dir;
  auto r = invoke({"dobrushin", "--potential", data("ising1d_b0.4.pot"), "--out", dir / "d.json"});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0.8 0.8 12.5") != std::string::npos);
  const auto j = load_json(dir / "d.json");
  CHECK(j["c_U"].get<double>() == doctest::Approx(0.8).epsilon(1e-14));
  CHECK(j["gcb_constant"].get<double>() == doctest::Approx(12.5).epsilon(1e-12));
  CHECK(j["empirical"]["violations"] == 0);
  CHECK(j["kind"] == "dobrushin");

  r = invoke({"dobrushin", "--potential", data("ising1d_b0.2.pot"), "--out", ""});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("0.4 0.4 1.38888888889") != std::string::npos);
}

TEST_CASE("dobrushin reports an undefined constant beyond the uniqueness regime") {
  auto r = invoke({"dobrushin", "--potential", data("ising1d_b0.4.pot"), "--beta", "1.5", "--out", ""});
  REQUIRE(r.code == 0);
  CHECK(r.out.find("1.2 1.2 inf") != std::string::npos);
}

TEST_CASE("conserve 31 with independent rates has zero violations") {
  TempDir dir;
  auto r = invoke({"conserve", "--theorem", "31", "--rates", "independent:1", "--torus", "8", "--t-grid", "0.2:2:10",
                "--family", "monomials:2", "--out", dir / "c.json"});
  REQUIRE(r.code == 0);
  const auto j = load_json(dir / "c.json");
  CHECK(j["violations"] == 0);
  CHECK(j["kind"] == "theorem31");
  REQUIRE(j["series"].size() == 10);
  for (const auto& rec : j["series"]) {
    CHECK(rec["C_hat"].get<double>() <= rec["composite"].get<double>());
    CHECK(rec["violations"] == 0);
  }
  CHECK(fs::exists(dir / "c.csv"));
}

TEST_CASE("exit code 1 names the violated inequality") {
  // A constant below the true GCB constant 16 log cosh(1/8) of the uniform product.
  TempDir dir;
  auto r = invoke({"gcb-scan", "--torus", "6", "--constant", "0.1", "--t-grid", "0", "--out", dir / "g.json"});
  CHECK(r.code == 1);
  CHECK(r.err.find("log E exp(f - E f) <= C ||delta f||_2^2") != std::string::npos);
  CHECK(load_json(dir / "g.json")["violations"].get<int>() > 0);

  r = invoke({"uvb-check", "--torus", "6", "--constant", "0.2", "--t-grid", "0", "--out", ""});
  CHECK(r.code == 1);
  CHECK(r.err.find("Var(f) <= C ||delta f||_2^2") != std::string::npos);
}

TEST_CASE("exit code 2 on configuration errors") {
  CHECK(invoke({"conserve", "--theorem", "99", "--out", ""}).code == 2);
  CHECK(invoke({"evolve", "--rates", "glauber:/no/such/file.pot", "--out", ""}).code == 2);
  CHECK(invoke({"evolve", "--rates", "bogus:1", "--out", ""}).code == 2);
  CHECK(invoke({"evolve", "--torus", "5x5", "--out", ""}).code == 2);  // above the exact cap
  CHECK(invoke({"gcb-scan", "--t-grid", "0:1", "--out", ""}).code == 2);
  CHECK(invoke({"symbolic-bound", "--gen", data("generator_nn.gen"), "--n", "20", "--out", ""}).code == 2);
  CHECK(invoke({"conserve", "--init", "dirac:++++++++++", "--out", ""}).code == 2);  // no certified constant
  CHECK(invoke({"--not-a-flag"}).code == 2);
  CHECK(invoke({}).code == 2);
  const auto r = invoke({"conserve", "--theorem", "99", "--out", ""});
  CHECK(r.err.find("--theorem") != std::string::npos);
}

TEST_CASE("time grid parsing") {
  CHECK(parse_time_grid("0:1:5") == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});
  CHECK(parse_time_grid("0.5") == std::vector<double>{0.5});
  CHECK(parse_time_grid("0.1, 0.5,2") == std::vector<double>{0.1, 0.5, 2.0});
  CHECK(parse_time_grid("3:7:1") == std::vector<double>{3.0});
  CHECK_THROWS_AS(parse_time_grid("a,b"), ParseError);
  CHECK_THROWS_AS(parse_time_grid("0:1:0"), ParseError);
  CHECK_THROWS_AS(parse_time_grid("-1"), DomainError);
}

TEST_CASE("config round-trips through serialization") {
  ExperimentConfig cfg;
  CHECK(parse_config(serialize_config(cfg)) == cfg);
  cfg.torus = "4x4";
  cfg.rates = "glauber:some file.pot";
  cfg.beta = 0.1 + 0.2;
  cfg.t_grid = "0.1,0.5,2";
  cfg.A = "0,1";
  cfg.hjc = "exp,exp_square";
  cfg.seed = 18446744073709551615ull;
  cfg.constant = 1.0 / 3.0;
  cfg.window = 4;
  cfg.potential = "a;b#c";
  const auto text = serialize_config(cfg);
  const auto back = parse_config(text);
  CHECK(back == cfg);
  CHECK(serialize_config(back) == text);
}

TEST_CASE("config parsing accepts sections and rejects unknown keys") {
  const auto cfg = parse_config("torus = 6\n; comment\n[bounds]\ntheorem = 53\n[experiment]\nbeta = 0.25\n");
  CHECK(cfg.torus == "6");
  CHECK(cfg.theorem == "53");
  CHECK(cfg.beta == 0.25);
  CHECK_THROWS_AS(parse_config("nonsense = 1\n"), ParseError);
  CHECK_THROWS_AS(parse_config("[bounds]\ntorus = 6\n"), ParseError);
  CHECK_THROWS_AS(parse_config("steps = many\n"), ParseError);
}

TEST_CASE("flags override the config file and the effective config is written back") {
  TempDir dir;
  {
    std::ofstream f(dir / "in.ini");
    f << "[experiment]\ntorus = 4x4\nseed = 9\n[evolve]\nsteps = 3\n";
  }
  auto r = invoke({"--config", dir / "in.ini", "--torus", "6", "--write-config", dir / "eff.ini", "evolve", "--out",
                dir / "e.json"});
  REQUIRE(r.code == 0);
  const auto eff = parse_config(slurp(dir / "eff.ini"));
  CHECK(eff.torus == "6");
  CHECK(eff.seed == 9);
  CHECK(eff.steps == 3);
  const auto j = load_json(dir / "e.json");
  CHECK(j["series"].size() == 4);
  CHECK(j["config"]["experiment"]["torus"] == "6");
}

TEST_CASE("bundled example config runs clean") {
  TempDir dir;
  auto r = invoke({"--config", data("conserve_independent.ini"), "conserve", "--family", "monomials:2", "--out",
                dir / "c.json"});
  REQUIRE(r.code == 0);
  CHECK(load_json(dir / "c.json")["series"].size() == 10);
}

TEST_CASE("plot data: theorem53 report gives three columns with one row per time") {
  TempDir dir;
  REQUIRE(invoke({"conserve", "--theorem", "53", "--rates", "glauber:" + data("ising1d_b0.2.pot"), "--torus", "6",
               "--t-grid", "0.1:1.5:7", "--family", "monomials:2", "--out", dir / "r.json"})
              .code == 0);
  REQUIRE(invoke({"plot", "--report", dir / "r.json", "--out", dir / "r.dat"}).code == 0);
  const auto rows = columns(dir / "r.dat");
  REQUIRE(rows.size() == 7);
  const auto j = load_json(dir / "r.json");
  for (std::size_t k = 0; k < rows.size(); ++k) {
    REQUIRE(rows[k].size() == 3);
    const auto& rec = j["series"][k];
    CHECK(std::stod(rows[k][0]) == rec["t"].get<double>());
    CHECK(std::stod(rows[k][1]) == rec["max_ratio"].get<double>());
    CHECK(std::stod(rows[k][2]) == rec["C"].get<double>());
    CHECK(rows[k][2] == rec["C"].dump());
  }
}

TEST_CASE("plot data: empty report gives an empty file") {
  TempDir dir;
  { std::ofstream(dir / "empty.json"); }
  {
    std::ofstream f(dir / "obj.json");
    f << "{}";
  }
  for (const char* name : {"empty.json", "obj.json"}) {
    REQUIRE(invoke({"plot", "--report", dir / name, "--out", dir / "p.dat"}).code == 0);
    CHECK(fs::file_size(dir / "p.dat") == 0);
  }
  CHECK(invoke({"plot", "--report", dir / "missing.json", "--out", dir / "p.dat"}).code == 2);
}

TEST_CASE("plot data: nogo curves and values copied from the report") {
  TempDir dir;
  REQUIRE(invoke({"nogo", "--rates", "glauber:" + data("ising1d_b0.2.pot"), "--beta", "2", "--torus", "6", "--t-grid",
               "0:1:4", "--window", "1", "--out", dir / "n.json"})
              .code == 0);
  const auto j = load_json(dir / "n.json");
  for (const char* curve : {"tv", "H", "gcb"}) {
    REQUIRE(invoke({"plot", "--report", dir / "n.json", "--curve", curve, "--out", dir / "p.dat"}).code == 0);
    const auto rows = columns(dir / "p.dat");
    REQUIRE(rows.size() == 4);
    const std::string field = std::string(curve) == "gcb" ? "gcb_hat" : curve;
    for (std::size_t k = 0; k < rows.size(); ++k) {
      REQUIRE(rows[k].size() == 2);
      CHECK(rows[k][1] == j["series"][k][field].dump());
    }
  }
  CHECK(invoke({"plot", "--report", dir / "n.json", "--curve", "nope", "--out", dir / "p.dat"}).code == 2);
  // Long-form CSV: one row per time and window.
  const auto csv = slurp(dir / "n.csv");
  CHECK(csv.find("t,tv,H,window,H_per_site,gcb_hat") != std::string::npos);
  CHECK(std::count(csv.begin(), csv.end(), '\n') == 2 + 4 * 2);
}

TEST_CASE("CSV cells match the JSON report text") {
  TempDir dir;
  REQUIRE(invoke({"conserve", "--theorem", "53", "--torus", "5", "--t-grid", "0.5,1", "--out", dir / "r.json"}).code == 0);
  const auto j = load_json(dir / "r.json");
  std::istringstream in(slurp(dir / "r.csv"));
  std::string line;
  std::getline(in, line);
  CHECK(line.rfind("# generated", 0) == 0);
  std::getline(in, line);
  CHECK(line == "t,c_hat,integral,C,max_ratio,violations");
  for (const auto& rec : j["series"]) {
    std::getline(in, line);
    CHECK(line == rec["t"].dump() + "," + rec["c_hat"].dump() + "," + rec["integral"].dump() + "," +
                      rec["C"].dump() + "," + rec["max_ratio"].dump() + "," + rec["violations"].dump());
  }
}

TEST_CASE("same config and seed reproduce outputs byte for byte apart from the timestamp") {
  TempDir dir;
  const std::vector<std::string> base = {"mc",         "--rates",    "glauber:" + data("ising1d_b0.4.pot"),
                                         "--torus",    "6",          "--t",
                                         "0.3,0.8",    "--replicas", "500",
                                         "--seed",     "11",         "--family",
                                         "monomials:1"};
  auto a = base;
  a.insert(a.end(), {"--out", dir / "r.json", "--workers", "1"});
  auto b = base;
  b.insert(b.end(), {"--out", dir / "r.json", "--workers", "3"});
  REQUIRE(invoke(a).code == 0);
  const auto ja = without_timestamp(slurp(dir / "r.json"));
  const auto ca = without_timestamp(slurp(dir / "r.csv"));
  REQUIRE(invoke(a).code == 0);
  CHECK(without_timestamp(slurp(dir / "r.json")) == ja);
  CHECK(without_timestamp(slurp(dir / "r.csv")) == ca);
  // A different worker count changes only the recorded config line.
  REQUIRE(invoke(b).code == 0);
  auto strip_workers = [](std::string s) {
    const auto p = s.find("\"workers\"");
    const auto e = s.find('\n', p);
    return s.erase(p, e - p);
  };
  CHECK(strip_workers(without_timestamp(slurp(dir / "r.json"))) == strip_workers(ja));
  CHECK(without_timestamp(slurp(dir / "r.csv")) == ca);
}

TEST_CASE("mc records carry estimates, errors and exact references") {
  TempDir dir;
  {
    std::ofstream f(dir / "obs.txt");
    f << "1 : 0 1\n---\n0.5 : 2\n";
  }
  REQUIRE(invoke({"mc", "--rates", "independent:1", "--sites-per-dim", "5", "--t", "0.4", "--replicas", "4000",
               "--seed", "5", "--init", "dirac:+++++", "--observable", dir / "obs.txt", "--out", dir / "m.json"})
              .code == 0);
  const auto j = load_json(dir / "m.json");
  REQUIRE(j["records"].size() == 6);
  for (const auto& rec : j["records"]) {
    CHECK(rec["samples"] == 4000);
    CHECK(rec["standard_error"].get<double>() > 0.0);
    CHECK(std::abs(rec["z"].get<double>()) < 5.0);
  }
  CHECK(j["records"][0]["exact"].get<double>() == doctest::Approx(std::exp(-1.6)).epsilon(1e-10));
}

TEST_CASE("symbolic-bound and radius") {
  TempDir dir;
  auto r = invoke({"symbolic-bound", "--gen", data("generator_nn.gen"), "--A", "0,1", "--n", "5", "--out",
                dir / "s.json"});
  REQUIRE(r.code == 0);
  const auto j = load_json(dir / "s.json");
  REQUIRE(j["series"].size() == 5);
  for (const auto& rec : j["series"]) CHECK(rec["ok"] == true);
  CHECK(j["series"][0]["sup_exact"] == "26/5");
  CHECK(j["series"][0]["bound_exact"] == "12");

  r = invoke({"radius", "--gen", data("generator_nn.gen"), "--A", "0,1", "--out", dir / "r.json"});
  REQUIRE(r.code == 0);
  CHECK(load_json(dir / "r.json")["t0"].get<double>() == doctest::Approx(1.0 / 12.0).epsilon(1e-14));
}

TEST_CASE("evolve reports TV contraction toward the stationary law") {
  TempDir dir;
  REQUIRE(invoke({"evolve", "--rates", "independent:1", "--torus", "4", "--init", "dirac:++++", "--family",
               "monomials:1", "--t1", "1", "--steps", "4", "--out", dir / "e.json"})
              .code == 0);
  const auto j = load_json(dir / "e.json");
  REQUIRE(j["series"].size() == 5);
  for (const auto& rec : j["series"]) {
    const double t = rec["t"].get<double>();
    const double p = 0.5 * (1.0 + std::exp(-2.0 * t));
    // Product of four independent spins, each at distance p - 1/2 from uniform.
    double tv = 0.0;
    for (int k = 0; k <= 4; ++k) {
      const double binom = k == 0 || k == 4 ? 1 : (k == 2 ? 6 : 4);
      tv += binom * std::abs(std::pow(p, k) * std::pow(1 - p, 4 - k) - 1.0 / 16.0);
    }
    CHECK(rec["tv"].get<double>() == doctest::Approx(0.5 * tv).epsilon(1e-12));
    CHECK(rec["expectations"][0].get<double>() == doctest::Approx(std::exp(-2.0 * t)).epsilon(1e-12));
  }
}

TEST_CASE("selftest passes") {
  TempDir dir;
  const auto r = invoke({"selftest", "--out", dir / "st.json"});
  CHECK(r.code == 0);
  CHECK(r.out.find("FAIL") == std::string::npos);
  CHECK(load_json(dir / "st.json")["checks"].size() == 8);
}
