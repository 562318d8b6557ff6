#include "ctqw/cli.hpp"

#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "ctqw/error.hpp"

using namespace ctqw;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out;
  std::string err;
};

Result invoke(std::vector<std::string> args) {
  args.insert(args.begin(), "ctqw");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path scratch(const std::string& name) {
  const char* base = std::getenv("CTQW_TEST_TMP");
  const fs::path dir = (base ? fs::path(base) : fs::temp_directory_path() / "ctqw_cli_tests") / name;
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

void check_error_json(const std::string& err, const std::string& kind) {
  const auto j = nlohmann::json::parse(err);
  CHECK(j.contains("error"));
  CHECK(j.contains("message"));
  CHECK(j["kind"] == kind);
}

}  // namespace

TEST_CASE("grid parsing") {
  const auto one = cli::parse_grid("0.5");
  CHECK(one.values() == std::vector<double>{0.5});
  const auto lin = cli::parse_grid("1:2:3");
  CHECK(lin.values() == std::vector<double>{1.0, 1.5, 2.0});
  const auto lg = cli::parse_grid("1:100:3:log").values();
  REQUIRE(lg.size() == 3);
  CHECK(lg[1] == doctest::Approx(10.0));
  CHECK_THROWS_AS(cli::parse_grid("a:b"), ConfigError);
  CHECK_THROWS_AS(cli::parse_grid("1:2:0"), ConfigError);
  CHECK_THROWS_AS(cli::parse_grid("0:2:3:log"), ConfigError);
  CHECK_THROWS_AS(cli::parse_grid("1:2:3:cubic"), ConfigError);
}

TEST_CASE("integer list parsing") {
  CHECK(cli::parse_int_list("3") == std::vector<long long>{3});
  CHECK(cli::parse_int_list("3..5") == std::vector<long long>{3, 4, 5});
  CHECK(cli::parse_int_list("2,7") == std::vector<long long>{2, 7});
  CHECK_THROWS_AS(cli::parse_int_list("5..3"), ConfigError);
  CHECK_THROWS_AS(cli::parse_int_list("x"), ConfigError);
}

TEST_CASE("graph parsing") {
  CHECK(cli::parse_graph("dsg:g=4") == GraphSpec::dsg(4));
  CHECK(cli::parse_graph("torus:L=8,d=2") == GraphSpec::torus(8, 2));
  CHECK(cli::parse_graph("torus:L=5,d=1,periodic=false") == GraphSpec::torus(5, 1, false));
  CHECK(cli::parse_graph("complete:n=12") == GraphSpec::complete(12));
  CHECK(cli::parse_graph("dsg:g=4*torus:L=8,d=2") == GraphSpec::product(GraphSpec::dsg(4), GraphSpec::torus(8, 2)));
  CHECK_THROWS_AS(cli::parse_graph("hypercube:d=3"), ConfigError);
  CHECK_THROWS_AS(cli::parse_graph("dsg:q=3"), ConfigError);
}

TEST_CASE("generate writes an edge list") {
  const auto dir = scratch("generate");
  const auto r = invoke({"generate", "--family", "cayley", "--g", "3", "--out", dir.string()});
  REQUIRE(r.code == 0);
  std::ifstream in(dir / "graph.edges");
  CHECK(read_edge_list(in) == build(GraphSpec::cayley_tree(3)));
}

TEST_CASE("spectrum outputs") {
  const auto dir = scratch("spectrum");
  REQUIRE(invoke({"spectrum", "--graph", "dsg:g=3", "--out", dir.string()}).code == 0);
  const auto sums = nlohmann::json::parse(slurp(dir / "sums.json"));
  CHECK(sums.contains("xi1"));
  CHECK(slurp(dir / "spectrum.csv").rfind("index,eigenvalue,multiplicity_group\n", 0) == 0);
  REQUIRE(invoke({"spectrum", "--graph", "dsg:g=3", "--exact", "--out", dir.string()}).code == 0);
  CHECK(fs::exists(dir / "spectrum_exact.csv"));
}

TEST_CASE("exit codes") {
  const auto dir = scratch("codes");
  const auto missing = invoke({});
  CHECK(missing.code == 2);
  check_error_json(missing.err, "config");

  const auto family = invoke({"generate", "--family", "hypercube", "--out", dir.string()});
  CHECK(family.code == 2);
  check_error_json(family.err, "config");

  const auto no_gamma = invoke({"success", "--family", "dsg", "--g", "3", "--out", dir.string()});
  CHECK(no_gamma.code == 2);
  check_error_json(no_gamma.err, "config");

  const auto no_root = invoke({"critgamma", "--family", "dsg", "--g", "3", "--gamma", "10:20:2", "--out", dir.string()});
  CHECK(no_root.code == 3);
  check_error_json(no_root.err, "numerical");
  CHECK(nlohmann::json::parse(no_root.err)["error"] == "no_transition");

  const auto guard = invoke({"spectrum", "--family", "dsg", "--g", "3", "--dense-guard", "5", "--out", dir.string()});
  CHECK(guard.code == 4);
  check_error_json(guard.err, "guard");

  const auto io = invoke({"generate", "--family", "dsg", "--g", "2", "--out", "/dev/null/sub"});
  CHECK(io.code == 5);
  check_error_json(io.err, "io");

  CHECK(invoke({"--help"}).code == 0);
}

TEST_CASE("verify and oracle commands") {
  const auto dir = scratch("verify");
  const auto v = invoke({"verify", "--family", "tfractal", "--g", "3", "--gamma-rel", "0.5,2", "--out", dir.string()});
  CHECK(v.code == 0);
  const auto reports = nlohmann::json::parse(slurp(dir / "bounds.json"));
  CHECK(reports.size() == 2);
  const auto o = invoke({"oracle", "--check", "complete-forms", "--out", dir.string()});
  CHECK(o.code == 0);
  CHECK(fs::exists(dir / "oracle.json"));
  CHECK(invoke({"oracle", "--check", "nothing", "--out", dir.string()}).code == 2);
}

TEST_CASE("output does not depend on the thread count") {
  const auto one = scratch("threads1");
  const auto many = scratch("threads4");
  for (const auto& [d, th] : {std::pair{one, "1"}, std::pair{many, "4"}}) {
    REQUIRE(invoke({"critgamma", "--family", "dsg", "--g", "2..4", "--threads", th, "--out", d.string()}).code == 0);
    REQUIRE(invoke({"success", "--family", "tfractal", "--g", "3", "--gamma", "0.5:4:4", "--tmax", "20", "--tcount",
                    "32", "--threads", th, "--out", d.string()})
                .code == 0);
  }
  for (const char* f : {"critgamma.csv", "success_matrix.csv", "success_long.csv", "success_peaks.csv"}) {
    CAPTURE(f);
    CHECK(slurp(one / f) == slurp(many / f));
    CHECK(!slurp(one / f).empty());
  }
}

TEST_CASE("config file with flag overrides") {
  const auto dir = scratch("config");
  const auto cfg = dir / "run.json";
  std::ofstream(cfg) << R"({"graph": {"family": "dsg", "g": 3}, "gamma": "0.5:2:4", "out": ")" << dir.string()
                     << "\"}\n";
  REQUIRE(invoke({"overlaps", "--config", cfg.string()}).code == 0);
  const std::string base = slurp(dir / "overlaps.csv");
  CHECK(std::count(base.begin(), base.end(), '\n') == 5);
  REQUIRE(invoke({"overlaps", "--config", cfg.string(), "--gamma", "1.5"}).code == 0);
  const std::string over = slurp(dir / "overlaps.csv");
  CHECK(std::count(over.begin(), over.end(), '\n') == 2);
  CHECK(over.find("\n1.5,") != std::string::npos);

  std::ofstream(dir / "bad.json") << "{not json";
  CHECK(invoke({"overlaps", "--config", (dir / "bad.json").string()}).code == 2);
}

TEST_CASE("krylov and dense success grids agree through the cli") {
  const auto dense = scratch("dense");
  const auto kry = scratch("krylov");
  const std::vector<std::string> common{"success", "--family", "dsg", "--g", "4", "--gamma", "2.3", "--tmax", "30",
                                        "--tcount", "16"};
  auto a = common;
  a.insert(a.end(), {"--out", dense.string()});
  auto b = common;
  b.insert(b.end(), {"--krylov", "--out", kry.string()});
  REQUIRE(invoke(a).code == 0);
  REQUIRE(invoke(b).code == 0);
  std::istringstream da(slurp(dense / "success_long.csv")), kb(slurp(kry / "success_long.csv"));
  std::string la, lb;
  std::getline(da, la);
  std::getline(kb, lb);
  int rows = 0;
  while (std::getline(da, la) && std::getline(kb, lb)) {
    const double pa = std::stod(la.substr(la.rfind(',') + 1));
    const double pb = std::stod(lb.substr(lb.rfind(',') + 1));
    CHECK(std::abs(pa - pb) < 1e-8);
    ++rows;
  }
  CHECK(rows == 16);
}
