#include <doctest.h>

#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <json.hpp>
#include <sstream>
#include <string>
#include <vector>

#include "cli.hpp"
#include "foldlab/verify.hpp"

using foldlab::cli::run;
using json = nlohmann::json;
namespace fs = std::filesystem;

namespace {

struct Result {
  int code;
  std::string out, err;
};

Result call(const std::vector<std::string>& args) {
  std::ostringstream out, err;
  const int code = run(args, out, err);
  return {code, out.str(), err.str()};
}

struct TempDir {
  fs::path path;
  TempDir() {
    static int counter = 0;
    path = fs::temp_directory_path() /
           ("foldlab_cli_" + std::to_string(::getpid()) + "_" + std::to_string(++counter));
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
  std::string file(const std::string& name) const { return (path / name).string(); }
};

std::string slurp(const std::string& path) {
  std::ifstream in(path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

const std::string kMetrics = FOLDLAB_METRICS_DIR;

}  // namespace

TEST_CASE("spectrum command") {
  SUBCASE("closed form") {
    const auto r = call({"spectrum", "--domain", "rectangle:pi,0.5pi", "--k", "5"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["method"] == "analytic");
    const std::vector<double> expect = {0, 1, 4, 4, 5};
    REQUIRE(j["eigenvalues"].size() == 5);
    for (int i = 0; i < 5; ++i) CHECK(j["eigenvalues"][i].get<double>() == doctest::Approx(expect[i]).epsilon(1e-12));
  }
  SUBCASE("FEM on the disk") {
    const auto r = call({"spectrum", "--domain", "disk:1", "--h", "0.05", "--k", "2"});
    REQUIRE(r.code == 0);
    const auto j = json::parse(r.out);
    CHECK(j["method"] != "analytic");
    CHECK(j["eigenvalues"][1].get<double>() == doctest::Approx(3.3899577).epsilon(2e-3));
  }
  SUBCASE("round sphere") {
    const auto r = call({"spectrum", "--metric", kMetrics + "/round.json", "--L", "6", "--k", "4"});
    REQUIRE(r.code == 0);
    const auto ev = json::parse(r.out)["eigenvalues"];
    CHECK(ev[0].get<double>() == doctest::Approx(0.0).epsilon(1e-10));
    for (int i = 1; i < 4; ++i) CHECK(ev[i].get<double>() == doctest::Approx(2.0).epsilon(1e-10));
  }
  SUBCASE("malformed input") {
    CHECK(call({"spectrum", "--domain", "disk:-1"}).code == 3);
    CHECK(call({"spectrum", "--domain", "blob:1"}).code == 3);
    CHECK(call({"spectrum", "--domain", "disk:1", "--k", "0"}).code == 3);
    CHECK(call({"spectrum", "--domain", "disk:1", "--method", "magic"}).code == 3);
    CHECK(call({"spectrum", "--domain", "ellipse:2,1", "--method", "analytic"}).code == 3);
  }
}

TEST_CASE("verify command") {
  SUBCASE("closed-form domain") {
    const auto r = call({"verify", "--theorem", "domain", "--spec", "square:2pi"});
    REQUIRE(r.code == 0);
    const auto recs = foldlab::verify::parse_json_report(r.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].verdict == foldlab::verify::Verdict::Holds);
    CHECK(recs[0].lhs == doctest::Approx(0.63661977236758134).epsilon(1e-12));
    CHECK(r.err.find("holds") != std::string::npos);
  }
  SUBCASE("two disks under the corollary") {
    const auto r = call({"verify", "--theorem", "corollary", "--spec", "union:disk:1@-1.5,0|disk:1@1.5,0"});
    REQUIRE(r.code == 0);
    CHECK(json::parse(r.out)["records"][0]["lhs"] == "inf");
  }
  SUBCASE("round sphere is the equality case") {
    const auto r = call({"verify", "--theorem", "sphere1", "--metric", kMetrics + "/round.json", "--L", "8"});
    REQUIRE(r.code == 0);
    const auto recs = foldlab::verify::parse_json_report(r.out);
    REQUIRE(recs.size() == 1);
    CHECK(std::abs(recs[0].margin) < 1e-8);
  }
  SUBCASE("bump metric, folded bound") {
    const auto r = call({"verify", "--theorem", "sphere2", "--metric", kMetrics + "/bump.json", "--L", "12"});
    REQUIRE(r.code == 0);
    const auto recs = foldlab::verify::parse_json_report(r.out);
    REQUIRE(recs.size() == 1);
    CHECK(recs[0].theorem_id == "sphere2");
    CHECK(recs[0].margin > recs[0].uncertainty);
  }
  SUBCASE("metric on S^3 gives property records") {
    const auto r = call({"verify", "--theorem", "sphere", "--metric", R"({"type":"harmonic","coeffs":[],"dim":3})"});
    CHECK(r.code == 3);  // --metric takes a file name
    TempDir t;
    { std::ofstream(t.file("s3.json")) << R"({"type":"harmonic","coeffs":[],"dim":3})"; }
    const auto s = call({"verify", "--theorem", "sphere", "--metric", t.file("s3.json")});
    REQUIRE(s.code == 0);
    const auto recs = foldlab::verify::parse_json_report(s.out);
    REQUIRE(recs.size() == 4);
    for (const auto& rec : recs) CHECK(rec.dim == 3);
  }
  SUBCASE("CSV report with timings") {
    TempDir t;
    const auto path = t.file("r.csv");
    const auto r = call({"verify", "--theorem", "wang-xia", "--spec", "box3:1,1,2", "--spec", "disk:1", "--out", path,
                         "--timings"});
    REQUIRE(r.code == 0);
    CHECK(r.out.empty());
    const auto csv = slurp(path);
    CHECK(std::count(csv.begin(), csv.end(), '\n') == 3);
    CHECK(csv.find("wang-xia,box3:1,1,2") == std::string::npos);  // commas are quoted
    CHECK(csv.find("wang-xia,\"box3:1,1,2\",3,>=,") != std::string::npos);
    CHECK(csv.back() == '\n');
    CHECK(csv[csv.size() - 2] != ',');  // wall time present
  }
  SUBCASE("same report for any worker count") {
    const std::vector<std::string> base = {"verify", "--theorem", "domain", "--spec", "square:2pi", "--spec",
                                           "rectangle:2,1", "--spec", "disk:1", "--no-certificate"};
    auto one = base, three = base;
    one.insert(one.end(), {"--jobs", "1"});
    three.insert(three.end(), {"--jobs", "3"});
    const auto a = call(one), b = call(three);
    REQUIRE(a.code == 0);
    CHECK(a.out == b.out);
  }
  SUBCASE("bad arguments") {
    CHECK(call({"verify", "--theorem", "nope", "--spec", "disk:1"}).code == 3);
    CHECK(call({"verify", "--theorem", "domain"}).code == 3);
    CHECK(call({"verify", "--theorem", "domain", "--spec", "disk:1", "--jobs", "0"}).code == 3);
    CHECK(call({"verify", "--theorem", "domain", "--spec", "disk:1", "--out", "r.txt"}).code == 3);
    CHECK(call({"verify", "--theorem", "domain", "--spec", "disk:1", "--bogus"}).code == 3);
    CHECK(call({"verify", "--theorem", "sphere1", "--metric", kMetrics + "/missing.json"}).code == 3);
  }
}

TEST_CASE("kn command") {
  const auto r = call({"kn", "2", "10"});
  REQUIRE(r.code == 0);
  std::istringstream lines(r.out);
  std::string first;
  std::getline(lines, first);
  CHECK(first == "K_2 = 1.000000000000");
  CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 9);
  CHECK(call({"kn", "2", "1"}).code == 3);
  CHECK(call({"kn", "1", "3"}).code == 3);

  TempDir t;
  REQUIRE(call({"kn", "2", "3", "--out", t.file("kn.csv")}).code == 0);
  const auto csv = slurp(t.file("kn.csv"));
  CHECK(csv.rfind("n,kn\n2,1\n3,", 0) == 0);
}

TEST_CASE("sweep command") {
  SUBCASE("short sweep") {
    const auto r = call({"sweep", "--eps", "0.5,0.25", "--h", "0.05"});
    REQUIRE(r.code == 0);
    CHECK(r.out.rfind("eps_over_r,eps,h,mu2,area,product,ratio,uncertainty,verdict\n", 0) == 0);
    CHECK(std::count(r.out.begin(), r.out.end(), '\n') == 3);
    CHECK(r.err.find("increasing") != std::string::npos);
  }
  SUBCASE("neck thinner than the mesh") {
    const auto r = call({"sweep", "--eps", "0.05", "--h", "0.2"});
    CHECK(r.code == 2);
    CHECK(r.err.find("rerun with h <= 0.1") != std::string::npos);
  }
  SUBCASE("eps must decrease") { CHECK(call({"sweep", "--eps", "0.1,0.2"}).code == 3); }
}

TEST_CASE("config file and overrides") {
  TempDir t;
  const auto cfg = t.file("c.json");
  {
    std::ofstream(cfg) << R"({"command": "verify", "theorem": "domain", "spec": "square:2pi", "jobs": 1})";
  }
  const auto a = call({"--config", cfg});
  REQUIRE(a.code == 0);
  CHECK(foldlab::verify::parse_json_report(a.out)[0].lhs == doctest::Approx(0.63661977236758134).epsilon(1e-12));

  // a flag replaces the config value
  const auto b = call({"verify", "--config", cfg, "--spec", "rectangle:2,1"});
  REQUIRE(b.code == 0);
  const auto recs = foldlab::verify::parse_json_report(b.out);
  REQUIRE(recs.size() == 1);
  CHECK(recs[0].input.rfind("rectangle", 0) == 0);

  {
    std::ofstream(cfg) << R"({"command": "kn", "kn_first": 2, "colour": "red"})";
  }
  const auto c = call({"--config", cfg});
  CHECK(c.code == 3);
  CHECK(c.err.find("colour") != std::string::npos);

  {
    std::ofstream(cfg) << "{not json";
  }
  CHECK(call({"--config", cfg}).code == 3);
  CHECK(call({"--config", t.file("absent.json")}).code == 3);
  CHECK(call({}).code == 3);
}

TEST_CASE("help") {
  const auto r = call({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("verify") != std::string::npos);
  CHECK(call({"sweep", "--help"}).code == 0);
}

TEST_CASE("mesh export and import") {
  TempDir t;
  const auto path = t.file("d.msh");
  REQUIRE(call({"mesh", "export", "--domain", "disk:1", "--h", "0.2", "--out", path}).code == 0);
  const auto r = call({"mesh", "import", path});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["components"] == 1);
  CHECK(j["area"].get<double>() == doctest::Approx(3.14159).epsilon(0.05));

  const auto s = call({"spectrum", "--mesh", path, "--k", "2"});
  REQUIRE(s.code == 0);
  CHECK(json::parse(s.out)["eigenvalues"][1].get<double>() == doctest::Approx(3.39).epsilon(0.05));

  { std::ofstream(t.file("bad.msh")) << "garbage\n"; }
  CHECK(call({"mesh", "import", t.file("bad.msh")}).code == 3);
  CHECK(call({"mesh", "shuffle"}).code == 3);
}
