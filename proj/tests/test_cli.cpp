#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "doctest.h"
#include "json.hpp"

#include "did/cli.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const std::string kToy4 = std::string(DID_TEST_DATA_DIR) + "/toy4.csv";

struct Run {
  int code;
  std::string out;
  std::string err;
};

Run run(std::vector<std::string> args) {
  args.insert(args.begin(), "did");
  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  std::ostringstream out, err;
  const int code = did::cli::run(static_cast<int>(argv.size()), argv.data(), out, err);
  return {code, out.str(), err.str()};
}

fs::path temp_path(const std::string& name) {
  const auto dir = fs::temp_directory_path() / "did_cli_tests";
  fs::create_directories(dir);
  return dir / name;
}

std::string slurp(const fs::path& p) {
  std::ifstream f(p);
  std::stringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

}  // namespace

TEST_SUITE("cli") {

TEST_CASE("es on toy4") {
  const auto r = run({"es", "--input", kToy4, "--method", "nyt-all", "--bootstrap", "1000", "--alpha",
                      "0.10", "--seed", "7", "--no-meta"});
  REQUIRE(r.code == 0);
  const auto j = json::parse(r.out);
  CHECK(j["schema_version"] == 1);
  CHECK(!j.contains("meta"));
  const auto& pts = j["event_study"]["points"];
  REQUIRE(pts.size() == 2);
  CHECK(pts[0]["e"] == 1);
  CHECK(pts[0]["estimate"].get<double>() == doctest::Approx(2.5).epsilon(1e-12));
  CHECK(pts[1]["estimate"].get<double>() == doctest::Approx(3.0).epsilon(1e-12));
  CHECK(pts[0].contains("simultaneous_band"));
  CHECK(j["event_study"]["bands_filled"] == true);
}

TEST_CASE("byte-identical reruns") {
  const std::vector<std::string> args{"es", "--input", kToy4, "--include-pre", "--seed", "3", "--no-meta"};
  const auto a = run(args), b = run(args);
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
  const auto c = run({"es", "--input", kToy4, "--include-pre", "--seed", "3"});
  CHECK(json::parse(c.out).contains("meta"));
}

TEST_CASE("thread count does not change the output") {
  const auto sim = temp_path("dyn.csv");
  REQUIRE(run({"simulate", "--scenario", "dynamic", "--n", "400", "--seed", "2", "--emit-csv", sim.string(), "--no-meta"}).code == 0);
  const auto a = run({"--threads", "1", "es", "--input", sim.string(), "--seed", "9", "--no-meta"});
  const auto b = run({"--threads", "4", "es", "--input", sim.string(), "--seed", "9", "--no-meta"});
  CHECK(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("summary values") {
  const auto r = run({"summary", "--input", kToy4, "--method", "never", "--no-meta"});
  REQUIRE(r.code == 0);
  const auto s = json::parse(r.out)["summaries"];
  CHECK(s[0]["name"] == "ATT_simple");
  CHECK(s[0]["estimate"].get<double>() == doctest::Approx(8.0 / 3.0).epsilon(1e-12));
  CHECK(s[1]["estimate"].get<double>() == doctest::Approx(2.75).epsilon(1e-12));
  CHECK(s[2]["estimate"].get<double>() == doctest::Approx(2.5).epsilon(1e-12));
}

TEST_CASE("exit codes") {
  CHECK(run({"es", "--input", "/nonexistent.csv"}).code == did::cli::kExitValidation);
  CHECK(run({"es", "--input", kToy4, "--method", "bogus"}).code == did::cli::kExitValidation);
  CHECK(run({"frobnicate"}).code == did::cli::kExitValidation);
  CHECK(run({"es", "--input", kToy4, "--alpha", "2"}).code == did::cli::kExitValidation);
  const auto g = run({"gmm", "--input", kToy4});
  CHECK(g.code == did::cli::kExitEstimation);
  CHECK(g.err.find("TooManyMoments") != std::string::npos);
  CHECK(run({"jtest", "--input", kToy4, "--allow-big-gmm"}).code == did::cli::kExitValidation);
}

TEST_CASE("never method without a never-treated group is rejected up front") {
  const auto path = temp_path("no_never.csv");
  {
    std::ifstream in(kToy4);
    std::ofstream out(path);
    std::string line;
    while (std::getline(in, line))
      if (line.rfind("u5,", 0) != 0 && line.rfind("u6,", 0) != 0) out << line << '\n';
  }
  const auto r = run({"attgt", "--input", path.string(), "--method", "never"});
  CHECK(r.code == did::cli::kExitValidation);
  const auto ok = run({"attgt", "--input", path.string(), "--method", "nyt", "--no-meta"});
  REQUIRE(ok.code == 0);
  CHECK(ok.err.find("warning:") != std::string::npos);
  const auto j = json::parse(ok.out);
  CHECK(!j["warnings"].empty());
  CHECK(j["attgt"]["cells"].size() == 1);
}

TEST_CASE("plot csv") {
  const auto path = temp_path("curve.csv");
  const auto r = run({"es", "--input", kToy4, "--bootstrap", "0", "--plot-csv", path.string(), "--no-meta"});
  REQUIRE(r.code == 0);
  const auto text = slurp(path);
  CHECK(text.rfind("e,estimate,lo_pw,hi_pw,lo_sim,hi_sim\n", 0) == 0);
  CHECK(text.find("\n1,2.5,NA,NA,NA,NA\n") != std::string::npos);
}

TEST_CASE("simulate then summarize the null scenario") {
  const auto path = temp_path("null.csv");
  const auto s = run({"simulate", "--scenario", "null", "--n", "2000", "--seed", "1", "--emit-csv", path.string(), "--no-meta"});
  REQUIRE(s.code == 0);
  const auto r = run({"summary", "--input", path.string(), "--method", "never", "--no-meta"});
  REQUIRE(r.code == 0);
  const auto att = json::parse(r.out)["summaries"][0];
  CHECK(std::abs(att["estimate"].get<double>()) < 3 * att["se"].get<double>());
}

TEST_CASE("gmm, jtest, twfe, hetero and mc run") {
  const auto path = temp_path("strata.csv");
  REQUIRE(run({"simulate", "--scenario", "strata-trends", "--n", "600", "--seed", "4", "--emit-csv", path.string()}).code == 0);
  const auto g = run({"gmm", "--input", path.string(), "--pta", "all-groups", "--bootstrap", "200", "--no-meta"});
  REQUIRE(g.code == 0);
  CHECK(json::parse(g.out)["fit"]["model"]["df"].get<int>() >= 1);
  const auto jt = run({"jtest", "--input", path.string(), "--no-meta"});
  REQUIRE(jt.code == 0);
  CHECK(json::parse(jt.out)["df"] == 3);
  const auto tw = run({"twfe", "--input", path.string(), "--dynamic", "--interact-stratum", "--no-meta"});
  REQUIRE(tw.code == 0);
  CHECK(json::parse(tw.out)["twfe"]["label"] == "descriptive baseline");
  const auto h = run({"hetero", "--input", path.string(), "--strata-trends", "pooled", "--bootstrap", "200", "--no-meta"});
  REQUIRE(h.code == 0);
  CHECK(json::parse(h.out)["summaries"].size() == 6);
  const auto mc = run({"mc", "--scenario", "null", "--n", "300", "--reps", "5", "--no-meta"});
  REQUIRE(mc.code == 0);
  CHECK(json::parse(mc.out)["stats"].size() > 0);
}

TEST_CASE("help exits cleanly") {
  const auto r = run({"--help"});
  CHECK(r.code == 0);
  CHECK(r.out.find("attgt") != std::string::npos);
}

}
