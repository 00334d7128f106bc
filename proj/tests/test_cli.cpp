#include "doctest.h"

#include "erl/mdp_io.hpp"

#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <string>
#include <sys/wait.h>

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

const fs::path kDir = fs::temp_directory_path() / "erl_cli_test";

struct Result {
  int status;
  std::string out;
  std::string err;
};

Result cli(const std::string& args) {
  fs::create_directories(kDir);
  const auto out = kDir / "stdout.txt", err = kDir / "stderr.txt";
  const std::string cmd = std::string(ERL_CLI_PATH) + " " + args + " >" + out.string() + " 2>" + err.string();
  const int raw = std::system(cmd.c_str());
  return {WIFEXITED(raw) ? WEXITSTATUS(raw) : -1, erl::read_text(out), erl::read_text(err)};
}

std::string path(const std::string& name) { return (kDir / name).string(); }

}  // namespace

TEST_CASE("check passes on generated MDPs for both signs") {
  REQUIRE(cli("gen --S 3 --A 2 --H 3 --seed 5 --out " + path("rand.json")).status == 0);
  for (const char* beta : {"1", "-1"}) {
    const Result r = cli(std::string("check --mdp ") + path("rand.json") + " --beta " + beta);
    CHECK(r.status == 0);
    CHECK(r.out.find("FAIL") == std::string::npos);
    CHECK(r.out.find("PASS oracle_equivalence") != std::string::npos);
  }
}

TEST_CASE("lb-gen rejects parameters outside the regime and names the inequality") {
  const Result r = cli("lb-gen --beta 0.1 --H 3 --regime large_beta --xi 0.01");
  CHECK(r.status == 2);
  CHECK(r.err.find("|beta|(H-1) >= log 4") != std::string::npos);
}

TEST_CASE("beta = 0 is a usage error pointing to --risk-neutral") {
  REQUIRE(cli("gen --S 2 --A 2 --H 2 --out " + path("small.json")).status == 0);
  const Result r = cli("solve --mdp " + path("small.json") + " --beta 0");
  CHECK(r.status == 2);
  CHECK(r.err.find("--risk-neutral") != std::string::npos);
  const Result rn = cli("solve --mdp " + path("small.json") + " --risk-neutral");
  CHECK(rn.status == 0);
  CHECK(json::parse(rn.out)["risk_neutral"] == true);
}

TEST_CASE("usage errors exit with 2") {
  CHECK(cli("").status == 2);
  CHECK(cli("frobnicate").status == 2);
  CHECK(cli("solve --beta 1").status == 2);
  CHECK(cli("solve --mdp " + path("missing.json") + " --beta 1").status == 2);
  CHECK(cli("run --beta 1 --episodes 10").status == 2);
}

TEST_CASE("invalid MDP files are validation failures with a location") {
  json doc = json::parse(cli("gen --S 2 --A 2 --H 2").out);
  doc["transitions"][1][0][1] = json::array({0.5, 0.4});
  erl::write_text(path("bad.json"), doc.dump());
  const Result r = cli("solve --mdp " + path("bad.json") + " --beta 1");
  CHECK(r.status == 1);
  CHECK(r.err.find("(h=2, s=0, a=1)") != std::string::npos);
}

TEST_CASE("solve then gaps on Bandit I reproduces the closed-form minimal gap") {
  const double xi = std::exp(-2.0) / 4.0;
  char xi_text[64];
  std::snprintf(xi_text, sizeof xi_text, "%.17g", xi);
  REQUIRE(cli("lb-gen --beta 1 --H 3 --regime large_beta --xi " + std::string(xi_text) + " --out " +
              path("bandit.json"))
              .status == 0);
  const Result solved = cli("solve --mdp " + path("bandit.json") + " --beta 1");
  REQUIRE(solved.status == 0);
  const json values = json::parse(solved.out);
  CHECK(values["beta"] == 1.0);
  CHECK(values["V"].size() == 4);
  CHECK(values["policy"][0][0] == 0);

  const Result gaps = cli("gaps --mdp " + path("bandit.json") + " --beta 1");
  REQUIRE(gaps.status == 0);
  const json report = json::parse(gaps.out);
  CHECK(std::abs(report["delta_min"].get<double>() - std::expm1(2.0) * xi) < 1e-9);
  CHECK(report["mode"] == "reachable_only");
  CHECK(json::parse(cli("gaps --unconstrained --mdp " + path("bandit.json") + " --beta 1").out)["mode"] ==
        "unconstrained");
}

TEST_CASE("identical invocations give identical bytes and inputs stay untouched") {
  REQUIRE(cli("gen --S 3 --A 2 --H 3 --seed 9 --out " + path("g1.json")).status == 0);
  REQUIRE(cli("gen --S 3 --A 2 --H 3 --seed 9 --out " + path("g2.json")).status == 0);
  CHECK(erl::read_text(path("g1.json")) == erl::read_text(path("g2.json")));
  const std::string before = erl::read_text(path("g1.json"));
  cli("gaps --mdp " + path("g1.json") + " --beta -1 --out " + path("gaps1.json"));
  cli("gaps --mdp " + path("g1.json") + " --beta -1 --out " + path("gaps2.json"));
  CHECK(erl::read_text(path("gaps1.json")) == erl::read_text(path("gaps2.json")));
  CHECK(erl::read_text(path("g1.json")) == before);
}

TEST_CASE("run and sweep write CSVs") {
  const json config = {{"agent", "rsvi2"},
                       {"beta", 1.0},
                       {"episodes", 300},
                       {"seeds", {1, 2}},
                       {"lower_bound", {{"H", 3}, {"xi", 0.03}}}};
  erl::write_text(path("run.json"), config.dump());
  fs::remove_all(path("run_out"));
  const Result r = cli("run --config " + path("run.json") + " --out " + path("run_out"));
  CHECK(r.status == 0);
  int traces = 0;
  for (const auto& e : fs::directory_iterator(path("run_out"))) {
    ++traces;
    CHECK(erl::read_text(e.path()).rfind("episode,inst_regret,", 0) == 0);
  }
  CHECK(traces == 2);

  const json grid = {{"base", config}, {"grid", {{"agent", {"rsvi2", "rsq2", "uniform_random"}}}}};
  erl::write_text(path("sweep.json"), grid.dump());
  const Result s1 = cli("sweep --config " + path("sweep.json") + " --out " + path("sweep1"));
  const Result s2 = cli("sweep --config " + path("sweep.json") + " --out " + path("sweep2") + " --workers 3");
  CHECK(s1.status == 0);
  CHECK(s2.status == 0);
  const std::string agg = erl::read_text(path("sweep1") + "/aggregate.csv");
  CHECK(agg == erl::read_text(path("sweep2") + "/aggregate.csv"));
  CHECK(erl::read_text(path("sweep1") + "/cells.csv") == erl::read_text(path("sweep2") + "/cells.csv"));
  CHECK(std::count(agg.begin(), agg.end(), '\n') == 4);
}
