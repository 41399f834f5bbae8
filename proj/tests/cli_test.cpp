#include <doctest.h>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "soa/rational.hpp"
#include "soa/serialize.hpp"

using nlohmann::json;

namespace {

namespace fs = std::filesystem;

std::string soa_binary() {
  const char* p = std::getenv("SOA_BIN_PATH");
  return p ? std::string(p) : std::string();
}

fs::path work_dir() {
  static const fs::path dir = [] {
    fs::path d = fs::temp_directory_path() / "soa_cli_tests";
    fs::remove_all(d);
    fs::create_directories(d);
    return d;
  }();
  return dir;
}

std::string shell_quote(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    if (c == '\'')
      out += "'\\''";
    else
      out += c;
  }
  out += "'";
  return out;
}

struct RunResult {
  int code = -1;
  std::string out;
  std::string err;
};

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

RunResult run_soa(const std::vector<std::string>& args) {
  static int counter = 0;
  const fs::path out = work_dir() / ("stdout_" + std::to_string(counter) + ".txt");
  const fs::path err = work_dir() / ("stderr_" + std::to_string(counter) + ".txt");
  ++counter;

  std::string cmd = shell_quote(soa_binary());
  for (const auto& a : args) cmd += " " + shell_quote(a);
  cmd += " > " + shell_quote(out.string()) + " 2> " + shell_quote(err.string());

  const int status = std::system(cmd.c_str());
  RunResult r;
  r.code = (status >= 0 && WIFEXITED(status)) ? WEXITSTATUS(status) : -1;
  r.out = slurp(out);
  r.err = slurp(err);
  return r;
}

fs::path write_file(const std::string& name, const std::string& text) {
  const fs::path p = work_dir() / name;
  std::ofstream f(p, std::ios::binary);
  f << text;
  return p;
}

const char* kPropositionalModel = R"json({
  "d": 3,
  "distribution": { "marginals": [
    { "type": "bernoulli", "p": "1/2" },
    { "type": "bernoulli", "p": "1/2" },
    { "type": "bernoulli", "p": "1/2" } ] },
  "expression": "(x1 and x2) or (not x1 and x3)"
})json";

const char* kBilinearModel = R"json({
  "d": 2,
  "distribution": { "marginals": [
    { "type": "uniform", "a": -1, "b": 1 },
    { "type": "uniform", "a": -1, "b": 1 } ] },
  "expression": "x1 + x1 * x2"
})json";

// Every test needs the tool; a missing binary fails loudly rather than
// silently skipping the whole suite.
#define REQUIRE_BINARY()                                      \
  do {                                                        \
    REQUIRE_MESSAGE(!soa_binary().empty(),                    \
                    "SOA_BIN_PATH must point at the CLI");    \
    REQUIRE_MESSAGE(fs::exists(soa_binary()), soa_binary()); \
  } while (0)

}  // namespace

TEST_SUITE_BEGIN("cli");

TEST_CASE("game: enumerates the propositional example exactly") {
  REQUIRE_BINARY();
  const fs::path model = write_file("prop.json", kPropositionalModel);
  const RunResult r = run_soa({"game", "--model", model.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  const json g = json::parse(r.out);
  CHECK(g["d"] == 3);
  CHECK(g["values"][""] == json(0));
  CHECK(g["values"]["1"] == json(0));
  CHECK(g["values"]["2"] == json("1/16"));
  CHECK(g["values"]["3"] == json("1/16"));
  CHECK(g["values"]["1,2"] == json("1/8"));
  CHECK(g["values"]["1,3"] == json("1/8"));
  CHECK(g["values"]["2,3"] == json("1/8"));
  CHECK(g["values"]["1,2,3"] == json("1/4"));
}

TEST_CASE("analyze: exact enumeration reports exact attribution values") {
  REQUIRE_BINARY();
  const fs::path model = write_file("prop2.json", kPropositionalModel);
  const RunResult r = run_soa({"analyze", "--model", model.string(), "--subsets",
                               "1;2;3;1,2;1,3;2,3", "--method", "exact"});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  const json report = json::parse(r.out);
  CHECK(report["model_hash"].get<std::string>().rfind("fnv1a64:", 0) == 0);
  const json& attrs = report["attributions"];
  REQUIRE(attrs.size() == 6);

  const std::vector<std::string> expected = {"1/16", "3/32", "3/32", "1/16", "1/16", "0"};
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(attrs[i]["method"] == "exact-enumeration");
    CHECK(attrs[i]["exact"] == true);
    CHECK(attrs[i]["error_bound"] == 0.0);
    const json& ev = attrs[i]["exact_value"];
    CHECK_MESSAGE(ev == json(expected[i]),
                  "subset #" << i << " got " << ev.dump() << " want " << expected[i]);
    CHECK(attrs[i]["value"] ==
          doctest::Approx(soa::Rational::parse(expected[i]).to_double()).epsilon(1e-15));
  }
}

TEST_CASE("analyze: repeated runs emit byte-identical reports") {
  REQUIRE_BINARY();
  const fs::path model = write_file("prop3.json", kPropositionalModel);
  const std::vector<std::string> args = {"analyze", "--model", model.string(),
                                         "--subsets", "1;2;3"};
  const RunResult a = run_soa(args);
  const RunResult b = run_soa(args);
  REQUIRE(a.code == 0);
  CHECK(a.out == b.out);
}

TEST_CASE("analyze: the spectral path recovers analytic variance shares") {
  REQUIRE_BINARY();
  const fs::path model = write_file("bilinear.json", kBilinearModel);
  const RunResult r = run_soa({"analyze", "--model", model.string(), "--subsets",
                               "1;2;1,2", "--method", "spectral"});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  const json report = json::parse(r.out);
  CHECK(report.contains("pce"));
  CHECK(report.contains("rosenblatt"));
  CHECK(report["pce"]["converged"] == true);
  CHECK(report["pce"]["terms"] == 3);

  const json& attrs = report["attributions"];
  REQUIRE(attrs.size() == 3);
  CHECK(attrs[0]["method"] == "spectral");
  CHECK(attrs[0]["value"].get<double>() == doctest::Approx(7.0 / 18.0).epsilon(1e-8));
  CHECK(attrs[1]["value"].get<double>() == doctest::Approx(1.0 / 18.0).epsilon(1e-8));
  CHECK(attrs[2]["value"].get<double>() == doctest::Approx(1.0 / 9.0).epsilon(1e-8));
  for (const auto& a : attrs) CHECK(a["error_bound"].get<double>() < 1e-8);
}

TEST_CASE("analyze: auto picks enumeration for discrete and expansion for continuous") {
  REQUIRE_BINARY();
  const fs::path discrete = write_file("auto_d.json", kPropositionalModel);
  const RunResult rd = run_soa({"analyze", "--model", discrete.string()});
  REQUIRE(rd.code == 0);
  CHECK(json::parse(rd.out)["attributions"][0]["method"] == "exact-enumeration");

  const fs::path continuous = write_file("auto_c.json", kBilinearModel);
  const RunResult rc = run_soa({"analyze", "--model", continuous.string()});
  REQUIRE(rc.code == 0);
  CHECK(json::parse(rc.out)["attributions"][0]["method"] == "spectral");
}

TEST_CASE("analyze: closed form matches the linear-Gaussian identity") {
  REQUIRE_BINARY();
  const fs::path model = write_file("linear.json", R"json({
    "d": 2,
    "distribution": { "mvnormal": {
      "mean": [0, 0],
      "cov": [[1, 0.5], [0.5, 1]] } },
    "expression": "x1 + x2"
  })json");
  const RunResult r =
      run_soa({"analyze", "--model", model.string(), "--method", "closed-form"});
  REQUIRE_MESSAGE(r.code == 0, r.err);
  const json report = json::parse(r.out);
  const json& attrs = report["attributions"];
  REQUIRE(attrs.size() == 2);
  CHECK(attrs[0]["method"] == "closed-form");
  CHECK(attrs[0]["value"].get<double>() == doctest::Approx(1.5).epsilon(1e-12));
  CHECK(attrs[1]["value"].get<double>() == doctest::Approx(1.5).epsilon(1e-12));

  const fs::path nonlinear = write_file("nonlinear.json", kBilinearModel);
  const RunResult bad =
      run_soa({"analyze", "--model", nonlinear.string(), "--method", "closed-form"});
  CHECK(bad.code == 2);
  CHECK(bad.err.find("linear") != std::string::npos);
}

TEST_CASE("analyze: constraints produce verdicts in the report") {
  REQUIRE_BINARY();
  const fs::path model = write_file("prop4.json", kPropositionalModel);
  const fs::path constraints = write_file("constraints.json", R"json([
    { "kind": "threshold", "subset": [1], "tau": 0.1 },
    { "kind": "ratio", "a": [2], "b": [3], "epsilon": 0.1 },
    { "kind": "threshold", "subset": [1], "tau": 0.01 }
  ])json");
  const RunResult r = run_soa({"analyze", "--model", model.string(), "--subsets", "1;2;3",
                               "--constraints", constraints.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  const json report = json::parse(r.out);
  const json& verdicts = report["verdicts"];
  REQUIRE(verdicts.size() == 3);
  CHECK(verdicts[0]["status"] == "pass");  // Sh_1 = 1/16 <= 0.1
  CHECK(verdicts[0]["constraint"]["kind"] == "threshold");
  CHECK(verdicts[1]["status"] == "pass");  // symmetric inputs, ratio 1
  CHECK(verdicts[2]["status"] == "fail");  // 1/16 > 0.01 with zero error
}

TEST_CASE("table: a second run verifies the file instead of rewriting it") {
  REQUIRE_BINARY();
  const fs::path out = work_dir() / "table33.json";
  const RunResult first =
      run_soa({"table", "--d", "3", "--max-order", "3", "--out", out.string()});
  REQUIRE_MESSAGE(first.code == 0, first.err);
  const std::string bytes_before = slurp(out);
  CHECK(json::parse(bytes_before)["entries"].size() == 19);

  const RunResult second =
      run_soa({"table", "--d", "3", "--max-order", "3", "--out", out.string()});
  REQUIRE(second.code == 0);
  CHECK(second.err.find("table verified, file unchanged") != std::string::npos);
  CHECK(slurp(out) == bytes_before);

  // The binary flavor round-trips through the shared loader too.
  const fs::path bin = work_dir() / "table33.bin";
  REQUIRE(run_soa({"table", "--d", "3", "--max-order", "3", "--out", bin.string()}).code == 0);
  CHECK(soa::load_table(bin.string()).entry_count() == 19);
}

TEST_CASE("analyze: a shallow table without extension permission is a coverage error") {
  REQUIRE_BINARY();
  const fs::path shallow = work_dir() / "shallow.json";
  REQUIRE(run_soa({"table", "--d", "2", "--max-order", "1", "--out", shallow.string()})
              .code == 0);
  const fs::path model = write_file("bilinear2.json", kBilinearModel);

  const RunResult blocked = run_soa({"analyze", "--model", model.string(), "--subsets",
                                     "1", "--method", "spectral", "--table",
                                     shallow.string()});
  CHECK(blocked.code == 3);
  CHECK(blocked.err.find("coverage error") != std::string::npos);
  CHECK(blocked.err.find("{1,2}") != std::string::npos);  // names the missing support

  const RunResult extended = run_soa({"analyze", "--model", model.string(), "--subsets",
                                      "1", "--method", "spectral", "--table",
                                      shallow.string(), "--extend-table"});
  REQUIRE_MESSAGE(extended.code == 0, extended.err);
  // The on-demand rows were persisted back into the table file.
  const json updated = json::parse(slurp(shallow));
  bool has_pair_support = false;
  for (const auto& e : updated["entries"])
    if (e["s"] == json::array({1, 2})) has_pair_support = true;
  CHECK(has_pair_support);
}

TEST_CASE("pce: writes the expansion file and honors --strict on non-convergence") {
  REQUIRE_BINARY();
  const fs::path model = write_file("bilinear3.json", kBilinearModel);
  const fs::path out = work_dir() / "expansion.json";
  const RunResult r = run_soa({"pce", "--model", model.string(), "--out", out.string()});
  REQUIRE_MESSAGE(r.code == 0, r.err);

  const json pce = json::parse(slurp(out));
  CHECK(pce["d"] == 2);
  CHECK(pce["converged"] == true);
  CHECK(pce["coefficients"].size() == 3);

  // The written expansion feeds analyze directly, no model needed.
  const RunResult reuse =
      run_soa({"analyze", "--pce", out.string(), "--subsets", "1;2"});
  REQUIRE_MESSAGE(reuse.code == 0, reuse.err);
  const json reuse_report = json::parse(reuse.out);
  const json& attrs = reuse_report["attributions"];
  CHECK(attrs[0]["value"].get<double>() == doctest::Approx(7.0 / 18.0).epsilon(1e-8));
  CHECK(attrs[1]["value"].get<double>() == doctest::Approx(1.0 / 18.0).epsilon(1e-8));

  // An unreachable residual target: honest flag, exit 4 only under --strict.
  const fs::path hard = write_file("hard.json", R"json({
    "d": 1,
    "distribution": { "marginals": [ { "type": "uniform", "a": -1, "b": 1 } ] },
    "expression": "exp(3 * x1)"
  })json");
  const fs::path hard_out = work_dir() / "hard_expansion.json";
  const RunResult soft = run_soa({"pce", "--model", hard.string(), "--out",
                                  hard_out.string(), "--eps", "1e-30", "--p-max", "3"});
  CHECK(soft.code == 0);
  CHECK(json::parse(slurp(hard_out))["converged"] == false);

  const RunResult strict = run_soa({"--strict", "pce", "--model", hard.string(), "--out",
                                    hard_out.string(), "--eps", "1e-30", "--p-max", "3"});
  CHECK(strict.code == 4);
}

TEST_CASE("bad inputs exit with the input-error code") {
  REQUIRE_BINARY();
  CHECK(run_soa({"game", "--model", (work_dir() / "missing.json").string()}).code == 2);

  const fs::path broken = write_file("broken.json", R"json({
    "d": 1,
    "distribution": { "marginals": [ { "type": "bernoulli", "p": "1/2" } ] },
    "expression": "x1 +"
  })json");
  const RunResult r = run_soa({"game", "--model", broken.string()});
  CHECK(r.code == 2);
  CHECK(!r.err.empty());

  CHECK(run_soa({"analyze"}).code == 2);              // neither --model nor --pce
  CHECK(run_soa({"bogus-subcommand"}).code == 2);     // CLI parse error
  const fs::path ok = write_file("ok.json", kPropositionalModel);
  CHECK(run_soa({"analyze", "--model", ok.string(), "--subsets", "0"}).code == 2);
  CHECK(run_soa({"analyze", "--model", ok.string(), "--method", "warp"}).code == 2);
}

TEST_CASE("reports can be written to a file atomically") {
  REQUIRE_BINARY();
  const fs::path model = write_file("prop5.json", kPropositionalModel);
  const fs::path out = work_dir() / "report.json";
  const RunResult r =
      run_soa({"analyze", "--model", model.string(), "--out", out.string()});
  REQUIRE(r.code == 0);
  CHECK(r.out.empty());  // the report went to the file instead of stdout
  const json report = json::parse(slurp(out));
  CHECK(report.contains("attributions"));
  CHECK_FALSE(fs::exists(out.string() + ".tmp"));
}

TEST_SUITE_END();
