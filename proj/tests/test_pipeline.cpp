#include <catch_amalgamated.hpp>

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unistd.h>

#include "decaylab/errors.hpp"
#include "decaylab/pipeline.hpp"

using namespace decaylab;
namespace fs = std::filesystem;

namespace {

fs::path scratch_dir(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("decaylab-test-" + std::to_string(::getpid())) / name;
  fs::remove_all(p);
  fs::create_directories(p.parent_path());
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::ostringstream os;
  os << in.rdbuf();
  return os.str();
}

const char* kGolden =
    "[scenario]\nname = golden\n[nonlinearity]\nkind = power\nbeta = 2\n[perturbation]\nform = power_tail\nq = 3\n";

}  // namespace

TEST_CASE("artifacts are written together") {
  const fs::path dir = scratch_dir("write");
  Artifacts a;
  a.add("a.txt", "alpha\n");
  a.add("b.txt", "beta\n");
  write_artifacts(dir, a);
  CHECK(slurp(dir / "a.txt") == "alpha\n");
  CHECK(slurp(dir / "b.txt") == "beta\n");
  a.files[0].second = "gamma\n";
  write_artifacts(dir, a);
  CHECK(slurp(dir / "a.txt") == "gamma\n");
  for (const auto& entry : fs::directory_iterator(dir.parent_path())) {
    CHECK(entry.path().filename().string().find("staging") == std::string::npos);
  }
}

TEST_CASE("a failed write leaves no partial output") {
  const fs::path dir = scratch_dir("fail");
  Artifacts a;
  a.add("ok.txt", "fine\n");
  a.add("missing/sub.txt", "nope\n");
  CHECK_THROWS(write_artifacts(dir, a));
  CHECK_FALSE(fs::exists(dir));
  for (const auto& entry : fs::directory_iterator(dir.parent_path())) {
    CHECK(entry.path().filename().string().find("staging") == std::string::npos);
  }
}

TEST_CASE("output directory resolution") {
  CHECK(resolve_output_dir("explicit") == fs::path("explicit"));
  ::setenv("DECAYLAB_OUTPUT_DIR", "from-env", 1);
  CHECK(resolve_output_dir("") == fs::path("from-env"));
  ::unsetenv("DECAYLAB_OUTPUT_DIR");
  CHECK(resolve_output_dir("") == fs::path("decaylab-out"));
}

TEST_CASE("golden scenario run") {
  const OdeOutcome o = run_ode(parse_scenario_text(kGolden));
  CHECK(o.verdict.agreement);
  CHECK(o.verdict.observed.kind == VerdictKind::Preserved);
  CHECK(o.verdict.observed.lambda == 1);
  CHECK(exit_status(o.verdict.agreement) == 0);
  REQUIRE(o.artifacts.find("trajectory.csv"));
  REQUIRE(o.artifacts.find("ratio_series.csv"));
  REQUIRE(o.artifacts.find("verdict.json"));
  REQUIRE(o.artifacts.find("effective_config.ini"));
  CHECK(o.artifacts.find("trajectory.csv")->rfind("t,x,deriv,Finv,ratio\n0,1,", 0) == 0);
  const auto v = nlohmann::json::parse(*o.artifacts.find("verdict.json"));
  CHECK(v["observed"] == "Preserved");
  CHECK(v["lambda"] == 1);
  CHECK(v["agreement"] == true);
}

TEST_CASE("adversarial scenario agrees on non-preservation") {
  const std::string text =
      "[nonlinearity]\nkind = power\nbeta = 2\n[perturbation]\nform = power_tail\nq = 1.5\n";
  const OdeOutcome o = run_ode(parse_scenario_text(text));
  CHECK(o.verdict.observed.kind == VerdictKind::NotPreserved);
  CHECK(o.verdict.agreement);
}

TEST_CASE("rerunning from the effective configuration reproduces outputs") {
  const OdeOutcome first = run_ode(parse_scenario_text(kGolden));
  const OdeOutcome second = run_ode(parse_scenario_text(*first.artifacts.find("effective_config.ini")));
  REQUIRE(first.artifacts.files.size() == second.artifacts.files.size());
  for (std::size_t i = 0; i < first.artifacts.files.size(); ++i) {
    CHECK(first.artifacts.files[i] == second.artifacts.files[i]);
  }
}

TEST_CASE("output formats select artifacts") {
  const std::string text = std::string(kGolden) + "[output]\nformats = json\n";
  const OdeOutcome o = run_ode(parse_scenario_text(text));
  CHECK_FALSE(o.artifacts.find("trajectory.csv"));
  CHECK(o.artifacts.find("verdict.json"));
}

TEST_CASE("ode run rejects an invalid custom table") {
  const fs::path dir = scratch_dir("table");
  fs::create_directories(dir);
  std::ofstream(dir / "bad.csv") << "x,f\n0.1,0.5\n0.2,0.1\n0.5,0.2\n";
  std::ofstream(dir / "s.ini") << "[nonlinearity]\nkind = custom\ntable = bad.csv\n";
  CHECK_THROWS(run_ode(load_scenario(dir / "s.ini")));
}

TEST_CASE("custom table scenario resolves relative to the file") {
  const fs::path dir = scratch_dir("table_ok");
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "sq.csv");
    csv << "x,f\n";
    for (int k = 40; k >= 0; --k) {
      const double x = std::pow(10.0, -0.2 * k);
      csv << format_double(x) << "," << format_double(x * x) << "\n";
    }
  }
  std::ofstream(dir / "s.ini") << "[nonlinearity]\nkind = custom\ntable = sq.csv\n[perturbation]\nform = power_tail\n"
                                  "q = 3\n[run]\nhorizon = 1e4\n";
  const OdeOutcome o = run_ode(load_scenario(dir / "s.ini"));
  CHECK(o.verdict.observed.kind == VerdictKind::Preserved);
  CHECK(o.artifacts.find("effective_config.ini")->find((dir / "sq.csv").string()) != std::string::npos);
}

TEST_CASE("sde run with zero noise") {
  const std::string text =
      "[nonlinearity]\nkind = power\nbeta = 2\n[noise]\nform = zero\n[run]\nseed = 1\npaths = 4\nhorizon = 100\n";
  const SdeOutcome o = run_sde(parse_scenario_text(text));
  CHECK(o.agreement);
  CHECK(o.report.plus_one == 4);
  const auto j = nlohmann::json::parse(*o.artifacts.find("ensemble_summary.json"));
  CHECK(j["counts"]["+1"] == 4);
  CHECK(j["seed"] == 1);
  CHECK(o.artifacts.find("ensemble.csv")->rfind("path,terminal_state,terminal_ratio,bucket\n0,", 0) == 0);
}

TEST_CASE("sde run with non-square-integrable noise") {
  const std::string text =
      "[nonlinearity]\nkind = power\nbeta = 2\n[noise]\nform = constant\nc = 1\n[run]\nseed = 5\npaths = 20\n"
      "horizon = 1000\n";
  const SdeOutcome o = run_sde(parse_scenario_text(text));
  CHECK(o.expectation.find("unresolved") != std::string::npos);
  CHECK(o.agreement);
}

TEST_CASE("analyze_f report") {
  const auto j = analyze_f(NonlinearitySpec::power(2.0));
  CHECK(j["regime"] == "PowerLike");
  CHECK(std::abs(j["l"].get<double>() - 1.0) < 1e-4);
  CHECK(std::abs(j["L"].get<double>() - 1.0) < 1e-4);
  CHECK(j["phi_F_bounds"]["all_hold"] == true);
  CHECK(analyze_f(NonlinearitySpec::linear())["regime"] == "SlowerThanPower");
  CHECK(analyze_f(NonlinearitySpec::flat_exponential())["regime"] == "FasterThanPower");
}

TEST_CASE("flow dump") {
  const std::string csv = flow_dump_csv(NonlinearitySpec::power(2.0), 100.0, 3);
  CHECK(csv.rfind("t,Finv\n0,1\n1e-04,0.9999000099990001\n", 0) == 0);
  CHECK_THROWS_AS(flow_dump_csv(NonlinearitySpec::power(2.0), 100.0, 1), SpecError);
}
