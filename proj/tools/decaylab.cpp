#include <CLI11.hpp>

#include <cstdint>
#include <iostream>
#include <optional>
#include <string>

#include "decaylab/errors.hpp"
#include "decaylab/pipeline.hpp"
#include "decaylab/verify.hpp"

namespace dl = decaylab;

namespace {

constexpr int kExitError = 1;

struct Globals {
  unsigned threads = 0;
  std::optional<std::uint64_t> seed;
  std::string out;
};

dl::NonlinearitySpec parse_f(const std::string& text) {
  const auto colon = text.find(':');
  const std::string head = text.substr(0, colon);
  const std::string arg = colon == std::string::npos ? "" : text.substr(colon + 1);
  if (head == "power") {
    if (arg.empty()) throw dl::SpecError("--f power needs an exponent, e.g. power:2");
    std::size_t used = 0;
    const double beta = std::stod(arg, &used);
    if (used != arg.size()) throw dl::SpecError("--f power: bad exponent '" + arg + "'");
    return dl::NonlinearitySpec::power(beta);
  }
  if (head == "linear" && arg.empty()) return dl::NonlinearitySpec::linear();
  if (head == "flat_exponential" && arg.empty()) return dl::NonlinearitySpec::flat_exponential();
  if (head == "table" && !arg.empty()) return dl::NonlinearitySpec::from_csv(arg);
  throw dl::SpecError("--f: expected power:<beta>, linear, flat_exponential or table:<csv>, got '" + text + "'");
}

dl::Scenario load(const std::string& path, const Globals& g) {
  dl::Scenario s = dl::load_scenario(path);
  if (g.threads != 0) s.run.threads = g.threads;
  if (g.seed) s.run.seed = g.seed;
  return s;
}

std::filesystem::path out_dir(const Globals& g, const dl::Scenario* s) {
  if (!g.out.empty()) return g.out;
  if (s != nullptr && !s->output.dir.empty()) return s->output.dir;
  return dl::resolve_output_dir("");
}

void print_ode_report(const dl::Scenario& s, const dl::OdeOutcome& o, const std::filesystem::path& dir) {
  const auto& v = o.verdict;
  std::cout << "scenario   " << s.name << "\n"
            << "observed   " << dl::to_string(v.observed.kind);
  if (v.observed.kind == dl::VerdictKind::Preserved) std::cout << "(" << v.observed.lambda << ")";
  std::cout << "\npredicted  " << dl::to_string(v.predicted) << "\n"
            << "ratio      liminf " << dl::format_double(v.observed.liminf) << " limsup "
            << dl::format_double(v.observed.limsup) << " drift " << dl::format_double(v.observed.drift) << "\n";
  for (const auto& e : v.evidence) {
    std::cout << "condition  " << e.condition << ": " << dl::to_string(e.limit) << " (last "
              << dl::format_double(e.terminal_last) << ")\n";
  }
  std::cout << "agreement  " << (v.agreement ? "true" : "false") << "\n"
            << "artifacts  " << dir.string() << "\n";
}

void print_sde_report(const dl::Scenario& s, const dl::SdeOutcome& o, const std::filesystem::path& dir) {
  const auto& r = o.report;
  std::cout << "scenario   " << s.name << "\n"
            << "paths      " << r.n_paths << " (seed " << o.ensemble.seed << ")\n"
            << "buckets    -1 " << r.minus_one << ", 0 " << r.zero << ", +1 " << r.plus_one << ", unresolved "
            << r.unresolved << ", divergent " << r.divergent << "\n"
            << "mu         " << dl::to_string(o.mu.bucket) << "\n"
            << "expect     " << o.expectation << "\n"
            << "agreement  " << (o.agreement ? "true" : "false") << "\n"
            << "artifacts  " << dir.string() << "\n";
}

int run_scenario(const std::string& path, const Globals& g, std::optional<std::size_t> paths, bool report,
                 bool want_sde, bool want_ode) {
  dl::Scenario s = load(path, g);
  if (paths) s.run.paths = *paths;
  const auto dir = out_dir(g, &s);
  if (s.stochastic()) {
    if (!want_sde) throw dl::SpecError(path + ": scenario has a [noise] section; use sde run");
    const dl::SdeOutcome o = dl::run_sde(s);
    dl::write_artifacts(dir, o.artifacts);
    if (report) print_sde_report(s, o, dir);
    return dl::exit_status(o.agreement);
  }
  if (!want_ode) throw dl::SpecError(path + ": scenario has no [noise] section; use ode run");
  const dl::OdeOutcome o = dl::run_ode(s);
  dl::write_artifacts(dir, o.artifacts);
  if (report) print_ode_report(s, o, dir);
  return dl::exit_status(o.verdict.agreement);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"decaylab: decay rates of perturbed scalar dynamics"};
  app.require_subcommand(1);
  Globals g;
  app.add_option("--threads", g.threads, "Cap on worker threads (0 = hardware)")->check(CLI::NonNegativeNumber);
  app.add_option("--seed", g.seed, "Override the scenario seed");
  app.add_option("--out", g.out, "Output directory (default $DECAYLAB_OUTPUT_DIR, then decaylab-out)");

  std::string f_text = "power:2";
  auto* analyze = app.add_subcommand("analyze-f", "Classify a nonlinearity and report l, L and Phi tables");
  analyze->add_option("--f", f_text, "power:<beta> | linear | flat_exponential | table:<csv>");

  auto* flow = app.add_subcommand("flow", "Flow map utilities");
  flow->require_subcommand(1);
  auto* dump = flow->add_subcommand("dump", "Write F^{-1} on a log grid as CSV");
  double t_max = 1e6;
  int points = 100;
  dump->add_option("--f", f_text, "power:<beta> | linear | flat_exponential | table:<csv>");
  dump->add_option("--t-max", t_max, "Largest t")->check(CLI::PositiveNumber);
  dump->add_option("--points", points, "Number of log-spaced points")->check(CLI::Range(2, 1000000));

  std::string scenario;
  auto* ode = app.add_subcommand("ode", "Deterministic runs");
  ode->require_subcommand(1);
  auto* ode_run = ode->add_subcommand("run", "Integrate a scenario and write its verdict");
  ode_run->add_option("--scenario", scenario, "Scenario file")->required();

  auto* sde = app.add_subcommand("sde", "Stochastic ensembles");
  sde->require_subcommand(1);
  auto* sde_run = sde->add_subcommand("run", "Simulate a scenario ensemble");
  std::optional<std::size_t> paths;
  sde_run->add_option("--scenario", scenario, "Scenario file")->required();
  sde_run->add_option("--paths", paths, "Number of paths")->check(CLI::PositiveNumber);
  sde_run->add_option("--seed", g.seed, "Override the scenario seed");

  auto* verdict = app.add_subcommand("verdict", "Run a scenario and print a verdict report");
  verdict->add_option("--scenario", scenario, "Scenario file")->required();

  auto* verify = app.add_subcommand("verify", "Run the acceptance suite");
  double tol_scale = 1.0;
  std::vector<int> only;
  verify->add_option("--tol-scale", tol_scale, "Multiply every tolerance")->check(CLI::PositiveNumber);
  verify->add_option("--criterion", only, "Run only these criteria")->check(CLI::Range(1, 13));

  CLI11_PARSE(app, argc, argv);

  try {
    if (*analyze) {
      const auto f = parse_f(f_text);
      const std::string text = dl::to_json_text(dl::analyze_f(f));
      dl::Artifacts a;
      a.add("analysis.json", text);
      dl::write_artifacts(out_dir(g, nullptr), a);
      std::cout << text;
      return 0;
    }
    if (*dump) {
      const std::string csv = dl::flow_dump_csv(parse_f(f_text), t_max, points);
      dl::Artifacts a;
      a.add("flow.csv", csv);
      dl::write_artifacts(out_dir(g, nullptr), a);
      std::cout << csv;
      return 0;
    }
    if (*ode_run) return run_scenario(scenario, g, std::nullopt, true, false, true);
    if (*sde_run) return run_scenario(scenario, g, paths, true, true, false);
    if (*verdict) return run_scenario(scenario, g, std::nullopt, true, true, true);
    if (*verify) {
      dl::VerifyOptions opt;
      opt.tol_scale = tol_scale;
      opt.threads = g.threads;
      if (g.seed) opt.seed = *g.seed;
      opt.only = only;
      const dl::VerifyReport rep = dl::run_verify_suite(opt);
      for (const auto& r : rep.criteria) std::cout << dl::result_line(r) << "\n";
      std::cout << "\n" << dl::summary_table(rep);
      dl::write_artifacts(out_dir(g, nullptr), rep.artifacts);
      return rep.all_passed() ? 0 : 2;
    }
  } catch (const std::exception& e) {
    std::cerr << "decaylab: " << e.what() << "\n";
    return kExitError;
  }
  return kExitError;
}
