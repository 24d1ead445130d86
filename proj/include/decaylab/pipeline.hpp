#pragma once

#include <filesystem>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "decaylab/classify.hpp"
#include "decaylab/noise.hpp"
#include "decaylab/scenario.hpp"
#include "decaylab/sde.hpp"

namespace decaylab {

/// Named file contents produced by one run, written together or not at all.
struct Artifacts {
  std::vector<std::pair<std::string, std::string>> files;

  void add(std::string name, std::string content) { files.emplace_back(std::move(name), std::move(content)); }
  const std::string* find(const std::string& name) const;
};

/// Stages every file in a sibling temporary directory, then renames into `dir`.
/// On failure the staging directory is removed and `dir` is left untouched.
void write_artifacts(const std::filesystem::path& dir, const Artifacts& artifacts);

/// Output directory: explicit value, else $DECAYLAB_OUTPUT_DIR, else "decaylab-out".
std::filesystem::path resolve_output_dir(const std::string& explicit_dir);

std::string to_json_text(const nlohmann::json& j);

nlohmann::json to_json(const LimitEstimate& e);
nlohmann::json to_json(const DecayClass& c);
nlohmann::json to_json(const PhiFBoundsReport& r);
nlohmann::json to_json(const ConditionEvidence& e);
nlohmann::json to_json(const RateVerdict& v);
nlohmann::json to_json(const EnsembleReport& r);
nlohmann::json to_json(const MuEstimate& m);

/// Regime, l and L, Phi tables and inequality slacks for one nonlinearity.
nlohmann::json analyze_f(const NonlinearitySpec& f);

/// CSV (t, Finv) on `points` log-spaced t in [t_max * 1e-6, t_max], preceded by t = 0.
std::string flow_dump_csv(const NonlinearitySpec& f, double t_max, int points);

struct OdeOutcome {
  Trajectory trajectory;
  RatioSeries ratios;
  RateVerdict verdict;
  Artifacts artifacts;
};

/// Validate f, build F^{-1}, integrate, classify. Artifacts: trajectory.csv,
/// ratio_series.csv, verdict.json, effective_config.ini.
OdeOutcome run_ode(const Scenario& s);

struct SdeOutcome {
  PathEnsemble ensemble;
  EnsembleReport report;
  MuEstimate mu;
  /// Ensemble behaviour matches what the mu trichotomy predicts.
  bool agreement = false;
  std::string expectation;
  Artifacts artifacts;
};

/// Artifacts: ensemble.csv, ensemble_summary.json, effective_config.ini.
SdeOutcome run_sde(const Scenario& s);

/// Exit status of a scenario run: 0 agreement, 2 disagreement.
int exit_status(bool agreement);

}  // namespace decaylab
