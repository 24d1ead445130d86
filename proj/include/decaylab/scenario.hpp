#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>

#include "decaylab/noise.hpp"
#include "decaylab/nonlinearity.hpp"
#include "decaylab/perturbation.hpp"

namespace decaylab {

struct NonlinearitySection {
  std::string kind = "power";  // power | linear | flat_exponential | custom
  double beta = 2.0;
  /// CSV table for kind = custom, resolved against the scenario file's directory.
  std::string table;
};

struct PerturbationSection {
  std::string form = "zero";  // zero | power_tail | oscillatory
  double c = 1.0;
  double q = 2.0;
  double omega = 1.0;
};

struct NoiseSection {
  std::string form = "zero";  // zero | power_tail | constant
  double c = 1.0;
  double p = 2.0;
};

struct RunSection {
  double xi = 1.0;
  double horizon = 1e6;
  double rtol = 1e-8;
  double atol = 1e-12;
  double tol_lambda = 0.05;
  double drift_tol = 0.01;
  double c_bound = 10.0;
  std::size_t paths = 200;
  std::optional<std::uint64_t> seed;
  int n_seg = 512;
  double dt_max = 1.0 / 64;
  unsigned threads = 0;
};

struct OutputSection {
  std::string dir;
  bool csv = true;
  bool json = true;
};

struct Scenario {
  std::string name = "scenario";
  std::filesystem::path base_dir = ".";
  NonlinearitySection nonlinearity;
  std::optional<PerturbationSection> perturbation;
  std::optional<NoiseSection> noise;
  RunSection run;
  OutputSection output;

  bool stochastic() const noexcept { return noise.has_value(); }
};

/// Parses INI text with sections [nonlinearity], [perturbation] or [noise], [run], [output].
/// Errors are SpecError with "origin:line: ..." or "origin: [section] key: ..." diagnostics.
Scenario parse_scenario_text(const std::string& text, const std::string& origin = "<scenario>");
Scenario load_scenario(const std::filesystem::path& path);

/// Effective configuration with every default filled in; parsing it yields the same scenario.
std::string to_ini(const Scenario& s);

NonlinearitySpec build_nonlinearity(const Scenario& s);
PerturbationSpec build_perturbation(const Scenario& s);
NoiseSpec build_noise(const Scenario& s);

/// Shortest round-trip decimal form of a double.
std::string format_double(double v);

}  // namespace decaylab
