#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decaylab/pipeline.hpp"

namespace decaylab {

struct CriterionResult {
  int id = 0;
  std::string name;
  bool passed = false;
  std::string expected;
  std::string actual;
  double seconds = 0.0;
};

struct VerifyOptions {
  /// Multiplies every acceptance tolerance; values below 1 tighten the suite.
  double tol_scale = 1.0;
  std::uint64_t seed = 42;
  unsigned threads = 0;
  /// Criterion ids to run; empty runs 1 to 13.
  std::vector<int> only;
};

/// Seed whose ensemble bucket counts are pinned.
inline constexpr std::uint64_t kPinnedSeed = 42;

struct VerifyReport {
  VerifyOptions options;
  std::vector<CriterionResult> criteria;
  /// verify_summary.json and golden_matrix.csv; free of timings so reruns are byte-identical.
  Artifacts artifacts;

  bool all_passed() const;
};

/// Runs the acceptance criteria. Criterion 13 reruns criteria 1 to 12 twice and
/// compares the artifacts byte for byte.
VerifyReport run_verify_suite(const VerifyOptions& options = {});

/// Fixed-width table, one row per criterion.
std::string summary_table(const VerifyReport& report);

/// "criterion N: PASS|FAIL name | expected ... | actual ... | s".
std::string result_line(const CriterionResult& r);

}  // namespace decaylab
