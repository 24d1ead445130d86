#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "decaylab/flow.hpp"
#include "decaylab/noise.hpp"

namespace decaylab {

struct SdeConfig {
  /// Steps per dyadic segment [2^k, 2^{k+1}).
  int n_seg = 512;
  double dt_max = 1.0 / 64;
  /// Each step is split into 2^refine substeps whose increments refine the same Brownian path.
  int refine = 0;
  /// 0 uses the hardware concurrency.
  unsigned threads = 0;
  /// Tolerance used for the per-path bucket stored in the ensemble.
  double tol_lambda = 0.1;
  int checkpoints_per_decade = 16;
  /// |X| above this marks a path divergent.
  double blowup = 1e150;
};

/// One uniform-step segment of the piecewise-uniform time grid.
struct StepSegment {
  double t_begin = 0.0;
  double t_end = 0.0;
  double dt = 0.0;
  std::uint64_t steps = 0;
  /// Global index of the segment's first step.
  std::uint64_t first_step = 0;
};

/// [0,1) with dt = 1/n_seg, then [2^k, 2^{k+1}) with dt = min(dt_max, 2^k / n_seg);
/// the last segment ends at horizon with a shortened final step if needed.
std::vector<StepSegment> dyadic_schedule(double horizon, int n_seg, double dt_max);

enum class PathBucket { MinusOne, Zero, PlusOne, Unresolved, Divergent };
std::string to_string(PathBucket b);

struct PathResult {
  double terminal_state = 0.0;
  double terminal_ratio = 0.0;
  /// X(t_c) / F^{-1}(t_c) at the checkpoints of the last decade.
  std::vector<double> ratios;
  /// (M(T) - M(t_c0)) / F^{-1}(t_c0), M(t) = int_0^t sigma dB, t_c0 the first checkpoint.
  double tail_ratio = 0.0;
  /// (M(T) - M(t_c0)) / Sigma(t_c0); NaN where Sigma is undefined.
  double envelope_ratio = 0.0;
  bool divergent = false;
  PathBucket bucket = PathBucket::Unresolved;
};

struct PathEnsemble {
  std::size_t n_paths = 0;
  std::uint64_t seed = 0;
  double x0 = 0.0;
  double horizon = 0.0;
  SdeConfig config;
  std::uint64_t steps_per_path = 0;
  std::vector<double> checkpoint_t;
  std::vector<double> checkpoint_finv;
  std::vector<PathResult> paths;
};

/// Euler-Maruyama ensemble with Brownian increments from Philox4x32-10 keyed by the
/// seed with counter (step, path, bridge node). Paths are independent of the worker count.
PathEnsemble simulate_ensemble(const NonlinearitySpec& f, const NoiseSpec& sigma, double x0, double horizon,
                               std::size_t n_paths, std::uint64_t seed, const InverseFlow& inv,
                               const SdeConfig& config = {});

PathBucket classify_path(const PathResult& path, double tol_lambda);

struct EnsembleReport {
  double tol_lambda = 0.0;
  std::size_t n_paths = 0;
  std::size_t minus_one = 0, zero = 0, plus_one = 0, unresolved = 0, divergent = 0;
  double frac_minus_one = 0.0, frac_zero = 0.0, frac_plus_one = 0.0, frac_unresolved = 0.0, frac_divergent = 0.0;
  /// Share of paths in {-1, 0, +1}.
  double frac_lambda_set = 0.0;
  /// Share of paths with |tail_ratio| < tol_lambda (condition (e) surrogate).
  double frac_tail_decayed = 0.0;
  /// Share of paths with |envelope_ratio| > 1.5; NaN when Sigma is undefined.
  double frac_envelope_exceeded = 0.0;
  std::string note;
};

EnsembleReport classify_ensemble(const PathEnsemble& e, double tol_lambda);

}  // namespace decaylab
