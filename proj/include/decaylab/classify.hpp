#pragma once

#include <optional>
#include <string>
#include <vector>

#include "decaylab/flow.hpp"
#include "decaylab/ode.hpp"
#include "decaylab/perturbation.hpp"

namespace decaylab {

struct WindowStats {
  double min = 0.0;
  double max = 0.0;
  double mean = 0.0;
  /// Least-squares slope per decade of (1 + t).
  double drift = 0.0;
  std::size_t count = 0;
};

/// Summary of values over the nodes of `t` with 1 + t >= (1 + t.back()) / 10^decades.
WindowStats window_stats(const std::vector<double>& t, const std::vector<double>& v, double decades = 1.0);

struct RatioSeries {
  std::vector<double> t;
  std::vector<double> finv;
  /// x(t) / F^{-1}(t).
  std::vector<double> values;
  /// x'(t) / f(F^{-1}(t)); empty when the trajectory has no derivatives.
  std::vector<double> deriv_values;
  WindowStats terminal;
  std::optional<WindowStats> terminal_deriv;
};

/// Pointwise ratios on the trajectory grid. Throws DomainError naming the usable
/// sub-range when F^{-1} is unavailable on part of the last two decades.
RatioSeries ratio_series(const Trajectory& traj, const InverseFlow& inv, const NonlinearitySpec& f);

enum class VerdictKind { Preserved, BoundedO, NotPreserved, Inconclusive };
std::string to_string(VerdictKind kind);

struct VerdictConfig {
  double tol_lambda = 0.05;
  /// Largest |drift| per decade still counted as settled.
  double drift_tol = 0.01;
  double c_bound = 10.0;
  /// Slope of log10 |value| per decade above which a series counts as growing.
  double growth_tol = 0.05;
  /// Horizon over which condition checks sample Gamma / F^{-1}.
  double horizon = 1e6;
  int points_per_decade = 16;
};

struct Observation {
  VerdictKind kind = VerdictKind::Inconclusive;
  /// Set only for Preserved.
  int lambda = 0;
  double liminf = 0.0;
  double limsup = 0.0;
  double drift = 0.0;
  /// max |ratio| over the last two decades.
  double two_decade_max = 0.0;
  std::string reason;
};

Observation estimate_lambda(const RatioSeries& rs, const VerdictConfig& config = {});

enum class LimitVerdict { Zero, BoundedNonzero, Unbounded, Divergent };
std::string to_string(LimitVerdict v);

struct ConditionEvidence {
  std::string condition;
  bool integral_converges = true;
  std::vector<double> t;
  std::vector<double> values;
  double terminal_max_abs = 0.0;
  double terminal_last = 0.0;
  LimitVerdict limit = LimitVerdict::Zero;
  std::string note;
};

/// Gamma(t) / F^{-1}(t) over the last two decades before config.horizon, with the
/// convergence status of int g.
ConditionEvidence check_condition_a(const PerturbationSpec& g, const InverseFlow& inv,
                                    const VerdictConfig& config = {});

/// g(t) / f(F^{-1}(t)) over the same window. A zero limit is sufficient, not necessary.
ConditionEvidence check_condition_c(const PerturbationSpec& g, const NonlinearitySpec& f, const InverseFlow& inv,
                                    const VerdictConfig& config = {});

/// Maps condition (a) evidence to the verdict the theory predicts; a zero limit of
/// (c) without a zero limit of (a) is contradictory and yields Inconclusive.
VerdictKind predict(const ConditionEvidence& a, const ConditionEvidence* c = nullptr);

/// Predicted NotPreserved only claims that the observation is not Preserved.
bool consistent(VerdictKind observed, VerdictKind predicted);

struct RateVerdict {
  Observation observed;
  VerdictKind predicted = VerdictKind::Inconclusive;
  std::vector<ConditionEvidence> evidence;
  bool agreement = false;
  /// |x| at the last node is below |x| at the first node and still falling.
  bool decays_to_zero = false;
};

RateVerdict render_verdict(const RatioSeries& rs, const Trajectory& traj, const PerturbationSpec& g,
                           const NonlinearitySpec& f, const InverseFlow& inv, const VerdictConfig& config = {});

}  // namespace decaylab
