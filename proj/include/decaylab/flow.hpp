#pragma once

#include <memory>
#include <vector>

#include "decaylab/nonlinearity.hpp"

namespace decaylab {

struct FlowOptions {
  double abs_tol = 1e-10;
  double rel_tol = 1e-10;
  /// Absolute tolerance on |F(x) - t| when inverting; 4 ulp of t is always added.
  double root_tol = 1e-10;
  int max_panels = 1 << 14;
  /// Extension never goes below this x.
  double x_floor = 1e-300;
};

/// F(x) = int_x^1 du / f(u) with a monotone cache on the dyadic grid x_k = 2^-k.
///
/// Each cached segment [x_k, x_{k-1}] remembers the panel count that met the
/// tolerance, so F restricted to a segment is a fixed smooth quadrature of x.
/// Extension takes an exclusive lock; lookups inside the cached range share it.
class FlowMap {
 public:
  explicit FlowMap(NonlinearitySpec f, FlowOptions options = {});
  ~FlowMap();
  FlowMap(FlowMap&&) noexcept;
  FlowMap& operator=(FlowMap&&) noexcept;
  FlowMap(const FlowMap&) = delete;
  FlowMap& operator=(const FlowMap&) = delete;

  /// F(x) for x > 0. Throws DomainError naming the smallest supported x when the
  /// cache cannot be extended that far.
  double F(double x) const;

  /// Solves F(x) = t for t >= 0.
  double inverse(double t, double root_tol) const;
  double inverse(double t) const { return inverse(t, options_.root_tol); }

  const NonlinearitySpec& nonlinearity() const noexcept { return f_; }
  const FlowOptions& options() const noexcept { return options_; }
  /// Smallest x currently covered by the cache.
  double cached_min() const;
  /// Number of cached dyadic nodes (including x = 1).
  std::size_t cached_nodes() const;

 private:
  struct Cache;

  void ensure_covers_x(double x) const;
  void ensure_covers_t(double t) const;
  double segment_integral(std::size_t k, double x) const;

  NonlinearitySpec f_;
  FlowOptions options_;
  std::unique_ptr<Cache> cache_;
};

double compute_F(const FlowMap& flow, double x);

/// Monotone inverse t -> F^{-1}(t) sharing a FlowMap.
class InverseFlow {
 public:
  explicit InverseFlow(std::shared_ptr<const FlowMap> flow);
  InverseFlow(std::shared_ptr<const FlowMap> flow, double root_tol);

  double operator()(double t) const { return flow_->inverse(t, root_tol_); }

  const FlowMap& flow() const noexcept { return *flow_; }
  std::shared_ptr<const FlowMap> shared_flow() const noexcept { return flow_; }
  const NonlinearitySpec& nonlinearity() const noexcept { return flow_->nonlinearity(); }
  double root_tol() const noexcept { return root_tol_; }

 private:
  std::shared_ptr<const FlowMap> flow_;
  double root_tol_;
};

double compute_F_inverse(const InverseFlow& inv, double t);

InverseFlow make_inverse_flow(const NonlinearitySpec& f, FlowOptions options = {});

/// t values log-spaced on [t_lo, t_hi] (t_lo > 0), `n` points.
std::vector<double> log_spaced(double t_lo, double t_hi, int n);

/// F^{-1}((1+eps) t) / F^{-1}(t) at each t.
std::vector<double> inverse_ratio_series(const InverseFlow& inv, double eps, const std::vector<double>& ts);

struct PhiFBoundsEntry {
  double eps = 0.0;
  /// liminf / limsup over the t window of F^{-1}((1+eps)t) / F^{-1}(t).
  double phi_under_F = 0.0;
  double phi_over_F = 0.0;
  // 1 - phi_under_F in [eps L / (1 + eps (1 + L)), eps L]
  double lower_L = 0.0, upper_L = 0.0;
  double slack_lower_L = 0.0, slack_upper_L = 0.0;
  bool holds_L = false;
  // 1 - phi_over_F in [eps l / (1 + eps (1 + l)), eps l]
  double lower_l = 0.0, upper_l = 0.0;
  double slack_lower_l = 0.0, slack_upper_l = 0.0;
  bool holds_l = false;
  /// liminf_{x->0+} F((1+eps)x) / F(x) over the terminal scale window.
  double psi_under_F = 0.0;
};

struct PhiFBoundsReport {
  double l = 0.0;
  double L = 0.0;
  double t_lo = 0.0, t_hi = 0.0;
  double slack_allowance = 0.0;
  std::vector<PhiFBoundsEntry> entries;
  /// psi_under_F increases toward 1 along the decreasing eps ladder.
  bool psi_approaches_one = false;
  bool all_hold = false;
};

struct PhiFBoundsConfig {
  double t_hi = 1e6;
  double t_lo = 1e5;
  int points = 64;
  /// Added to both sides of each double inequality before judging it.
  double slack_allowance = 1e-3;
  ScaleGridConfig grid{};
};

/// Measures Phi_F on a large-t window and checks the two double inequalities
/// linking it to L and l, plus the F(x) near-zero preservation ladder.
PhiFBoundsReport verify_phi_F_bounds(const InverseFlow& inv, double l, double L,
                                     const std::vector<double>& eps_ladder,
                                     const PhiFBoundsConfig& config = {});

/// F(mu x) / F(x) over the terminal scale window (grows without bound for f = exp(-1/x)).
LimitEstimate estimate_F_scale_ratio(const FlowMap& flow, double mu, const ScaleGridConfig& grid = {});

}  // namespace decaylab
