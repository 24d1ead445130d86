#pragma once

#include <functional>
#include <memory>
#include <string>
#include <string_view>
#include <vector>

namespace decaylab {

class FlowMap;

enum class NonlinearityKind { Power, Linear, FlatExponential, Custom };

std::string_view to_string(NonlinearityKind kind);

/// Mean-reversion function f, stored through its positive branch and always
/// evaluated as the odd extension f(-x) = -f(x).
class NonlinearitySpec {
 public:
  /// f(x) = x^beta, beta > 1.
  static NonlinearitySpec power(double beta);
  /// f(x) = x.
  static NonlinearitySpec linear();
  /// f(x) = exp(-1/x).
  static NonlinearitySpec flat_exponential();
  /// Arbitrary positive branch on (0, x_max]; `monotone_delta` declares the
  /// interval (0, delta] on which f is claimed positive and increasing.
  static NonlinearitySpec custom(std::function<double(double)> positive_branch, double x_max,
                                 double monotone_delta, std::string label = "custom");
  /// Sampled table (x_i, f(x_i)) with 0 < x strictly increasing and f > 0,
  /// interpolated by a shape-preserving cubic in log-log coordinates.
  static NonlinearitySpec from_table(std::vector<double> xs, std::vector<double> fs,
                                     std::string label = "table");
  /// Reads a two-column CSV (x, f(x)); a non-numeric first line is treated as a header.
  static NonlinearitySpec from_csv(const std::string& path);

  double operator()(double x) const;

  NonlinearityKind kind() const noexcept { return kind_; }
  double beta() const noexcept { return beta_; }
  /// Largest |x| accepted by eval (infinity for the closed-form kinds).
  double domain_max() const noexcept { return x_max_; }
  /// Smallest positive x accepted by eval (0 except for tables).
  double domain_min() const noexcept { return x_min_; }
  double monotone_delta() const noexcept { return delta_; }
  const std::string& label() const noexcept { return label_; }
  std::string describe() const;

 private:
  NonlinearitySpec() = default;

  NonlinearityKind kind_ = NonlinearityKind::Power;
  double beta_ = 2.0;
  double x_min_ = 0.0;
  double x_max_ = 0.0;
  double delta_ = 1.0;
  std::string label_;
  std::shared_ptr<const std::function<double(double)>> branch_;
};

/// f(x) with odd extension; throws DomainError outside the declared domain.
double eval_f(const NonlinearitySpec& f, double x);

struct ValidationReport {
  bool positive = true;
  bool increasing = true;
  bool continuous = true;
  bool odd = true;
  /// Smallest x where f was still representable as a normal double.
  double smallest_checked = 0.0;
  double largest_jump = 0.0;
  std::vector<std::string> problems;

  bool ok() const noexcept { return positive && increasing && continuous && odd; }
};

/// Samples f on a geometric grid in (0, delta] and checks the structural invariants.
/// `modulus` bounds the largest jump between neighbouring samples, relative to f(delta).
ValidationReport validate(const NonlinearitySpec& f, int samples = 4096, double modulus = 0.05);

/// Geometric scale grid x_k = x0 * ratio^k used for every x -> 0+ estimate.
struct ScaleGridConfig {
  double x0 = 0.1;
  double ratio = 0.5;
  int rungs = 40;
  int window = 8;
};

/// Liminf/limsup estimate of a ratio functional over the terminal window of a scale grid.
struct LimitEstimate {
  std::vector<double> scale_grid;
  std::vector<double> values;
  double liminf_est = 0.0;
  double limsup_est = 0.0;
  double window_spread = 0.0;
  /// values.back() - values[window_start]: signed drift toward x -> 0.
  double trend = 0.0;
  std::size_t window_start = 0;
  /// Grid was cut short by underflow or the domain floor.
  bool truncated = false;
  bool reduced_confidence = false;
};

/// limsup_{x->0+} f(mu x) / f(x).
LimitEstimate estimate_phi_bar(const NonlinearitySpec& f, double mu, const ScaleGridConfig& grid = {});
/// liminf_{x->0+} f((1-eps) x) / f(x).
LimitEstimate estimate_phi_under(const NonlinearitySpec& f, double eps,
                                 const ScaleGridConfig& grid = {});

struct RhoLimits {
  double l = 0.0;
  double L = 0.0;
  LimitEstimate estimate;
};

/// Liminf (l) and limsup (L) of rho(x) = F(x) f(x) / x.
RhoLimits estimate_rho_limits(const NonlinearitySpec& f, const FlowMap& flow,
                              const ScaleGridConfig& grid = {});

enum class DecayRegime { PowerLike, SlowerThanPower, FasterThanPower, Indeterminate };
std::string_view to_string(DecayRegime regime);

enum class Outcome { Pass, Fail, Inconclusive };
std::string_view to_string(Outcome outcome);

struct Evidence {
  std::string test;
  Outcome outcome = Outcome::Inconclusive;
  double margin = 0.0;
  std::string note;
};

/// Regime of f near zero:
///  - PowerLike: f(x)/x^{1+e} increasing and f(x)/x^{1+h} decreasing for some e, h > 0;
///    F^{-1} obeys both power-like liminf/limsup bounds.
///  - SlowerThanPower: f vanishes no faster than x (f(x)/x^{1+h} decreasing for every h > 0);
///    F^{-1}((1+e)t)/F^{-1}(t) -> 0, e.g. f = x with F^{-1}(t) = e^{-t}.
///  - FasterThanPower: f vanishes faster than every power (f(x)/x^{1+e} increasing for all e);
///    F^{-1}((1+e)t)/F^{-1}(t) -> 1, e.g. f = exp(-1/x) with F^{-1}(t) ~ 1/log t.
struct DecayClass {
  DecayRegime regime = DecayRegime::Indeterminate;
  std::vector<Evidence> evidence;
};

struct ClassifierConfig {
  ScaleGridConfig grid{};
  std::vector<double> eta_ladder{0.0, 1.0 / 16, 0.125, 0.25, 0.5, 1.0, 2.0, 4.0, 8.0, 16.0};
  std::vector<double> mu_ladder{0.5, 0.25};
  std::vector<double> eps_ladder{0.1, 0.01, 0.001};
  /// Relative band inside which a strict inequality test is inconclusive.
  double margin_band = 0.05;
  /// Absolute tolerance on log-differences when judging monotonicity.
  double monotone_tol = 1e-9;
};

enum class Monotonicity { Increasing, Decreasing, Constant, Mixed };
std::string_view to_string(Monotonicity m);

/// Monotonicity of x -> f(x)/x^{1+eta} over the terminal part of the grid.
Monotonicity power_ratio_monotonicity(const NonlinearitySpec& f, double eta,
                                      const ClassifierConfig& config = {});

DecayClass classify_nonlinearity(const NonlinearitySpec& f, const ClassifierConfig& config = {});

struct SuperlinearityReport {
  std::vector<double> x;
  std::vector<double> delta;  // f(x)/x
  double terminal_delta = 0.0;
  bool decreasing = false;
  bool passed = false;
  double tolerance = 0.0;
};

/// f(x)/x -> 0 as x -> 0+: passes when f(x)/x is non-increasing toward zero over the
/// terminal window and ends below `tolerance`.
SuperlinearityReport check_superlinearity(const NonlinearitySpec& f, const ScaleGridConfig& grid = {},
                                          double tolerance = 1e-3);

struct PhiBarLogBoundReport {
  std::vector<double> mu;
  std::vector<double> phi_bar;
  /// Smallest C' making the bound hold at each rung: phi_bar * log(1/mu) / mu.
  std::vector<double> c_needed;
  std::vector<double> slack;
  double c_prime = 0.0;
  /// False when the required C' keeps growing along the ladder (no finite C' exists).
  bool bounded = false;
};

/// Fits the smallest C' with phi_bar(mu) <= C' mu / log(1/mu) across `mus`.
PhiBarLogBoundReport check_phi_bar_log_bound(const NonlinearitySpec& f, const std::vector<double>& mus,
                                             const ScaleGridConfig& grid = {});

/// mu ladder {2^-1, ..., 2^-k}.
std::vector<double> dyadic_ladder(int k);

}  // namespace decaylab
