#include "decaylab/nonlinearity.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

// Boost 1.74's pchip calls isnan unqualified.
using std::isnan;
#include <boost/math/interpolators/pchip.hpp>

#include "decaylab/errors.hpp"
#include "decaylab/flow.hpp"

namespace decaylab {

namespace {

constexpr double kTiny = std::numeric_limits<double>::min();

bool usable(double v) { return std::isfinite(v) && v >= kTiny; }

}  // namespace

std::string_view to_string(NonlinearityKind kind) {
  switch (kind) {
    case NonlinearityKind::Power: return "power";
    case NonlinearityKind::Linear: return "linear";
    case NonlinearityKind::FlatExponential: return "flat_exponential";
    case NonlinearityKind::Custom: return "custom";
  }
  return "unknown";
}

NonlinearitySpec NonlinearitySpec::power(double beta) {
  if (!(beta > 1.0) || !std::isfinite(beta)) {
    throw SpecError("power nonlinearity needs beta > 1, got " + std::to_string(beta));
  }
  NonlinearitySpec s;
  s.kind_ = NonlinearityKind::Power;
  s.beta_ = beta;
  s.x_max_ = std::numeric_limits<double>::infinity();
  s.delta_ = 1.0;
  s.label_ = "power";
  return s;
}

NonlinearitySpec NonlinearitySpec::linear() {
  NonlinearitySpec s;
  s.kind_ = NonlinearityKind::Linear;
  s.beta_ = 1.0;
  s.x_max_ = std::numeric_limits<double>::infinity();
  s.delta_ = 1.0;
  s.label_ = "linear";
  return s;
}

NonlinearitySpec NonlinearitySpec::flat_exponential() {
  NonlinearitySpec s;
  s.kind_ = NonlinearityKind::FlatExponential;
  s.beta_ = 0.0;
  s.x_max_ = std::numeric_limits<double>::infinity();
  s.delta_ = 1.0;
  s.label_ = "flat_exponential";
  return s;
}

NonlinearitySpec NonlinearitySpec::custom(std::function<double(double)> positive_branch, double x_max,
                                          double monotone_delta, std::string label) {
  if (!positive_branch) throw SpecError("custom nonlinearity needs an evaluator");
  if (!(x_max > 0.0)) throw SpecError("custom nonlinearity needs x_max > 0");
  if (!(monotone_delta > 0.0) || monotone_delta > x_max) {
    throw SpecError("custom nonlinearity needs 0 < delta <= x_max");
  }
  NonlinearitySpec s;
  s.kind_ = NonlinearityKind::Custom;
  s.beta_ = 0.0;
  s.x_max_ = x_max;
  s.delta_ = monotone_delta;
  s.label_ = std::move(label);
  s.branch_ = std::make_shared<const std::function<double(double)>>(std::move(positive_branch));
  return s;
}

NonlinearitySpec NonlinearitySpec::from_table(std::vector<double> xs, std::vector<double> fs,
                                              std::string label) {
  if (xs.size() != fs.size()) throw SpecError("table columns differ in length");
  if (xs.size() < 4) throw SpecError("table needs at least 4 rows");
  for (std::size_t i = 0; i < xs.size(); ++i) {
    if (!(xs[i] > 0.0) || !std::isfinite(xs[i])) {
      throw SpecError("table row " + std::to_string(i + 1) + ": x must be positive and finite");
    }
    if (!(fs[i] > 0.0) || !std::isfinite(fs[i])) {
      throw SpecError("table row " + std::to_string(i + 1) + ": f(x) must be positive and finite");
    }
    if (i > 0 && !(xs[i] > xs[i - 1])) {
      throw SpecError("table row " + std::to_string(i + 1) + ": x must be strictly increasing");
    }
    if (i > 0 && !(fs[i] > fs[i - 1])) {
      throw SpecError("table row " + std::to_string(i + 1) + ": f must be strictly increasing");
    }
  }
  const double x_lo = xs.front();
  const double x_hi = xs.back();
  std::vector<double> lx(xs.size()), lf(fs.size());
  std::transform(xs.begin(), xs.end(), lx.begin(), [](double v) { return std::log(v); });
  std::transform(fs.begin(), fs.end(), lf.begin(), [](double v) { return std::log(v); });
  auto interp = std::make_shared<boost::math::interpolators::pchip<std::vector<double>>>(std::move(lx),
                                                                                        std::move(lf));
  NonlinearitySpec s = custom([interp](double x) { return std::exp((*interp)(std::log(x))); }, x_hi, x_hi,
                              std::move(label));
  s.x_min_ = x_lo;
  return s;
}

NonlinearitySpec NonlinearitySpec::from_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw SpecError("cannot open nonlinearity table '" + path + "'");
  std::vector<double> xs, fs;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty() || line[0] == '#') continue;
    std::replace(line.begin(), line.end(), ',', ' ');
    std::istringstream row(line);
    double x = 0.0, fx = 0.0;
    if (!(row >> x >> fx)) {
      if (lineno == 1) continue;  // header
      throw SpecError(path + ":" + std::to_string(lineno) + ": expected two numeric columns (x, f(x))");
    }
    xs.push_back(x);
    fs.push_back(fx);
  }
  return from_table(std::move(xs), std::move(fs), path);
}

double NonlinearitySpec::operator()(double x) const {
  if (x == 0.0) return 0.0;
  const double ax = std::abs(x);
  double v = 0.0;
  switch (kind_) {
    case NonlinearityKind::Power:
      if (beta_ == 2.0) {
        v = ax * ax;
      } else if (beta_ == 3.0) {
        v = ax * ax * ax;
      } else {
        v = std::pow(ax, beta_);
      }
      break;
    case NonlinearityKind::Linear:
      v = ax;
      break;
    case NonlinearityKind::FlatExponential:
      v = std::exp(-1.0 / ax);
      break;
    case NonlinearityKind::Custom:
      if (ax > x_max_ || ax < x_min_) {
        throw DomainError("|x| = " + std::to_string(ax) + " outside the declared domain of " + label_,
                          ax > x_max_ ? x_max_ : x_min_);
      }
      v = (*branch_)(ax);
      break;
  }
  return x < 0.0 ? -v : v;
}

std::string NonlinearitySpec::describe() const {
  std::ostringstream os;
  switch (kind_) {
    case NonlinearityKind::Power: os << "x^" << beta_; break;
    case NonlinearityKind::Linear: os << "x"; break;
    case NonlinearityKind::FlatExponential: os << "exp(-1/x)"; break;
    case NonlinearityKind::Custom: os << "custom(" << label_ << ")"; break;
  }
  return os.str();
}

double eval_f(const NonlinearitySpec& f, double x) { return f(x); }

ValidationReport validate(const NonlinearitySpec& f, int samples, double modulus) {
  ValidationReport rep;
  const double delta = f.monotone_delta();
  const double lo = std::max(delta * 1e-12, f.domain_min());
  const double top = f(delta);
  const double step = std::pow(lo / delta, 1.0 / (samples - 1));

  double prev_x = delta;
  double prev_f = top;
  rep.smallest_checked = delta;
  if (!(top > 0.0)) {
    rep.positive = false;
    rep.problems.push_back("f(delta) is not positive");
  }
  for (int i = 1; i < samples; ++i) {
    const double x = (i + 1 == samples) ? lo : delta * std::pow(step, i);
    const double fx = f(x);
    if (fx >= 0.0 && fx < kTiny && prev_f < 1e-250) break;  // underflow, not a zero of f
    if (!(fx > 0.0)) {
      rep.positive = false;
      rep.problems.push_back("f(" + std::to_string(x) + ") <= 0");
      break;
    }
    if (!(fx < prev_f)) {
      rep.increasing = false;
      rep.problems.push_back("f not strictly increasing between " + std::to_string(x) + " and " +
                             std::to_string(prev_x));
    }
    const double jump = std::abs(prev_f - fx);
    rep.largest_jump = std::max(rep.largest_jump, jump);
    if (jump > modulus * std::abs(top)) {
      rep.continuous = false;
      rep.problems.push_back("jump of " + std::to_string(jump) + " near x = " + std::to_string(x));
    }
    if (f(-x) != -fx) {
      rep.odd = false;
      rep.problems.push_back("odd extension broken at x = " + std::to_string(x));
    }
    rep.smallest_checked = x;
    prev_x = x;
    prev_f = fx;
    if (!usable(fx)) break;
  }
  return rep;
}

namespace {

std::size_t window_size(const ScaleGridConfig& grid, std::size_t n) {
  const auto w = static_cast<std::size_t>(std::max(1, grid.window));
  if (n >= 2 * w) return w;
  return std::max<std::size_t>(std::min<std::size_t>(w, n / 2), std::min<std::size_t>(n, 2));
}

void summarize(LimitEstimate& est, const ScaleGridConfig& grid) {
  const std::size_t n = est.values.size();
  if (n == 0) throw DomainError("no usable scale-grid rungs", grid.x0);
  const std::size_t w = window_size(grid, n);
  est.window_start = n - w;
  const auto first = est.values.begin() + static_cast<std::ptrdiff_t>(est.window_start);
  const auto [mn, mx] = std::minmax_element(first, est.values.end());
  est.liminf_est = *mn;
  est.limsup_est = *mx;
  est.window_spread = *mx - *mn;
  est.trend = est.values.back() - *first;
  est.reduced_confidence = est.truncated && w < static_cast<std::size_t>(grid.window);
}

/// Samples value(x) down the scale grid, stopping at the first rung where it is not
/// computable (underflow, overflow, domain floor).
template <class Sampler>
LimitEstimate sample_grid(const ScaleGridConfig& grid, Sampler&& value) {
  if (!(grid.ratio > 0.0 && grid.ratio < 1.0) || grid.rungs < 1 || !(grid.x0 > 0.0)) {
    throw SpecError("scale grid needs x0 > 0, ratio in (0,1), rungs >= 1");
  }
  LimitEstimate est;
  double x = grid.x0;
  for (int k = 0; k < grid.rungs; ++k, x *= grid.ratio) {
    double v = 0.0;
    try {
      if (!value(x, v)) {
        est.truncated = true;
        break;
      }
    } catch (const DomainError&) {
      est.truncated = true;
      break;
    }
    est.scale_grid.push_back(x);
    est.values.push_back(v);
  }
  summarize(est, grid);
  return est;
}

LimitEstimate ratio_estimate(const NonlinearitySpec& f, double factor, const ScaleGridConfig& grid) {
  return sample_grid(grid, [&](double x, double& out) {
    const double a = f(factor * x);
    const double b = f(x);
    if (!usable(a) || !usable(b)) return false;
    out = a / b;
    return true;
  });
}

}  // namespace

LimitEstimate estimate_phi_bar(const NonlinearitySpec& f, double mu, const ScaleGridConfig& grid) {
  if (!(mu > 0.0 && mu < 1.0)) throw SpecError("mu must lie in (0,1)");
  return ratio_estimate(f, mu, grid);
}

LimitEstimate estimate_phi_under(const NonlinearitySpec& f, double eps, const ScaleGridConfig& grid) {
  if (!(eps > 0.0 && eps < 1.0)) throw SpecError("eps must lie in (0,1)");
  return ratio_estimate(f, 1.0 - eps, grid);
}

RhoLimits estimate_rho_limits(const NonlinearitySpec& f, const FlowMap& flow, const ScaleGridConfig& grid) {
  RhoLimits r;
  r.estimate = sample_grid(grid, [&](double x, double& out) {
    const double fx = f(x);
    if (!usable(fx)) return false;
    const double Fx = flow.F(x);
    if (!std::isfinite(Fx)) return false;
    out = Fx * fx / x;
    return std::isfinite(out);
  });
  r.l = r.estimate.liminf_est;
  r.L = r.estimate.limsup_est;
  return r;
}

std::string_view to_string(DecayRegime regime) {
  switch (regime) {
    case DecayRegime::PowerLike: return "PowerLike";
    case DecayRegime::SlowerThanPower: return "SlowerThanPower";
    case DecayRegime::FasterThanPower: return "FasterThanPower";
    case DecayRegime::Indeterminate: return "Indeterminate";
  }
  return "Indeterminate";
}

std::string_view to_string(Outcome outcome) {
  switch (outcome) {
    case Outcome::Pass: return "pass";
    case Outcome::Fail: return "fail";
    case Outcome::Inconclusive: return "inconclusive";
  }
  return "inconclusive";
}

std::string_view to_string(Monotonicity m) {
  switch (m) {
    case Monotonicity::Increasing: return "increasing";
    case Monotonicity::Decreasing: return "decreasing";
    case Monotonicity::Constant: return "constant";
    case Monotonicity::Mixed: return "mixed";
  }
  return "mixed";
}

namespace {

/// Usable rungs of the grid where f is representable.
std::vector<double> usable_rungs(const NonlinearitySpec& f, const ScaleGridConfig& grid) {
  std::vector<double> xs;
  double x = grid.x0;
  for (int k = 0; k < grid.rungs; ++k, x *= grid.ratio) {
    try {
      if (!usable(f(x))) break;
    } catch (const DomainError&) {
      break;
    }
    xs.push_back(x);
  }
  return xs;
}

}  // namespace

Monotonicity power_ratio_monotonicity(const NonlinearitySpec& f, double eta, const ClassifierConfig& config) {
  const auto rungs = usable_rungs(f, config.grid);
  if (rungs.size() < 2) return Monotonicity::Mixed;
  const auto w = static_cast<std::size_t>(std::max(1, config.grid.window));
  const std::size_t span = rungs.size() >= 2 * w ? w : std::max<std::size_t>(1, rungs.size() / 2);
  const double x_hi = rungs[rungs.size() - 1 - span];
  const double x_lo = rungs.back();
  constexpr int kSub = 8;
  const int n = static_cast<int>(span) * kSub;
  const double step = std::pow(x_lo / x_hi, 1.0 / n);

  bool any_up = false, any_down = false;
  double prev = std::log(f(x_hi)) - (1.0 + eta) * std::log(x_hi);
  for (int i = 1; i <= n; ++i) {
    const double x = (i == n) ? x_lo : x_hi * std::pow(step, i);
    const double cur = std::log(f(x)) - (1.0 + eta) * std::log(x);
    // moving toward zero: cur < prev means the ratio increases with x
    const double d = prev - cur;
    if (d > config.monotone_tol) any_up = true;
    if (d < -config.monotone_tol) any_down = true;
    prev = cur;
  }
  if (any_up && any_down) return Monotonicity::Mixed;
  if (any_up) return Monotonicity::Increasing;
  if (any_down) return Monotonicity::Decreasing;
  return Monotonicity::Constant;
}

DecayClass classify_nonlinearity(const NonlinearitySpec& f, const ClassifierConfig& config) {
  DecayClass out;
  auto add = [&](std::string test, Outcome o, double margin, std::string note = {}) {
    out.evidence.push_back({std::move(test), o, margin, std::move(note)});
  };

  // Monotonicity of f(x)/x^{1+eta} along the ladder.
  bool some_pos_inc = false, some_pos_dec = false, all_pos_dec = true, all_inc = true;
  bool zero_inc = false, zero_dec = false;
  bool have_zero = false;
  for (double eta : config.eta_ladder) {
    const Monotonicity m = power_ratio_monotonicity(f, eta, config);
    const bool inc = m == Monotonicity::Increasing || m == Monotonicity::Constant;
    const bool dec = m == Monotonicity::Decreasing || m == Monotonicity::Constant;
    std::ostringstream name;
    name << "monotonicity f(x)/x^(1+" << eta << ")";
    add(name.str(), m == Monotonicity::Mixed ? Outcome::Inconclusive : Outcome::Pass, 0.0,
        std::string(to_string(m)));
    all_inc = all_inc && inc;
    if (eta == 0.0) {
      have_zero = true;
      zero_inc = inc;
      zero_dec = dec;
      continue;
    }
    some_pos_inc = some_pos_inc || inc;
    some_pos_dec = some_pos_dec || dec;
    all_pos_dec = all_pos_dec && dec;
  }

  const bool pattern_i = some_pos_inc && some_pos_dec;
  const bool pattern_ii = have_zero && zero_inc && all_pos_dec;
  const bool pattern_iii = have_zero && zero_dec;
  const bool pattern_iv = all_inc && !some_pos_dec;
  add("pattern (i) power-like", pattern_i ? Outcome::Pass : Outcome::Fail, 0.0);
  add("pattern (ii)/(iii) at most linear", (pattern_ii || pattern_iii) ? Outcome::Pass : Outcome::Fail, 0.0);
  add("pattern (iv) flatter than every power", pattern_iv ? Outcome::Pass : Outcome::Fail, 0.0);

  // limsup f(mu x)/f(x) < mu, judged with a relative margin band.
  bool phi_bar_strict = true;     // every rung: clearly below mu
  bool phi_bar_not_below = true;  // every rung: not clearly below mu
  for (double mu : config.mu_ladder) {
    const LimitEstimate est = estimate_phi_bar(f, mu, config.grid);
    const double margin = 1.0 - est.limsup_est / mu;
    Outcome o = Outcome::Inconclusive;
    if (margin > config.margin_band) o = Outcome::Pass;
    if (margin < -config.margin_band) o = Outcome::Fail;
    phi_bar_strict = phi_bar_strict && margin > config.margin_band;
    phi_bar_not_below = phi_bar_not_below && margin <= config.margin_band;
    std::ostringstream name;
    name << "phi_bar(" << mu << ") < mu";
    add(name.str(), o, margin, est.reduced_confidence ? "reduced confidence (grid truncated)" : "");
  }

  // liminf f((1-eps)x)/f(x) -> 1 along the eps ladder, approached monotonically.
  std::vector<double> under;
  for (double eps : config.eps_ladder) under.push_back(estimate_phi_under(f, eps, config.grid).liminf_est);
  bool monotone = true;
  for (std::size_t i = 1; i < under.size(); ++i) monotone = monotone && under[i] >= under[i - 1] - 1e-12;
  const double phi_under_margin = under.empty() ? -1.0 : config.margin_band - (1.0 - under.back());
  const bool phi_under_pass = monotone && phi_under_margin > 0.0;
  add("phi_under(eps) -> 1", phi_under_pass ? Outcome::Pass : Outcome::Fail, phi_under_margin,
      monotone ? "" : "ladder not monotone");

  std::vector<DecayRegime> candidates;
  if (pattern_i && phi_bar_strict && phi_under_pass) candidates.push_back(DecayRegime::PowerLike);
  if ((pattern_ii || pattern_iii) && phi_under_pass && phi_bar_not_below) {
    candidates.push_back(DecayRegime::SlowerThanPower);
  }
  if (pattern_iv && !phi_under_pass && phi_bar_strict) candidates.push_back(DecayRegime::FasterThanPower);

  out.regime = candidates.size() == 1 ? candidates.front() : DecayRegime::Indeterminate;
  if (candidates.size() > 1) add("conflict", Outcome::Inconclusive, 0.0, "several regimes matched");
  return out;
}

SuperlinearityReport check_superlinearity(const NonlinearitySpec& f, const ScaleGridConfig& grid, double tolerance) {
  SuperlinearityReport rep;
  rep.tolerance = tolerance;
  const LimitEstimate est = sample_grid(grid, [&](double x, double& out) {
    const double fx = f(x);
    if (!usable(fx)) return false;
    out = fx / x;
    return true;
  });
  rep.x.assign(est.scale_grid.begin() + static_cast<std::ptrdiff_t>(est.window_start), est.scale_grid.end());
  rep.delta.assign(est.values.begin() + static_cast<std::ptrdiff_t>(est.window_start), est.values.end());
  rep.terminal_delta = rep.delta.back();
  rep.decreasing = true;
  for (std::size_t i = 1; i < rep.delta.size(); ++i) {
    rep.decreasing = rep.decreasing && rep.delta[i] <= rep.delta[i - 1] * (1.0 + 1e-12);
  }
  rep.passed = rep.decreasing && rep.terminal_delta < tolerance;
  return rep;
}

PhiBarLogBoundReport check_phi_bar_log_bound(const NonlinearitySpec& f, const std::vector<double>& mus,
                                             const ScaleGridConfig& grid) {
  PhiBarLogBoundReport rep;
  for (double mu : mus) {
    const double phi = estimate_phi_bar(f, mu, grid).limsup_est;
    rep.mu.push_back(mu);
    rep.phi_bar.push_back(phi);
    rep.c_needed.push_back(phi * std::log(1.0 / mu) / mu);
  }
  if (rep.mu.empty()) return rep;
  rep.c_prime = *std::max_element(rep.c_needed.begin(), rep.c_needed.end());
  for (std::size_t i = 0; i < rep.mu.size(); ++i) {
    rep.slack.push_back(rep.c_prime * rep.mu[i] / std::log(1.0 / rep.mu[i]) - rep.phi_bar[i]);
  }
  // A finite C' exists when the requirement has stopped growing by the end of the ladder.
  const double head_max =
      rep.c_needed.size() > 1 ? *std::max_element(rep.c_needed.begin(), rep.c_needed.end() - 1) : 0.0;
  rep.bounded = std::isfinite(rep.c_prime) && rep.c_needed.size() > 1 &&
                rep.c_needed.back() <= head_max * (1.0 + 1e-9);
  return rep;
}

std::vector<double> dyadic_ladder(int k) {
  std::vector<double> out;
  double mu = 0.5;
  for (int i = 0; i < k; ++i, mu *= 0.5) out.push_back(mu);
  return out;
}

}  // namespace decaylab
