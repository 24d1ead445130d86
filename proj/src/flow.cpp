#include "decaylab/flow.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <mutex>
#include <shared_mutex>
#include <sstream>

#include "decaylab/errors.hpp"
#include "decaylab/quadrature.hpp"

namespace decaylab {

namespace {

constexpr double kHuge = 1e300;

std::string fmt(double v) {
  std::ostringstream os;
  os.precision(6);
  os << v;
  return os.str();
}

}  // namespace

struct FlowMap::Cache {
  mutable std::shared_mutex mutex;
  // node k sits at x = 2^-k; F_at[k] = F(2^-k), panels[k] is the rule used on [2^-k, 2^-(k-1)].
  std::vector<double> x{1.0};
  std::vector<double> F_at{0.0};
  std::vector<int> panels{0};
  bool closed = false;
  std::string closed_reason;
};

FlowMap::FlowMap(NonlinearitySpec f, FlowOptions options)
    : f_(std::move(f)), options_(options), cache_(std::make_unique<Cache>()) {
  if (!(options_.abs_tol > 0.0) || !(options_.rel_tol > 0.0) || !(options_.root_tol > 0.0)) {
    throw SpecError("flow tolerances must be positive");
  }
  if (options_.max_panels < 1) throw SpecError("flow max_panels must be >= 1");
}

FlowMap::~FlowMap() = default;
FlowMap::FlowMap(FlowMap&&) noexcept = default;
FlowMap& FlowMap::operator=(FlowMap&&) noexcept = default;

double FlowMap::cached_min() const {
  std::shared_lock lock(cache_->mutex);
  return cache_->x.back();
}

std::size_t FlowMap::cached_nodes() const {
  std::shared_lock lock(cache_->mutex);
  return cache_->x.size();
}

namespace {

/// Integrand of F in s = log u: du / f(u) = u / f(u) ds.
std::function<double(double)> log_integrand(const NonlinearitySpec& f) {
  return [&f](double s) {
    const double u = std::exp(s);
    return u / f(u);
  };
}

}  // namespace

double FlowMap::segment_integral(std::size_t k, double x) const {
  const double top = cache_->x[k - 1];
  return quadrature::gauss_legendre(log_integrand(f_), std::log(x), std::log(top), cache_->panels[k]);
}

void FlowMap::ensure_covers_x(double x) const {
  {
    std::shared_lock lock(cache_->mutex);
    if (x >= cache_->x.back()) return;
    if (cache_->closed) {
      throw DomainError("F(" + fmt(x) + ") not computable: " + cache_->closed_reason +
                            "; smallest supported x is " + fmt(cache_->x.back()),
                        cache_->x.back());
    }
  }
  std::unique_lock lock(cache_->mutex);
  Cache& c = *cache_;
  while (x < c.x.back() && !c.closed) {
    const double top = c.x.back();
    const double bottom = top * 0.5;
    auto close = [&](std::string why) {
      c.closed = true;
      c.closed_reason = std::move(why);
    };
    if (bottom < options_.x_floor || bottom < f_.domain_min()) {
      close("x below the domain floor");
      break;
    }
    double fb = 0.0;
    try {
      fb = f_(bottom);
    } catch (const DomainError&) {
      close("f undefined below " + fmt(top));
      break;
    }
    if (!std::isnormal(fb) || !std::isfinite(bottom / fb)) {
      close("f underflows below " + fmt(top));
      break;
    }
    quadrature::PanelResult r;
    try {
      r = quadrature::integrate_doubling(log_integrand(f_), std::log(bottom), std::log(top), options_.abs_tol,
                                         options_.rel_tol, options_.max_panels);
    } catch (const DomainError&) {
      close("f undefined below " + fmt(top));
      break;
    }
    const double next = c.F_at.back() + r.value;
    if (!r.converged || !std::isfinite(r.value) || !(r.value > 0.0) || next > kHuge) {
      close("quadrature tolerance unachievable below " + fmt(top));
      break;
    }
    c.x.push_back(bottom);
    c.F_at.push_back(next);
    c.panels.push_back(r.panels);
  }
  if (x < c.x.back()) {
    throw DomainError("F(" + fmt(x) + ") not computable: " + c.closed_reason + "; smallest supported x is " +
                          fmt(c.x.back()),
                      c.x.back());
  }
}

void FlowMap::ensure_covers_t(double t) const {
  for (;;) {
    double bottom = 0.0;
    {
      std::shared_lock lock(cache_->mutex);
      if (cache_->F_at.back() >= t) return;
      bottom = cache_->x.back();
      if (cache_->closed) {
        throw DomainError("F^-1(" + fmt(t) + ") not computable: bracket reached the domain floor at x = " +
                              fmt(bottom) + " where F = " + fmt(cache_->F_at.back()),
                          cache_->F_at.back());
      }
    }
    try {
      ensure_covers_x(bottom * 0.5);
    } catch (const DomainError&) {
      std::shared_lock lock(cache_->mutex);
      throw DomainError("F^-1(" + fmt(t) + ") not computable: bracket reached the domain floor at x = " +
                            fmt(cache_->x.back()) + " where F = " + fmt(cache_->F_at.back()),
                        cache_->F_at.back());
    }
  }
}

double FlowMap::F(double x) const {
  if (!(x > 0.0) || !std::isfinite(x)) throw DomainError("F needs finite x > 0, got " + fmt(x), 0.0);
  if (x == 1.0) return 0.0;
  if (x > 1.0) {
    const auto r = quadrature::integrate_doubling(log_integrand(f_), 0.0, std::log(x), options_.abs_tol,
                                                  options_.rel_tol, options_.max_panels);
    if (!r.converged) throw DomainError("F(" + fmt(x) + ") quadrature did not converge", 1.0);
    return -r.value;
  }
  ensure_covers_x(x);
  std::shared_lock lock(cache_->mutex);
  const auto& xs = cache_->x;
  // first node <= x (xs is decreasing)
  const auto it = std::lower_bound(xs.begin(), xs.end(), x, std::greater<>());
  const auto k = static_cast<std::size_t>(it - xs.begin());
  if (*it == x) return cache_->F_at[k];
  return cache_->F_at[k - 1] + segment_integral(k, x);
}

double FlowMap::inverse(double t, double root_tol) const {
  if (std::isnan(t) || t < 0.0) throw DomainError("F^-1 needs t >= 0, got " + fmt(t), 0.0);
  if (t == 0.0) return 1.0;
  if (!std::isfinite(t)) throw DomainError("F^-1 needs finite t", 0.0);
  ensure_covers_t(t);

  double lo = 0.0, hi = 0.0, F_lo = 0.0, F_hi = 0.0;
  std::size_t k = 0;
  {
    std::shared_lock lock(cache_->mutex);
    const auto& Fs = cache_->F_at;
    const auto it = std::lower_bound(Fs.begin(), Fs.end(), t);
    k = static_cast<std::size_t>(it - Fs.begin());
    if (*it == t) return cache_->x[k];
    lo = cache_->x[k];
    hi = cache_->x[k - 1];
    F_lo = Fs[k];
    F_hi = Fs[k - 1];
  }
  const double tol = root_tol + 4.0 * std::numeric_limits<double>::epsilon() * t;
  auto eval = [&](double x) {
    std::shared_lock lock(cache_->mutex);
    return cache_->F_at[k - 1] + segment_integral(k, x);
  };

  // F decreasing: F(lo) > t > F(hi). Secant start, then safeguarded Newton.
  double x = hi - (hi - lo) * (t - F_hi) / (F_lo - F_hi);
  for (int iter = 0; iter < 200; ++iter) {
    if (!(x > lo && x < hi)) x = 0.5 * (lo + hi);
    const double Fx = eval(x);
    const double r = Fx - t;
    if (std::abs(r) <= tol) return x;
    if (r > 0.0) lo = x; else hi = x;
    if (hi - lo <= 2.0 * std::numeric_limits<double>::epsilon() * hi) break;
    x += r * f_(x);
  }
  const double a = eval(lo) - t;
  const double b = eval(hi) - t;
  return std::abs(a) <= std::abs(b) ? lo : hi;
}

double compute_F(const FlowMap& flow, double x) { return flow.F(x); }

InverseFlow::InverseFlow(std::shared_ptr<const FlowMap> flow)
    : InverseFlow(flow, flow ? flow->options().root_tol : 0.0) {}

InverseFlow::InverseFlow(std::shared_ptr<const FlowMap> flow, double root_tol)
    : flow_(std::move(flow)), root_tol_(root_tol) {
  if (!flow_) throw SpecError("InverseFlow needs a FlowMap");
  if (!(root_tol_ > 0.0)) throw SpecError("root tolerance must be positive");
}

double compute_F_inverse(const InverseFlow& inv, double t) { return inv(t); }

InverseFlow make_inverse_flow(const NonlinearitySpec& f, FlowOptions options) {
  return InverseFlow(std::make_shared<const FlowMap>(f, options));
}

std::vector<double> log_spaced(double t_lo, double t_hi, int n) {
  if (!(t_lo > 0.0) || !(t_hi >= t_lo) || n < 1) throw SpecError("log_spaced needs 0 < lo <= hi and n >= 1");
  std::vector<double> out(static_cast<std::size_t>(n));
  if (n == 1) {
    out[0] = t_lo;
    return out;
  }
  const double a = std::log(t_lo);
  const double b = std::log(t_hi);
  for (int i = 0; i < n; ++i) out[static_cast<std::size_t>(i)] = std::exp(a + (b - a) * i / (n - 1));
  out.front() = t_lo;
  out.back() = t_hi;
  return out;
}

std::vector<double> inverse_ratio_series(const InverseFlow& inv, double eps, const std::vector<double>& ts) {
  std::vector<double> out;
  out.reserve(ts.size());
  for (double t : ts) out.push_back(inv((1.0 + eps) * t) / inv(t));
  return out;
}

LimitEstimate estimate_F_scale_ratio(const FlowMap& flow, double mu, const ScaleGridConfig& grid) {
  if (!(mu > 0.0 && mu < 1.0)) throw SpecError("mu must lie in (0,1)");
  LimitEstimate est;
  double x = grid.x0;
  for (int k = 0; k < grid.rungs; ++k, x *= grid.ratio) {
    double v = 0.0;
    try {
      v = flow.F(mu * x) / flow.F(x);
    } catch (const DomainError&) {
      est.truncated = true;
      break;
    }
    if (!std::isfinite(v)) {
      est.truncated = true;
      break;
    }
    est.scale_grid.push_back(x);
    est.values.push_back(v);
  }
  if (est.values.empty()) throw DomainError("no usable rung for F(mu x)/F(x)", grid.x0);
  const std::size_t n = est.values.size();
  const std::size_t w = std::min<std::size_t>(n, static_cast<std::size_t>(std::max(1, grid.window)));
  est.window_start = n - w;
  const auto first = est.values.begin() + static_cast<std::ptrdiff_t>(est.window_start);
  const auto [mn, mx] = std::minmax_element(first, est.values.end());
  est.liminf_est = *mn;
  est.limsup_est = *mx;
  est.window_spread = *mx - *mn;
  est.trend = est.values.back() - *first;
  est.reduced_confidence = est.truncated && w < static_cast<std::size_t>(grid.window);
  return est;
}

namespace {

double psi_under(const FlowMap& flow, double eps, const ScaleGridConfig& grid) {
  ScaleGridConfig g = grid;
  g.x0 = std::min(grid.x0, 1.0 / (1.0 + eps));
  double best = std::numeric_limits<double>::infinity();
  std::vector<double> vals;
  double x = g.x0;
  for (int k = 0; k < g.rungs; ++k, x *= g.ratio) {
    try {
      vals.push_back(flow.F((1.0 + eps) * x) / flow.F(x));
    } catch (const DomainError&) {
      break;
    }
  }
  if (vals.empty()) return std::numeric_limits<double>::quiet_NaN();
  const std::size_t w = std::min<std::size_t>(vals.size(), static_cast<std::size_t>(std::max(1, g.window)));
  for (std::size_t i = vals.size() - w; i < vals.size(); ++i) best = std::min(best, vals[i]);
  return best;
}

}  // namespace

PhiFBoundsReport verify_phi_F_bounds(const InverseFlow& inv, double l, double L,
                                     const std::vector<double>& eps_ladder, const PhiFBoundsConfig& config) {
  PhiFBoundsReport rep;
  rep.l = l;
  rep.L = L;
  rep.t_lo = config.t_lo;
  rep.t_hi = config.t_hi;
  rep.slack_allowance = config.slack_allowance;
  const auto ts = log_spaced(config.t_lo, config.t_hi, config.points);
  const double s = config.slack_allowance;
  bool all = true;
  for (double eps : eps_ladder) {
    if (!(eps > 0.0)) throw SpecError("eps must be positive");
    PhiFBoundsEntry e;
    e.eps = eps;
    const auto ratios = inverse_ratio_series(inv, eps, ts);
    const auto [mn, mx] = std::minmax_element(ratios.begin(), ratios.end());
    e.phi_under_F = *mn;
    e.phi_over_F = *mx;

    const double gap_L = 1.0 - e.phi_under_F;
    e.lower_L = eps * L / (1.0 + eps * (1.0 + L));
    e.upper_L = eps * L;
    e.slack_lower_L = gap_L - e.lower_L;
    e.slack_upper_L = e.upper_L - gap_L;
    e.holds_L = e.slack_lower_L >= -s && e.slack_upper_L >= -s;

    const double gap_l = 1.0 - e.phi_over_F;
    e.lower_l = eps * l / (1.0 + eps * (1.0 + l));
    e.upper_l = eps * l;
    e.slack_lower_l = gap_l - e.lower_l;
    e.slack_upper_l = e.upper_l - gap_l;
    e.holds_l = e.slack_lower_l >= -s && e.slack_upper_l >= -s;

    e.psi_under_F = psi_under(inv.flow(), eps, config.grid);
    all = all && e.holds_L && e.holds_l;
    rep.entries.push_back(e);
  }

  // F((1+eps)x)/F(x) -> 1 checked on a fixed decreasing ladder.
  const double ladder[] = {0.1, 0.01, 0.001};
  double prev = -std::numeric_limits<double>::infinity();
  bool monotone = true;
  for (double eps : ladder) {
    const double v = psi_under(inv.flow(), eps, config.grid);
    monotone = monotone && std::isfinite(v) && v >= prev - 1e-12;
    prev = v;
  }
  rep.psi_approaches_one = monotone && 1.0 - prev <= 0.05;
  rep.all_hold = all && rep.psi_approaches_one;
  return rep;
}

}  // namespace decaylab
