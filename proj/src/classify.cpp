#include "decaylab/classify.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "decaylab/errors.hpp"

namespace decaylab {

std::string to_string(VerdictKind kind) {
  switch (kind) {
    case VerdictKind::Preserved: return "Preserved";
    case VerdictKind::BoundedO: return "BoundedO";
    case VerdictKind::NotPreserved: return "NotPreserved";
    case VerdictKind::Inconclusive: return "Inconclusive";
  }
  return "Inconclusive";
}

std::string to_string(LimitVerdict v) {
  switch (v) {
    case LimitVerdict::Zero: return "zero";
    case LimitVerdict::BoundedNonzero: return "bounded-nonzero";
    case LimitVerdict::Unbounded: return "unbounded";
    case LimitVerdict::Divergent: return "divergent";
  }
  return "unbounded";
}

namespace {

std::size_t window_begin(const std::vector<double>& t, double decades) {
  const double cut = (1.0 + t.back()) / std::pow(10.0, decades);
  const auto it = std::lower_bound(t.begin(), t.end(), cut, [](double ti, double c) { return 1.0 + ti < c; });
  return static_cast<std::size_t>(it - t.begin());
}

double slope_per_decade(const std::vector<double>& t, const std::vector<double>& v, std::size_t from) {
  const std::size_t n = t.size() - from;
  if (n < 2) return 0.0;
  double mx = 0.0, my = 0.0;
  for (std::size_t i = from; i < t.size(); ++i) {
    mx += std::log10(1.0 + t[i]);
    my += v[i];
  }
  mx /= static_cast<double>(n);
  my /= static_cast<double>(n);
  double sxy = 0.0, sxx = 0.0;
  for (std::size_t i = from; i < t.size(); ++i) {
    const double dx = std::log10(1.0 + t[i]) - mx;
    sxy += dx * (v[i] - my);
    sxx += dx * dx;
  }
  return sxx > 0.0 ? sxy / sxx : 0.0;
}

double max_abs(const std::vector<double>& v, std::size_t from, std::size_t to) {
  double m = 0.0;
  for (std::size_t i = from; i < to; ++i) m = std::max(m, std::abs(v[i]));
  return m;
}

/// log10 |v| slope per decade; zeros are skipped.
double log_growth(const std::vector<double>& t, const std::vector<double>& v, std::size_t from) {
  std::vector<double> tt, lv;
  for (std::size_t i = from; i < t.size(); ++i) {
    if (v[i] != 0.0 && std::isfinite(v[i])) {
      tt.push_back(t[i]);
      lv.push_back(std::log10(std::abs(v[i])));
    }
  }
  return slope_per_decade(tt, lv, 0);
}

}  // namespace

WindowStats window_stats(const std::vector<double>& t, const std::vector<double>& v, double decades) {
  WindowStats w;
  if (t.empty()) return w;
  const std::size_t b = window_begin(t, decades);
  w.count = t.size() - b;
  if (w.count == 0) return w;
  const auto first = v.begin() + static_cast<std::ptrdiff_t>(b);
  const auto [mn, mx] = std::minmax_element(first, v.end());
  w.min = *mn;
  w.max = *mx;
  double sum = 0.0;
  for (auto it = first; it != v.end(); ++it) sum += *it;
  w.mean = sum / static_cast<double>(w.count);
  w.drift = slope_per_decade(t, v, b);
  return w;
}

RatioSeries ratio_series(const Trajectory& traj, const InverseFlow& inv, const NonlinearitySpec& f) {
  if (traj.t.size() < 2) throw DomainError("trajectory has fewer than two nodes", 0.0);
  RatioSeries rs;
  const bool with_deriv = traj.deriv.size() == traj.t.size();
  for (std::size_t i = 0; i < traj.t.size(); ++i) {
    double finv = 0.0;
    try {
      finv = inv(traj.t[i]);
    } catch (const DomainError&) {
      break;
    }
    if (!(finv > 0.0)) break;
    rs.t.push_back(traj.t[i]);
    rs.finv.push_back(finv);
    rs.values.push_back(traj.x[i] / finv);
    if (with_deriv) rs.deriv_values.push_back(traj.deriv[i] / f(finv));
  }
  const double want = std::log10(1.0 + traj.t.back());
  const double have = rs.t.empty() ? 0.0 : std::log10(1.0 + rs.t.back());
  if (rs.t.size() < traj.t.size() && (have < 2.0 || have < want - 1e-12)) {
    std::ostringstream os;
    os << "F^-1 unavailable beyond t = " << (rs.t.empty() ? 0.0 : rs.t.back()) << "; usable sub-range is [0, "
       << (rs.t.empty() ? 0.0 : rs.t.back()) << "] of [0, " << traj.t.back() << "]";
    throw DomainError(os.str(), rs.t.empty() ? 0.0 : rs.t.back());
  }
  rs.terminal = window_stats(rs.t, rs.values, 1.0);
  if (with_deriv) rs.terminal_deriv = window_stats(rs.t, rs.deriv_values, 1.0);
  return rs;
}

Observation estimate_lambda(const RatioSeries& rs, const VerdictConfig& config) {
  Observation ob;
  if (rs.t.size() < 2) {
    ob.reason = "empty ratio series";
    return ob;
  }
  const std::size_t b1 = window_begin(rs.t, 1.0);
  const std::size_t b2 = window_begin(rs.t, 2.0);
  const WindowStats& w = rs.terminal;
  ob.liminf = w.min;
  ob.limsup = w.max;
  ob.drift = w.drift;
  ob.two_decade_max = max_abs(rs.values, b2, rs.values.size());

  for (std::size_t i = b2; i < rs.values.size(); ++i) {
    if (!std::isfinite(rs.values[i])) {
      ob.reason = "non-finite ratio in the terminal window";
      return ob;
    }
  }

  for (int lambda : {-1, 0, 1}) {
    const double dev = std::max(std::abs(w.max - lambda), std::abs(w.min - lambda));
    if (dev < config.tol_lambda && std::abs(w.drift) < config.drift_tol) {
      ob.kind = VerdictKind::Preserved;
      ob.lambda = lambda;
      std::ostringstream os;
      os << "terminal decade within " << dev << " of " << lambda << ", drift " << w.drift << " per decade";
      ob.reason = os.str();
      return ob;
    }
  }

  const double prev_max = max_abs(rs.values, b2, b1);
  const double last_max = max_abs(rs.values, b1, rs.values.size());
  const bool envelope_flat = last_max <= prev_max * (1.0 + config.drift_tol);
  if (ob.two_decade_max < config.c_bound && envelope_flat) {
    ob.kind = VerdictKind::BoundedO;
    std::ostringstream os;
    os << "max |ratio| " << ob.two_decade_max << " < " << config.c_bound << " with non-increasing envelope ("
       << prev_max << " -> " << last_max << ")";
    ob.reason = os.str();
    return ob;
  }

  bool monotone = true;
  for (std::size_t i = b2 + 1; i < rs.values.size(); ++i) {
    monotone = monotone && std::abs(rs.values[i]) >= std::abs(rs.values[i - 1]);
  }
  const bool growing = monotone && log_growth(rs.t, rs.values, b2) > config.growth_tol;
  if (ob.two_decade_max >= config.c_bound || growing) {
    ob.kind = VerdictKind::NotPreserved;
    std::ostringstream os;
    if (ob.two_decade_max >= config.c_bound) {
      os << "|ratio| reached " << ob.two_decade_max << " >= " << config.c_bound;
    } else {
      os << "|ratio| grows monotonically across the last two decades";
    }
    ob.reason = os.str();
    return ob;
  }
  ob.reason = "bounded but unsettled envelope";
  return ob;
}

namespace {

void judge(ConditionEvidence& ev, const VerdictConfig& config) {
  const std::size_t b1 = window_begin(ev.t, 1.0);
  ev.terminal_max_abs = max_abs(ev.values, b1, ev.values.size());
  ev.terminal_last = ev.values.back();
  const double two_max = max_abs(ev.values, 0, ev.values.size());
  if (ev.terminal_max_abs <= config.tol_lambda) {
    ev.limit = LimitVerdict::Zero;
  } else if (two_max >= config.c_bound || log_growth(ev.t, ev.values, 0) > config.growth_tol) {
    ev.limit = LimitVerdict::Unbounded;
  } else {
    ev.limit = LimitVerdict::BoundedNonzero;
  }
}

std::vector<double> condition_grid(const VerdictConfig& config) {
  return log_spaced(std::max(1.0, config.horizon / 100.0), config.horizon, 2 * config.points_per_decade + 1);
}

}  // namespace

ConditionEvidence check_condition_a(const PerturbationSpec& g, const InverseFlow& inv, const VerdictConfig& config) {
  ConditionEvidence ev;
  ev.condition = "a";
  ev.integral_converges = g.integral_converges();
  if (!ev.integral_converges) {
    ev.limit = LimitVerdict::Divergent;
    ev.note = "int_0^t g(s) ds has no finite limit";
    return ev;
  }
  ev.t = condition_grid(config);
  for (double t : ev.t) ev.values.push_back(g.gamma(t) / inv(t));
  judge(ev, config);
  ev.note = "Gamma(t) / F^-1(t)";
  return ev;
}

ConditionEvidence check_condition_c(const PerturbationSpec& g, const NonlinearitySpec& f, const InverseFlow& inv,
                                    const VerdictConfig& config) {
  ConditionEvidence ev;
  ev.condition = "c";
  ev.integral_converges = g.integral_converges();
  ev.t = condition_grid(config);
  for (double t : ev.t) ev.values.push_back(g(t) / f(inv(t)));
  judge(ev, config);
  ev.note = "g(t) / f(F^-1(t)); a zero limit is sufficient, not necessary";
  return ev;
}

VerdictKind predict(const ConditionEvidence& a, const ConditionEvidence* c) {
  VerdictKind out = VerdictKind::Inconclusive;
  switch (a.limit) {
    case LimitVerdict::Zero: out = VerdictKind::Preserved; break;
    case LimitVerdict::BoundedNonzero: out = VerdictKind::BoundedO; break;
    case LimitVerdict::Unbounded:
    case LimitVerdict::Divergent: out = VerdictKind::NotPreserved; break;
  }
  if (c != nullptr && c->limit == LimitVerdict::Zero && a.limit != LimitVerdict::Zero) {
    return VerdictKind::Inconclusive;
  }
  return out;
}

bool consistent(VerdictKind observed, VerdictKind predicted) {
  switch (predicted) {
    case VerdictKind::Preserved: return observed == VerdictKind::Preserved;
    case VerdictKind::BoundedO: return observed == VerdictKind::BoundedO;
    case VerdictKind::NotPreserved: return observed != VerdictKind::Preserved;
    case VerdictKind::Inconclusive: return false;
  }
  return false;
}

RateVerdict render_verdict(const RatioSeries& rs, const Trajectory& traj, const PerturbationSpec& g,
                           const NonlinearitySpec& f, const InverseFlow& inv, const VerdictConfig& config) {
  RateVerdict v;
  VerdictConfig cfg = config;
  cfg.horizon = rs.t.back();
  v.observed = estimate_lambda(rs, cfg);
  v.evidence.push_back(check_condition_a(g, inv, cfg));
  v.evidence.push_back(check_condition_c(g, f, inv, cfg));
  v.predicted = predict(v.evidence[0], &v.evidence[1]);
  v.agreement = consistent(v.observed.kind, v.predicted);
  const std::size_t b1 = window_begin(traj.t, 1.0);
  v.decays_to_zero = std::abs(traj.x.back()) < std::abs(traj.x.front()) &&
                     std::abs(traj.x.back()) < std::abs(traj.x[b1]);
  return v;
}

}  // namespace decaylab
