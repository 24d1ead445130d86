#include "decaylab/sde.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <thread>

#include "decaylab/errors.hpp"
#include "decaylab/philox.hpp"

namespace decaylab {

std::string to_string(PathBucket b) {
  switch (b) {
    case PathBucket::MinusOne: return "-1";
    case PathBucket::Zero: return "0";
    case PathBucket::PlusOne: return "+1";
    case PathBucket::Unresolved: return "unresolved";
    case PathBucket::Divergent: return "divergent";
  }
  return "unresolved";
}

std::vector<StepSegment> dyadic_schedule(double horizon, int n_seg, double dt_max) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw SpecError("horizon must be positive");
  if (n_seg < 1 || !(dt_max > 0.0)) throw SpecError("n_seg >= 1 and dt_max > 0 required");
  std::vector<StepSegment> out;
  std::uint64_t first = 0;
  double begin = 0.0;
  double end = 1.0;
  double dt = std::min(dt_max, 1.0 / n_seg);
  while (begin < horizon) {
    StepSegment seg;
    seg.t_begin = begin;
    seg.t_end = std::min(end, horizon);
    seg.dt = dt;
    seg.steps = static_cast<std::uint64_t>(std::ceil((seg.t_end - seg.t_begin) / dt - 1e-9));
    seg.first_step = first;
    first += seg.steps;
    out.push_back(seg);
    begin = end;
    dt = std::min(dt_max, end / n_seg);
    end *= 2.0;
  }
  return out;
}

namespace {

struct StepTable {
  std::vector<double> t;      // step start
  std::vector<double> h;      // step length
  std::vector<double> sigma;  // sigma(t)
};

StepTable build_steps(const std::vector<StepSegment>& schedule, const NoiseSpec& noise) {
  StepTable tab;
  const std::uint64_t n = schedule.back().first_step + schedule.back().steps;
  tab.t.reserve(n);
  tab.h.reserve(n);
  tab.sigma.reserve(n);
  for (const auto& seg : schedule) {
    for (std::uint64_t i = 0; i < seg.steps; ++i) {
      const double t = seg.t_begin + static_cast<double>(i) * seg.dt;
      const double h = std::min(seg.dt, seg.t_end - t);
      tab.t.push_back(t);
      tab.h.push_back(h);
      tab.sigma.push_back(noise(t));
    }
  }
  return tab;
}

/// Increments of the refined Brownian path over one coarse step of length h.
/// Node 0 draws the whole-step increment; split nodes form a binary heap rooted at 1.
void bridge_increments(const Philox4x32& rng, std::uint64_t step, std::uint32_t path, double h, int refine,
                       std::vector<double>& dw) {
  const Philox4x32::Counter root{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), path,
                                 0u};
  dw.assign(1, std::sqrt(h) * rng.normal(root));
  double len = h;
  for (int level = 0; level < refine; ++level) {
    std::vector<double> next(dw.size() * 2);
    const std::uint32_t base = 1u << level;
    for (std::size_t j = 0; j < dw.size(); ++j) {
      const Philox4x32::Counter c{static_cast<std::uint32_t>(step), static_cast<std::uint32_t>(step >> 32), path,
                                  base + static_cast<std::uint32_t>(j)};
      const double y = rng.normal(c);
      const double half = 0.5 * std::sqrt(len) * y;
      next[2 * j] = 0.5 * dw[j] + half;
      next[2 * j + 1] = 0.5 * dw[j] - half;
    }
    dw.swap(next);
    len *= 0.5;
  }
}

}  // namespace

PathBucket classify_path(const PathResult& path, double tol_lambda) {
  if (path.divergent) return PathBucket::Divergent;
  if (path.ratios.empty()) return PathBucket::Unresolved;
  for (int lambda : {-1, 0, 1}) {
    const bool inside = std::all_of(path.ratios.begin(), path.ratios.end(),
                                    [&](double r) { return std::abs(r - lambda) < tol_lambda; });
    if (inside) {
      return lambda < 0 ? PathBucket::MinusOne : (lambda == 0 ? PathBucket::Zero : PathBucket::PlusOne);
    }
  }
  return PathBucket::Unresolved;
}

PathEnsemble simulate_ensemble(const NonlinearitySpec& f, const NoiseSpec& sigma, double x0, double horizon,
                               std::size_t n_paths, std::uint64_t seed, const InverseFlow& inv,
                               const SdeConfig& config) {
  if (n_paths < 1) throw SpecError("n_paths must be >= 1");
  if (n_paths > std::numeric_limits<std::uint32_t>::max()) throw SpecError("too many paths");
  if (!(horizon >= 10.0)) throw SpecError("ensemble horizon must be >= 10");
  if (config.refine < 0 || config.refine > 16) throw SpecError("refine must lie in [0, 16]");
  if (!std::isfinite(x0)) throw SpecError("X0 must be finite");

  PathEnsemble e;
  e.n_paths = n_paths;
  e.seed = seed;
  e.x0 = x0;
  e.horizon = horizon;
  e.config = config;

  const auto schedule = dyadic_schedule(horizon, config.n_seg, config.dt_max);
  const StepTable tab = build_steps(schedule, sigma);
  const std::uint64_t n_steps = tab.t.size();
  e.steps_per_path = n_steps;

  // Checkpoints: first step boundary at or after each log-spaced time of the last decade.
  std::vector<std::uint64_t> cp_index;  // number of completed steps at the checkpoint
  {
    const int n = std::max(1, config.checkpoints_per_decade);
    const double lo = std::log10(1.0 + horizon) - 1.0;
    for (int j = 0; j <= n; ++j) {
      const double target = std::pow(10.0, lo + static_cast<double>(j) / n) - 1.0;
      const auto it = std::lower_bound(tab.t.begin(), tab.t.end(), target);
      const std::uint64_t k = static_cast<std::uint64_t>(it - tab.t.begin());
      if (!cp_index.empty() && cp_index.back() == k) continue;
      cp_index.push_back(k);
    }
    cp_index.back() = n_steps;
    for (std::uint64_t k : cp_index) {
      const double t = k < n_steps ? tab.t[k] : horizon;
      e.checkpoint_t.push_back(t);
      e.checkpoint_finv.push_back(inv(t));
    }
  }

  double sigma_c0 = std::numeric_limits<double>::quiet_NaN();
  try {
    sigma_c0 = compute_Sigma(sigma, e.checkpoint_t.front());
  } catch (const DomainError&) {
  }

  const Philox4x32 rng(seed);
  const bool noisy = !sigma.is_zero();
  const int sub = 1 << config.refine;
  e.paths.resize(n_paths);

  auto run_path = [&](std::size_t p) {
    PathResult& out = e.paths[p];
    const auto pid = static_cast<std::uint32_t>(p);
    double x = x0;
    double m = 0.0;
    double m_c0 = 0.0;
    std::size_t next_cp = 0;
    std::vector<double> dw;
    out.ratios.reserve(cp_index.size());
    for (std::uint64_t k = 0; k <= n_steps; ++k) {
      while (next_cp < cp_index.size() && cp_index[next_cp] == k) {
        if (next_cp == 0) m_c0 = m;
        out.ratios.push_back(x / e.checkpoint_finv[next_cp]);
        ++next_cp;
      }
      if (k == n_steps) break;
      const double h = tab.h[k];
      if (!noisy) {
        x -= f(x) * h;
      } else {
        bridge_increments(rng, k, pid, h, config.refine, dw);
        const double hs = h / sub;
        for (int j = 0; j < sub; ++j) {
          const double s = sub == 1 ? tab.sigma[k] : sigma(tab.t[k] + j * hs);
          x += -f(x) * hs + s * dw[static_cast<std::size_t>(j)];
          m += s * dw[static_cast<std::size_t>(j)];
        }
      }
      if (!std::isfinite(x) || std::abs(x) > config.blowup) {
        out.divergent = true;
        break;
      }
    }
    out.terminal_state = x;
    out.terminal_ratio = x / e.checkpoint_finv.back();
    out.tail_ratio = (m - m_c0) / e.checkpoint_finv.front();
    out.envelope_ratio = (m - m_c0) / sigma_c0;
    out.bucket = classify_path(out, config.tol_lambda);
  };

  unsigned workers = config.threads ? config.threads : std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, n_paths));
  if (workers <= 1) {
    for (std::size_t p = 0; p < n_paths; ++p) run_path(p);
  } else {
    std::atomic<std::size_t> next{0};
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) {
      pool.emplace_back([&] {
        for (std::size_t p = next++; p < n_paths; p = next++) run_path(p);
      });
    }
    for (auto& th : pool) th.join();
  }
  return e;
}

EnsembleReport classify_ensemble(const PathEnsemble& e, double tol_lambda) {
  EnsembleReport r;
  r.tol_lambda = tol_lambda;
  r.n_paths = e.paths.size();
  std::size_t tail_ok = 0, env_exceeded = 0, env_defined = 0;
  for (const auto& p : e.paths) {
    switch (classify_path(p, tol_lambda)) {
      case PathBucket::MinusOne: ++r.minus_one; break;
      case PathBucket::Zero: ++r.zero; break;
      case PathBucket::PlusOne: ++r.plus_one; break;
      case PathBucket::Unresolved: ++r.unresolved; break;
      case PathBucket::Divergent: ++r.divergent; break;
    }
    if (std::abs(p.tail_ratio) < tol_lambda) ++tail_ok;
    if (std::isfinite(p.envelope_ratio)) {
      ++env_defined;
      if (std::abs(p.envelope_ratio) > 1.5) ++env_exceeded;
    }
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, r.n_paths));
  r.frac_minus_one = static_cast<double>(r.minus_one) / n;
  r.frac_zero = static_cast<double>(r.zero) / n;
  r.frac_plus_one = static_cast<double>(r.plus_one) / n;
  r.frac_unresolved = static_cast<double>(r.unresolved) / n;
  r.frac_divergent = static_cast<double>(r.divergent) / n;
  r.frac_lambda_set = static_cast<double>(r.minus_one + r.zero + r.plus_one) / n;
  r.frac_tail_decayed = static_cast<double>(tail_ok) / n;
  r.frac_envelope_exceeded = env_defined ? static_cast<double>(env_exceeded) / static_cast<double>(env_defined)
                                         : std::numeric_limits<double>::quiet_NaN();
  r.note = "tail stochastic integral truncated at the horizon: M(T) - M(t) stands in for M(inf) - M(t)";
  return r;
}

}  // namespace decaylab
