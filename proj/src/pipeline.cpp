#include "decaylab/pipeline.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <random>
#include <sstream>

#include "decaylab/errors.hpp"

namespace decaylab {

using nlohmann::json;
namespace fs = std::filesystem;

const std::string* Artifacts::find(const std::string& name) const {
  for (const auto& [n, content] : files) {
    if (n == name) return &content;
  }
  return nullptr;
}

void write_artifacts(const fs::path& dir, const Artifacts& artifacts) {
  const fs::path target = dir.empty() ? fs::path(".") : dir;
  const fs::path parent = fs::absolute(target).parent_path();
  fs::create_directories(parent);
  std::random_device rd;
  const fs::path stage =
      parent / ("." + fs::absolute(target).filename().string() + ".staging-" + std::to_string(rd()));
  try {
    fs::create_directory(stage);
    for (const auto& [name, content] : artifacts.files) {
      std::ofstream out(stage / name, std::ios::binary);
      out << content;
      out.close();
      if (!out) throw std::runtime_error("failed to write " + (stage / name).string());
    }
    if (!fs::exists(target)) {
      fs::rename(stage, target);
      return;
    }
    for (const auto& [name, _] : artifacts.files) fs::rename(stage / name, target / name);
    fs::remove_all(stage);
  } catch (...) {
    std::error_code ec;
    fs::remove_all(stage, ec);
    throw;
  }
}

fs::path resolve_output_dir(const std::string& explicit_dir) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("DECAYLAB_OUTPUT_DIR"); env != nullptr && *env != '\0') return env;
  return "decaylab-out";
}

std::string to_json_text(const json& j) { return j.dump(2) + "\n"; }

json to_json(const LimitEstimate& e) {
  return {{"liminf", e.liminf_est},
          {"limsup", e.limsup_est},
          {"window_spread", e.window_spread},
          {"trend", e.trend},
          {"rungs", e.values.size()},
          {"window_start", e.window_start},
          {"truncated", e.truncated},
          {"reduced_confidence", e.reduced_confidence}};
}

json to_json(const DecayClass& c) {
  json ev = json::array();
  for (const auto& e : c.evidence) {
    ev.push_back({{"test", e.test}, {"outcome", std::string(to_string(e.outcome))}, {"margin", e.margin},
                  {"note", e.note}});
  }
  return {{"regime", std::string(to_string(c.regime))}, {"evidence", ev}};
}

json to_json(const PhiFBoundsReport& r) {
  json entries = json::array();
  for (const auto& e : r.entries) {
    entries.push_back({{"eps", e.eps},
                       {"phi_under_F", e.phi_under_F},
                       {"phi_over_F", e.phi_over_F},
                       {"L_bounds", {e.lower_L, e.upper_L}},
                       {"L_slack", {e.slack_lower_L, e.slack_upper_L}},
                       {"holds_L", e.holds_L},
                       {"l_bounds", {e.lower_l, e.upper_l}},
                       {"l_slack", {e.slack_lower_l, e.slack_upper_l}},
                       {"holds_l", e.holds_l},
                       {"psi_under_F", e.psi_under_F}});
  }
  return {{"l", r.l},
          {"L", r.L},
          {"t_window", {r.t_lo, r.t_hi}},
          {"slack_allowance", r.slack_allowance},
          {"entries", entries},
          {"psi_approaches_one", r.psi_approaches_one},
          {"all_hold", r.all_hold}};
}

json to_json(const ConditionEvidence& e) {
  return {{"condition", e.condition},
          {"integral_converges", e.integral_converges},
          {"limit", to_string(e.limit)},
          {"terminal_max_abs", e.terminal_max_abs},
          {"terminal_last", e.terminal_last},
          {"note", e.note}};
}

json to_json(const RateVerdict& v) {
  json ev = json::array();
  for (const auto& e : v.evidence) ev.push_back(to_json(e));
  json lambda = nullptr;
  if (v.observed.kind == VerdictKind::Preserved) lambda = v.observed.lambda;
  return {{"observed", to_string(v.observed.kind)},
          {"predicted", to_string(v.predicted)},
          {"lambda", lambda},
          {"liminf", v.observed.liminf},
          {"limsup", v.observed.limsup},
          {"drift", v.observed.drift},
          {"two_decade_max", v.observed.two_decade_max},
          {"reason", v.observed.reason},
          {"evidence", ev},
          {"agreement", v.agreement},
          {"decays_to_zero", v.decays_to_zero}};
}

json to_json(const EnsembleReport& r) {
  return {{"tol_lambda", r.tol_lambda},
          {"n_paths", r.n_paths},
          {"counts",
           {{"-1", r.minus_one}, {"0", r.zero}, {"+1", r.plus_one}, {"unresolved", r.unresolved},
            {"divergent", r.divergent}}},
          {"fractions",
           {{"-1", r.frac_minus_one}, {"0", r.frac_zero}, {"+1", r.frac_plus_one}, {"unresolved", r.frac_unresolved},
            {"divergent", r.frac_divergent}}},
          {"lambda_set_fraction", r.frac_lambda_set},
          {"tail_decayed_fraction", r.frac_tail_decayed},
          {"envelope_exceeded_fraction", r.frac_envelope_exceeded},
          {"note", r.note}};
}

json to_json(const MuEstimate& m) {
  return {{"bucket", to_string(m.bucket)}, {"value", m.value}, {"slope", m.slope}, {"note", m.note}};
}

namespace {

template <class Fn>
json guarded(Fn&& fn) {
  try {
    return fn();
  } catch (const DomainError& e) {
    return json{{"error", e.what()}};
  }
}

}  // namespace

json analyze_f(const NonlinearitySpec& f) {
  json out;
  out["nonlinearity"] = f.describe();
  out["kind"] = std::string(to_string(f.kind()));

  const ValidationReport val = validate(f);
  out["validation"] = {{"ok", val.ok()},
                       {"positive", val.positive},
                       {"increasing", val.increasing},
                       {"continuous", val.continuous},
                       {"odd", val.odd},
                       {"smallest_checked", val.smallest_checked},
                       {"problems", val.problems}};

  const ClassifierConfig cfg;
  const DecayClass cls = classify_nonlinearity(f, cfg);
  out["classification"] = to_json(cls);
  out["regime"] = std::string(to_string(cls.regime));

  json phi_bar = json::array();
  for (double mu : cfg.mu_ladder) {
    phi_bar.push_back(guarded([&] {
      json row = to_json(estimate_phi_bar(f, mu, cfg.grid));
      row["mu"] = mu;
      return row;
    }));
  }
  out["phi_bar"] = phi_bar;
  json phi_under = json::array();
  for (double eps : cfg.eps_ladder) {
    phi_under.push_back(guarded([&] {
      json row = to_json(estimate_phi_under(f, eps, cfg.grid));
      row["eps"] = eps;
      return row;
    }));
  }
  out["phi_under"] = phi_under;

  out["superlinearity"] = guarded([&] {
    const SuperlinearityReport sup = check_superlinearity(f, cfg.grid);
    return json{{"terminal_delta", sup.terminal_delta},
                {"decreasing", sup.decreasing},
                {"passed", sup.passed},
                {"tolerance", sup.tolerance}};
  });

  out["phi_bar_log_bound"] = guarded([&] {
    const PhiBarLogBoundReport lb = check_phi_bar_log_bound(f, dyadic_ladder(8), cfg.grid);
    json rungs = json::array();
    for (std::size_t i = 0; i < lb.mu.size(); ++i) {
      rungs.push_back({{"mu", lb.mu[i]}, {"phi_bar", lb.phi_bar[i]}, {"c_needed", lb.c_needed[i]},
                       {"slack", lb.slack[i]}});
    }
    return json{{"c_prime", lb.c_prime}, {"bounded", lb.bounded}, {"rungs", rungs}};
  });

  auto flow = std::make_shared<const FlowMap>(f);
  const InverseFlow inv(flow);
  try {
    const RhoLimits rho = estimate_rho_limits(f, *flow, cfg.grid);
    out["rho"] = to_json(rho.estimate);
    out["l"] = rho.l;
    out["L"] = rho.L;
    if (cls.regime == DecayRegime::PowerLike) {
      out["phi_F_bounds"] = to_json(verify_phi_F_bounds(inv, rho.l, rho.L, {0.1, 0.5}));
    } else {
      out["phi_F_bounds"] = nullptr;
    }
  } catch (const DomainError& e) {
    out["rho"] = {{"error", e.what()}};
  }
  try {
    out["F_scale_ratio_half"] = to_json(estimate_F_scale_ratio(*flow, 0.5, cfg.grid));
  } catch (const DomainError& e) {
    out["F_scale_ratio_half"] = {{"error", e.what()}};
  }
  return out;
}

std::string flow_dump_csv(const NonlinearitySpec& f, double t_max, int points) {
  if (!(t_max > 0.0) || points < 2) throw SpecError("flow dump needs t_max > 0 and points >= 2");
  const InverseFlow inv = make_inverse_flow(f);
  std::ostringstream os;
  os << "t,Finv\n0," << format_double(inv(0.0)) << "\n";
  for (double t : log_spaced(t_max / 1e6, t_max, points)) {
    os << format_double(t) << "," << format_double(inv(t)) << "\n";
  }
  return os.str();
}

namespace {

void require_valid(const NonlinearitySpec& f) {
  const ValidationReport v = validate(f);
  if (!v.ok()) {
    std::string msg = "nonlinearity " + f.describe() + " failed validation:";
    for (const auto& p : v.problems) msg += " " + p + ";";
    throw SpecError(msg);
  }
}

}  // namespace

OdeOutcome run_ode(const Scenario& s) {
  const NonlinearitySpec f = build_nonlinearity(s);
  require_valid(f);
  const PerturbationSpec g = build_perturbation(s);
  const InverseFlow inv = make_inverse_flow(f);

  Tolerances tol;
  tol.rtol = s.run.rtol;
  tol.atol = s.run.atol;

  OdeOutcome out;
  out.trajectory = integrate_external(f, g, s.run.xi, s.run.horizon, tol);
  out.ratios = ratio_series(out.trajectory, inv, f);
  VerdictConfig vc;
  vc.tol_lambda = s.run.tol_lambda;
  vc.drift_tol = s.run.drift_tol;
  vc.c_bound = s.run.c_bound;
  out.verdict = render_verdict(out.ratios, out.trajectory, g, f, inv, vc);

  if (s.output.csv) {
    std::ostringstream tr;
    tr << "t,x,deriv,Finv,ratio\n";
    for (std::size_t i = 0; i < out.trajectory.size(); ++i) {
      const bool have = i < out.ratios.t.size();
      tr << format_double(out.trajectory.t[i]) << "," << format_double(out.trajectory.x[i]) << ","
         << format_double(out.trajectory.deriv[i]) << "," << (have ? format_double(out.ratios.finv[i]) : "") << ","
         << (have ? format_double(out.ratios.values[i]) : "") << "\n";
    }
    out.artifacts.add("trajectory.csv", tr.str());

    std::ostringstream rs;
    rs << "t,ratio,deriv_ratio\n";
    for (std::size_t i = 0; i < out.ratios.t.size(); ++i) {
      rs << format_double(out.ratios.t[i]) << "," << format_double(out.ratios.values[i]) << ","
         << (out.ratios.deriv_values.empty() ? "" : format_double(out.ratios.deriv_values[i])) << "\n";
    }
    out.artifacts.add("ratio_series.csv", rs.str());
  }
  if (s.output.json) {
    json v = to_json(out.verdict);
    v["scenario"] = s.name;
    v["nonlinearity"] = f.describe();
    v["perturbation"] = g.describe();
    v["xi"] = s.run.xi;
    v["horizon"] = s.run.horizon;
    v["integrator"] = {{"steps", out.trajectory.stats.steps},
                       {"rejected", out.trajectory.stats.rejected},
                       {"max_local_error", out.trajectory.stats.max_local_error},
                       {"max_stiffness", out.trajectory.stats.max_stiffness}};
    out.artifacts.add("verdict.json", to_json_text(v));
  }
  out.artifacts.add("effective_config.ini", to_ini(s));
  return out;
}

SdeOutcome run_sde(const Scenario& s) {
  if (!s.noise) throw SpecError("sde run needs a [noise] section");
  const NonlinearitySpec f = build_nonlinearity(s);
  require_valid(f);
  const NoiseSpec sigma = build_noise(s);
  const InverseFlow inv = make_inverse_flow(f);

  SdeConfig cfg;
  cfg.n_seg = s.run.n_seg;
  cfg.dt_max = s.run.dt_max;
  cfg.threads = s.run.threads;
  cfg.tol_lambda = s.run.tol_lambda;

  SdeOutcome out;
  out.ensemble = simulate_ensemble(f, sigma, s.run.xi, s.run.horizon, s.run.paths, s.run.seed.value_or(0), inv, cfg);
  out.report = classify_ensemble(out.ensemble, s.run.tol_lambda);
  out.mu = estimate_mu(sigma, inv);

  const EnsembleReport& r = out.report;
  if (sigma.is_zero() || out.mu.bucket == MuBucket::Zero) {
    out.expectation = "at least 90% of paths in {-1, 0, +1}";
    out.agreement = r.frac_lambda_set >= 0.9;
  } else if (!sigma.in_L2()) {
    out.expectation = "at least 90% of paths unresolved or divergent";
    out.agreement = r.frac_unresolved + r.frac_divergent >= 0.9;
  } else if (out.mu.bucket == MuBucket::Infinite) {
    out.expectation = "fewer than 50% of paths in {-1, 0, +1}";
    out.agreement = r.frac_lambda_set < 0.5;
  } else {
    out.expectation = "no prediction for a positive finite mu";
    out.agreement = true;
  }

  if (s.output.csv) {
    std::ostringstream os;
    os << "path,terminal_state,terminal_ratio,bucket\n";
    for (std::size_t p = 0; p < out.ensemble.paths.size(); ++p) {
      const auto& path = out.ensemble.paths[p];
      os << p << "," << format_double(path.terminal_state) << "," << format_double(path.terminal_ratio) << ","
         << to_string(classify_path(path, s.run.tol_lambda)) << "\n";
    }
    out.artifacts.add("ensemble.csv", os.str());
  }
  if (s.output.json) {
    json sigma_table = json::array();
    for (std::size_t i = 0; i < out.ensemble.checkpoint_t.size(); ++i) {
      const double t = out.ensemble.checkpoint_t[i];
      json row = {{"t", t}, {"Finv", out.ensemble.checkpoint_finv[i]}};
      try {
        row["I"] = sigma_tail_integral(sigma, t);
        row["Sigma"] = compute_Sigma(sigma, t);
      } catch (const DomainError&) {
        row["I"] = nullptr;
        row["Sigma"] = nullptr;
      }
      sigma_table.push_back(row);
    }
    json summary = to_json(out.report);
    summary["scenario"] = s.name;
    summary["nonlinearity"] = f.describe();
    summary["noise"] = sigma.describe();
    summary["x0"] = s.run.xi;
    summary["horizon"] = s.run.horizon;
    summary["seed"] = out.ensemble.seed;
    summary["steps_per_path"] = out.ensemble.steps_per_path;
    summary["mu"] = to_json(out.mu);
    summary["sigma_table"] = sigma_table;
    summary["expectation"] = out.expectation;
    summary["agreement"] = out.agreement;
    out.artifacts.add("ensemble_summary.json", to_json_text(summary));
  }
  out.artifacts.add("effective_config.ini", to_ini(s));
  return out;
}

int exit_status(bool agreement) { return agreement ? 0 : 2; }

}  // namespace decaylab
