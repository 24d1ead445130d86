#include <catch_amalgamated.hpp>

#include <cmath>

#include "decaylab/classify.hpp"
#include "decaylab/errors.hpp"

using namespace decaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

namespace {

RatioSeries synthetic(const std::function<double(double)>& value) {
  RatioSeries rs;
  rs.t = output_grid(1e6, 64);
  for (double t : rs.t) {
    rs.finv.push_back(1.0 / (1.0 + t));
    rs.values.push_back(value(t));
  }
  rs.terminal = window_stats(rs.t, rs.values);
  return rs;
}

ConditionEvidence evidence(LimitVerdict limit, bool converges = true) {
  ConditionEvidence e;
  e.limit = limit;
  e.integral_converges = converges;
  return e;
}

}  // namespace

TEST_CASE("window statistics") {
  const auto t = output_grid(1e6, 64);
  std::vector<double> v;
  for (double s : t) v.push_back(std::log10(1.0 + s));
  const WindowStats w = window_stats(t, v);
  CHECK_THAT(w.min, WithinAbs(321.0 / 64.0, 1e-12));
  CHECK_THAT(w.max, WithinAbs(std::log10(1.0 + 1e6), 1e-12));
  CHECK_THAT(w.drift, WithinRel(1.0, 1e-9));
  CHECK(w.count == 64);
}

TEST_CASE("ratio series of an exact solution") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  for (double xi : {1.0, -1.0}) {
    const Trajectory tr = integrate_external(f, PerturbationSpec::zero(), xi, 1e6);
    const RatioSeries rs = ratio_series(tr, inv, f);
    for (std::size_t i = 0; i < rs.t.size(); ++i) {
      CHECK_THAT(rs.values[i], WithinAbs(xi, 1e-6));
      CHECK_THAT(rs.deriv_values[i], WithinAbs(-xi, 1e-5));
    }
  }
}

TEST_CASE("ratio series of the zero trajectory") {
  const auto f = NonlinearitySpec::power(2.0);
  const Trajectory tr = integrate_external(f, PerturbationSpec::zero(), 0.0, 1e4);
  const RatioSeries rs = ratio_series(tr, make_inverse_flow(f), f);
  for (double v : rs.values) CHECK(v == 0.0);
}

TEST_CASE("ratio series reports an unusable range") {
  const auto f = NonlinearitySpec::linear();
  const Trajectory tr = integrate_external(f, PerturbationSpec::zero(), 1.0, 1e6);
  CHECK_THROWS_AS(ratio_series(tr, make_inverse_flow(f), f), DomainError);
}

TEST_CASE("lambda estimation on synthetic series") {
  const Observation plus = estimate_lambda(synthetic([](double t) { return 1.0 + 0.003 / (1.0 + t); }));
  CHECK(plus.kind == VerdictKind::Preserved);
  CHECK(plus.lambda == 1);
  const Observation minus = estimate_lambda(synthetic([](double) { return -1.0; }));
  CHECK(minus.kind == VerdictKind::Preserved);
  CHECK(minus.lambda == -1);
  const Observation zero = estimate_lambda(synthetic([](double t) { return 1.0 / std::sqrt(1.0 + t); }));
  CHECK(zero.kind == VerdictKind::Preserved);
  CHECK(zero.lambda == 0);
  const Observation bounded = estimate_lambda(synthetic([](double) { return 0.5; }));
  CHECK(bounded.kind == VerdictKind::BoundedO);
  const Observation growing = estimate_lambda(synthetic([](double t) { return std::sqrt(1.0 + t); }));
  CHECK(growing.kind == VerdictKind::NotPreserved);
}

TEST_CASE("lambda tolerance is respected") {
  const auto rs = synthetic([](double) { return 1.04; });
  CHECK(estimate_lambda(rs).kind == VerdictKind::Preserved);
  VerdictConfig tight;
  tight.tol_lambda = 0.01;
  CHECK(estimate_lambda(rs, tight).kind == VerdictKind::BoundedO);
}

TEST_CASE("condition (a) closed forms") {
  const InverseFlow inv = make_inverse_flow(NonlinearitySpec::power(2.0));
  const auto a3 = check_condition_a(PerturbationSpec::power_tail(1.0, 3.0), inv);
  CHECK(a3.limit == LimitVerdict::Zero);
  CHECK_THAT(a3.terminal_last, WithinRel(-0.5 / (1.0 + 1e6), 1e-6));
  const auto a2 = check_condition_a(PerturbationSpec::power_tail(1.0, 2.0), inv);
  CHECK(a2.limit == LimitVerdict::BoundedNonzero);
  CHECK_THAT(a2.terminal_last, WithinRel(-1.0, 1e-6));
  const auto a15 = check_condition_a(PerturbationSpec::power_tail(1.0, 1.5), inv);
  CHECK(a15.limit == LimitVerdict::Unbounded);
  const auto a1 = check_condition_a(PerturbationSpec::power_tail(1.0, 1.0), inv);
  CHECK(a1.limit == LimitVerdict::Divergent);
  CHECK_FALSE(a1.integral_converges);
}

TEST_CASE("condition (c) closed forms") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  const auto c3 = check_condition_c(PerturbationSpec::power_tail(1.0, 3.0), f, inv);
  CHECK(c3.limit == LimitVerdict::Zero);
  CHECK_THAT(c3.terminal_last, WithinRel(1.0 / (1.0 + 1e6), 1e-6));
  const auto c2 = check_condition_c(PerturbationSpec::power_tail(1.0, 2.0), f, inv);
  CHECK(c2.limit == LimitVerdict::BoundedNonzero);
  CHECK_THAT(c2.terminal_last, WithinRel(1.0, 1e-6));
}

TEST_CASE("prediction mapping") {
  CHECK(predict(evidence(LimitVerdict::Zero)) == VerdictKind::Preserved);
  CHECK(predict(evidence(LimitVerdict::BoundedNonzero)) == VerdictKind::BoundedO);
  CHECK(predict(evidence(LimitVerdict::Unbounded)) == VerdictKind::NotPreserved);
  CHECK(predict(evidence(LimitVerdict::Divergent, false)) == VerdictKind::NotPreserved);
  const auto c_zero = evidence(LimitVerdict::Zero);
  CHECK(predict(evidence(LimitVerdict::BoundedNonzero), &c_zero) == VerdictKind::Inconclusive);
}

TEST_CASE("consistency relation") {
  CHECK(consistent(VerdictKind::Preserved, VerdictKind::Preserved));
  CHECK_FALSE(consistent(VerdictKind::BoundedO, VerdictKind::Preserved));
  CHECK(consistent(VerdictKind::BoundedO, VerdictKind::NotPreserved));
  CHECK_FALSE(consistent(VerdictKind::Preserved, VerdictKind::NotPreserved));
  CHECK_FALSE(consistent(VerdictKind::Inconclusive, VerdictKind::Preserved));
}

TEST_CASE("verdicts on square-law cells") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  auto run = [&](double q, double xi) {
    const auto g = PerturbationSpec::power_tail(1.0, q);
    const Trajectory tr = integrate_external(f, g, xi, 1e6);
    return render_verdict(ratio_series(tr, inv, f), tr, g, f, inv);
  };
  const RateVerdict p = run(3.0, -1.0);
  CHECK(p.observed.kind == VerdictKind::Preserved);
  CHECK(p.observed.lambda == -1);
  CHECK(p.agreement);
  CHECK(p.decays_to_zero);
  const RateVerdict b = run(2.0, 1.0);
  CHECK(b.observed.kind == VerdictKind::BoundedO);
  CHECK_THAT(b.observed.limsup, WithinRel((1.0 + std::sqrt(5.0)) / 2.0, 1e-5));
  CHECK(b.agreement);
  const RateVerdict n = run(1.5, 1.0);
  CHECK(n.observed.kind == VerdictKind::NotPreserved);
  CHECK(n.predicted == VerdictKind::NotPreserved);
  CHECK(n.agreement);
}

TEST_CASE("verdicts on cubic-law cells") {
  const auto f = NonlinearitySpec::power(3.0);
  const InverseFlow inv = make_inverse_flow(f);
  auto run = [&](double q, double xi) {
    const auto g = PerturbationSpec::power_tail(1.0, q);
    const Trajectory tr = integrate_external(f, g, xi, 1e6);
    return render_verdict(ratio_series(tr, inv, f), tr, g, f, inv);
  };
  const RateVerdict q2 = run(2.0, -1.0);
  CHECK(q2.observed.kind == VerdictKind::Preserved);
  CHECK(q2.observed.lambda == 1);
  CHECK(q2.agreement);
  const RateVerdict q15 = run(1.5, 1.0);
  CHECK(q15.observed.kind == VerdictKind::BoundedO);
  CHECK_THAT(q15.observed.limsup, WithinRel(1.648086362722872, 1e-4));
  CHECK(q15.agreement);
}
