#include <catch_amalgamated.hpp>

#include <cmath>

#include "decaylab/errors.hpp"
#include "decaylab/flow.hpp"
#include "decaylab/nonlinearity.hpp"

using namespace decaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("eval_f closed forms and odd extension") {
  const auto sq = NonlinearitySpec::power(2.0);
  CHECK(eval_f(sq, 0.5) == 0.25);
  CHECK(eval_f(sq, -0.5) == -0.25);
  CHECK(eval_f(sq, 0.0) == 0.0);
  CHECK_THAT(eval_f(NonlinearitySpec::flat_exponential(), 0.5), WithinRel(std::exp(-2.0), 1e-15));
  CHECK(eval_f(NonlinearitySpec::flat_exponential(), 0.0) == 0.0);
  CHECK(eval_f(NonlinearitySpec::linear(), -3.0) == -3.0);
  CHECK_THAT(eval_f(NonlinearitySpec::power(2.5), -0.3), WithinRel(-std::pow(0.3, 2.5), 1e-15));
}

TEST_CASE("power exponent must exceed one") {
  CHECK_THROWS_AS(NonlinearitySpec::power(1.0), SpecError);
  CHECK_THROWS_AS(NonlinearitySpec::power(0.5), SpecError);
}

TEST_CASE("odd symmetry holds on a sample grid") {
  for (const auto& f : {NonlinearitySpec::power(2.0), NonlinearitySpec::power(3.0), NonlinearitySpec::linear(),
                        NonlinearitySpec::flat_exponential()}) {
    for (double x : log_spaced(1e-6, 1.0, 40)) CHECK(f(-x) == -f(x));
  }
}

TEST_CASE("validate accepts the catalog") {
  for (const auto& f : {NonlinearitySpec::power(2.0), NonlinearitySpec::power(3.0), NonlinearitySpec::linear(),
                        NonlinearitySpec::flat_exponential()}) {
    const ValidationReport r = validate(f);
    INFO(f.describe());
    CHECK(r.ok());
    CHECK(r.problems.empty());
  }
}

TEST_CASE("validate rejects a non-monotone custom branch") {
  const auto f = NonlinearitySpec::custom([](double x) { return x * x * (1.5 + std::sin(40.0 / x)); }, 1.0, 1.0,
                                          "wiggly");
  CHECK_FALSE(validate(f).ok());
}

TEST_CASE("phi_bar limits") {
  CHECK_THAT(estimate_phi_bar(NonlinearitySpec::power(2.0), 0.5).limsup_est, WithinAbs(0.25, 1e-12));
  CHECK_THAT(estimate_phi_bar(NonlinearitySpec::linear(), 0.5).limsup_est, WithinAbs(0.5, 1e-12));
  CHECK(estimate_phi_bar(NonlinearitySpec::flat_exponential(), 0.5).limsup_est < 1e-6);
}

TEST_CASE("phi_under limits") {
  const auto sq = NonlinearitySpec::power(2.0);
  CHECK_THAT(estimate_phi_under(sq, 0.1).liminf_est, WithinAbs(0.81, 1e-12));
  CHECK_THAT(estimate_phi_under(sq, 0.01).liminf_est, WithinAbs(0.9801, 1e-12));
  CHECK_THAT(estimate_phi_under(sq, 0.001).liminf_est, WithinAbs(0.998001, 1e-12));
  CHECK(estimate_phi_under(NonlinearitySpec::flat_exponential(), 0.1).liminf_est < 1e-3);
}

TEST_CASE("phi_bar stays below one for mu in (0,1)") {
  for (const auto& f : {NonlinearitySpec::power(2.0), NonlinearitySpec::power(3.0), NonlinearitySpec::linear()}) {
    for (double mu : {0.9, 0.5, 0.1}) CHECK(estimate_phi_bar(f, mu).limsup_est < 1.0);
  }
}

TEST_CASE("rho limits") {
  const auto sq = NonlinearitySpec::power(2.0);
  const RhoLimits r2 = estimate_rho_limits(sq, FlowMap(sq));
  CHECK_THAT(r2.l, WithinAbs(1.0, 1e-4));
  CHECK_THAT(r2.L, WithinAbs(1.0, 1e-4));
  const auto cube = NonlinearitySpec::power(3.0);
  const RhoLimits r3 = estimate_rho_limits(cube, FlowMap(cube));
  CHECK_THAT(r3.l, WithinAbs(0.5, 1e-4));
  CHECK_THAT(r3.L, WithinAbs(0.5, 1e-4));
  CHECK(r3.l <= r3.L);
}

TEST_CASE("rho for flat exponential tends to zero and for linear grows") {
  const auto fe = NonlinearitySpec::flat_exponential();
  const RhoLimits rf = estimate_rho_limits(fe, FlowMap(fe));
  CHECK(rf.L < 0.02);
  CHECK(rf.estimate.trend < 0.0);
  const auto lin = NonlinearitySpec::linear();
  const RhoLimits rl = estimate_rho_limits(lin, FlowMap(lin));
  CHECK(rl.L > 10.0);
  CHECK(rl.estimate.trend > 0.0);
}

TEST_CASE("regime classification") {
  CHECK(classify_nonlinearity(NonlinearitySpec::power(2.0)).regime == DecayRegime::PowerLike);
  CHECK(classify_nonlinearity(NonlinearitySpec::power(3.0)).regime == DecayRegime::PowerLike);
  CHECK(classify_nonlinearity(NonlinearitySpec::linear()).regime == DecayRegime::SlowerThanPower);
  CHECK(classify_nonlinearity(NonlinearitySpec::flat_exponential()).regime == DecayRegime::FasterThanPower);
}

TEST_CASE("power-like verdict carries passing evidence") {
  const DecayClass c = classify_nonlinearity(NonlinearitySpec::power(2.0));
  REQUIRE_FALSE(c.evidence.empty());
  std::size_t passes = 0;
  for (const auto& e : c.evidence) passes += e.outcome == Outcome::Pass;
  CHECK(passes >= 2);
}

TEST_CASE("superlinearity") {
  CHECK(check_superlinearity(NonlinearitySpec::power(2.0)).passed);
  CHECK_FALSE(check_superlinearity(NonlinearitySpec::linear()).passed);
  const auto r = check_superlinearity(NonlinearitySpec::power(1.5), {1e-4 * 2.0, 0.5, 1, 1});
  CHECK_THAT(r.delta.front(), WithinRel(std::sqrt(2e-4), 1e-12));
}

TEST_CASE("phi_bar log bound") {
  const auto sq = check_phi_bar_log_bound(NonlinearitySpec::power(2.0), dyadic_ladder(8));
  CHECK(sq.bounded);
  CHECK(std::isfinite(sq.c_prime));
  for (double s : sq.slack) CHECK(s >= -1e-12);
  const auto at8 = check_phi_bar_log_bound(NonlinearitySpec::power(2.0), {0.125});
  CHECK_THAT(at8.c_needed.front(), WithinRel(std::log(8.0) / 8.0, 1e-9));
  CHECK_FALSE(check_phi_bar_log_bound(NonlinearitySpec::linear(), dyadic_ladder(8)).bounded);
}

TEST_CASE("power ratio monotonicity") {
  const auto sq = NonlinearitySpec::power(2.0);
  CHECK(power_ratio_monotonicity(sq, 0.5) == Monotonicity::Increasing);
  CHECK(power_ratio_monotonicity(sq, 1.0) == Monotonicity::Constant);
  CHECK(power_ratio_monotonicity(sq, 2.0) == Monotonicity::Decreasing);
}

TEST_CASE("log-log table interpolation reproduces a power law") {
  std::vector<double> xs, fs;
  for (double x : log_spaced(1e-8, 1.0, 60)) {
    xs.push_back(x);
    fs.push_back(x * x);
  }
  const auto f = NonlinearitySpec::from_table(xs, fs);
  for (double x : {3e-7, 0.01234, 0.5}) CHECK_THAT(f(x), WithinRel(x * x, 1e-10));
  CHECK_THAT(f(-0.25), WithinRel(-0.0625, 1e-10));
  CHECK_THROWS_AS(eval_f(f, 1e-9), DomainError);
  CHECK(classify_nonlinearity(f).regime == DecayRegime::PowerLike);
}

TEST_CASE("table construction rejects bad data") {
  CHECK_THROWS_AS(NonlinearitySpec::from_table({0.1, 0.05}, {0.01, 0.0025}), SpecError);
  CHECK_THROWS_AS(NonlinearitySpec::from_table({0.1, 0.2}, {0.01, -1.0}), SpecError);
  CHECK_THROWS(NonlinearitySpec::from_csv("/nonexistent/table.csv"));
}
