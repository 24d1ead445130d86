#include <catch_amalgamated.hpp>

#include <cmath>

#include "decaylab/errors.hpp"
#include "decaylab/noise.hpp"

using namespace decaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("tail integral of sigma squared") {
  const auto s = NoiseSpec::power_tail(1.0, 2.0);
  CHECK_THAT(sigma_tail_integral(s, 0.0), WithinRel(1.0 / 3.0, 1e-15));
  CHECK_THAT(sigma_tail_integral(s, 9.0), WithinRel(1e-3 / 3.0, 1e-14));
  CHECK(sigma_tail_integral(NoiseSpec::zero(), 5.0) == 0.0);
  CHECK_THROWS_AS(sigma_tail_integral(NoiseSpec::constant(1.0), 0.0), DomainError);
  CHECK_THROWS_AS(sigma_tail_integral(NoiseSpec::power_tail(1.0, 0.5), 0.0), DomainError);
}

TEST_CASE("square integrability") {
  CHECK(NoiseSpec::power_tail(1.0, 2.0).in_L2());
  CHECK(NoiseSpec::power_tail(1.0, 0.75).in_L2());
  CHECK_FALSE(NoiseSpec::power_tail(1.0, 0.5).in_L2());
  CHECK_FALSE(NoiseSpec::constant(1.0).in_L2());
  CHECK(NoiseSpec::zero().in_L2());
}

TEST_CASE("threshold time") {
  CHECK(sigma_threshold_time(NoiseSpec::power_tail(1.0, 2.0)) == 0.0);
  CHECK_THAT(sigma_threshold_time(NoiseSpec::power_tail(2.0, 2.0)), WithinRel(0.53607023176255662539, 1e-12));
}

TEST_CASE("threshold time by bisection for a custom sigma") {
  const auto s = NoiseSpec::custom([](double t) { return 2.0 * std::pow(1.0 + t, -2.0); }, {2.0, 2.0});
  CHECK_THAT(sigma_threshold_time(s), WithinRel(0.53607023176255662539, 1e-9));
}

TEST_CASE("iterated logarithm envelope") {
  const auto s = NoiseSpec::power_tail(1.0, 2.0);
  CHECK_THAT(compute_Sigma(s, 99.0), WithinRel(0.0013422142417385394196, 1e-13));
  CHECK_THROWS_AS(compute_Sigma(NoiseSpec::zero(), 1.0), DomainError);
  const auto s2 = NoiseSpec::power_tail(2.0, 2.0);
  try {
    compute_Sigma(s2, 0.1);
    FAIL("expected DomainError");
  } catch (const DomainError& e) {
    CHECK_THAT(e.boundary(), WithinRel(0.53607023176255662539, 1e-12));
  }
}

TEST_CASE("envelope decreases past the threshold") {
  const auto s = NoiseSpec::power_tail(1.0, 1.0);
  double prev = compute_Sigma(s, 10.0);
  for (double t : {100.0, 1e3, 1e4, 1e5}) {
    const double v = compute_Sigma(s, t);
    CHECK(v < prev);
    prev = v;
  }
}

TEST_CASE("mu trichotomy") {
  const InverseFlow inv = make_inverse_flow(NonlinearitySpec::power(2.0));
  const MuEstimate zero = estimate_mu(NoiseSpec::power_tail(1.0, 2.0), inv);
  CHECK(zero.bucket == MuBucket::Zero);
  CHECK_THAT(zero.slope, WithinAbs(-0.5, 0.03));
  const MuEstimate inf = estimate_mu(NoiseSpec::power_tail(1.0, 0.75), inv);
  CHECK(inf.bucket == MuBucket::Infinite);
  CHECK_THAT(inf.slope, WithinAbs(0.75, 0.05));
  CHECK(estimate_mu(NoiseSpec::zero(), inv).bucket == MuBucket::NotApplicable);
  CHECK(estimate_mu(NoiseSpec::constant(1.0), inv).bucket == MuBucket::NotApplicable);
}
