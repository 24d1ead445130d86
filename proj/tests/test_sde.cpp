#include <catch_amalgamated.hpp>

#include <cmath>

#include "decaylab/errors.hpp"
#include "decaylab/philox.hpp"
#include "decaylab/sde.hpp"

using namespace decaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("Philox4x32-10 known-answer vectors") {
  using C = Philox4x32::Counter;
  CHECK(Philox4x32(Philox4x32::Key{0u, 0u})(C{0u, 0u, 0u, 0u}) ==
        C{0x6627e8d5u, 0xe169c58du, 0xbc57ac4cu, 0x9b00dbd8u});
  CHECK(Philox4x32(Philox4x32::Key{0xffffffffu, 0xffffffffu})(C{0xffffffffu, 0xffffffffu, 0xffffffffu, 0xffffffffu}) ==
        C{0x408f276du, 0x41c83b0eu, 0xa20bc7c6u, 0x6d5451fdu});
  CHECK(Philox4x32(Philox4x32::Key{0xa4093822u, 0x299f31d0u})(C{0x243f6a88u, 0x85a308d3u, 0x13198a2eu, 0x03707344u}) ==
        C{0xd16cfe09u, 0x94fdccebu, 0x5001e420u, 0x24126ea1u});
}

TEST_CASE("normal variates have unit moments") {
  const Philox4x32 rng(std::uint64_t{7});
  double s1 = 0.0, s2 = 0.0;
  const int n = 200000;
  for (int i = 0; i < n; ++i) {
    const double z = rng.normal({static_cast<std::uint32_t>(i), 0u, 0u, 0u});
    REQUIRE(std::isfinite(z));
    s1 += z;
    s2 += z * z;
  }
  CHECK_THAT(s1 / n, WithinAbs(0.0, 0.01));
  CHECK_THAT(s2 / n, WithinAbs(1.0, 0.01));
}

TEST_CASE("dyadic schedule") {
  const auto s = dyadic_schedule(1e4, 512, 1.0 / 64);
  REQUIRE(s.size() == 15);
  CHECK(s[0].t_begin == 0.0);
  CHECK(s[0].dt == 1.0 / 512);
  CHECK(s[0].steps == 512);
  CHECK(s[1].t_begin == 1.0);
  CHECK(s[1].dt == 1.0 / 512);
  CHECK(s[3].dt == 4.0 / 512);
  CHECK(s[4].dt == 1.0 / 64);
  CHECK(s.back().dt == 1.0 / 64);
  CHECK(s.back().t_end == 1e4);
  std::uint64_t total = 0;
  for (const auto& seg : s) {
    CHECK(seg.first_step == total);
    total += seg.steps;
  }
  CHECK(total == s.back().first_step + s.back().steps);
  CHECK_THROWS_AS(dyadic_schedule(0.0, 512, 1.0), SpecError);
}

TEST_CASE("path classification") {
  PathResult p;
  p.ratios = {0.95, 1.02, 1.05};
  CHECK(classify_path(p, 0.1) == PathBucket::PlusOne);
  CHECK(classify_path(p, 0.04) == PathBucket::Unresolved);
  p.ratios = {-0.99, -1.0};
  CHECK(classify_path(p, 0.1) == PathBucket::MinusOne);
  p.ratios = {0.05, -0.02};
  CHECK(classify_path(p, 0.1) == PathBucket::Zero);
  p.ratios = {0.5, 1.0};
  CHECK(classify_path(p, 0.1) == PathBucket::Unresolved);
  p.divergent = true;
  CHECK(classify_path(p, 0.1) == PathBucket::Divergent);
}

TEST_CASE("ensembles are independent of the worker count") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  const auto sigma = NoiseSpec::power_tail(1.0, 2.0);
  SdeConfig one;
  one.threads = 1;
  SdeConfig many;
  many.threads = 5;
  const PathEnsemble a = simulate_ensemble(f, sigma, 1.0, 100.0, 24, 3, inv, one);
  const PathEnsemble b = simulate_ensemble(f, sigma, 1.0, 100.0, 24, 3, inv, many);
  for (std::size_t p = 0; p < a.paths.size(); ++p) {
    CHECK(a.paths[p].terminal_state == b.paths[p].terminal_state);
    CHECK(a.paths[p].ratios == b.paths[p].ratios);
  }
  const PathEnsemble c = simulate_ensemble(f, sigma, 1.0, 100.0, 24, 4, inv, one);
  CHECK(c.paths[0].terminal_state != a.paths[0].terminal_state);
}

TEST_CASE("a path does not depend on the ensemble size") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  const auto sigma = NoiseSpec::constant(0.5);
  const PathEnsemble small = simulate_ensemble(f, sigma, 1.0, 50.0, 3, 11, inv);
  const PathEnsemble large = simulate_ensemble(f, sigma, 1.0, 50.0, 9, 11, inv);
  for (std::size_t p = 0; p < small.paths.size(); ++p) {
    CHECK(small.paths[p].terminal_state == large.paths[p].terminal_state);
  }
}

TEST_CASE("zero noise reduces to the Euler scheme on the ODE") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  const PathEnsemble e = simulate_ensemble(f, NoiseSpec::zero(), 1.0, 1e4, 4, 1, inv);
  for (const auto& p : e.paths) {
    CHECK(p.terminal_state == e.paths[0].terminal_state);
    CHECK_THAT(p.terminal_state, WithinAbs(1.0 / (1.0 + 1e4), 1e-3));
    CHECK(p.bucket == PathBucket::PlusOne);
  }
  CHECK(classify_ensemble(e, 0.1).frac_plus_one == 1.0);
}

TEST_CASE("Euler bias shrinks with the step") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  auto terminal = [&](int n_seg) {
    SdeConfig c;
    c.n_seg = n_seg;
    c.dt_max = 1.0;
    return simulate_ensemble(f, NoiseSpec::zero(), 1.0, 100.0, 1, 1, inv, c).paths[0].terminal_state;
  };
  const double exact = 1.0 / 101.0;
  const double e1 = std::abs(terminal(128) - exact);
  const double e2 = std::abs(terminal(256) - exact);
  CHECK_THAT(e1 / e2, WithinAbs(2.0, 0.1));
}

TEST_CASE("strong convergence under bridge refinement") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  const auto sigma = NoiseSpec::power_tail(1.0, 2.0);
  auto run = [&](int refine) {
    SdeConfig c;
    c.n_seg = 16;
    c.dt_max = 1.0;
    c.refine = refine;
    return simulate_ensemble(f, sigma, 1.0, 10.0, 400, 99, inv, c);
  };
  const PathEnsemble r0 = run(0), r1 = run(1), r2 = run(2);
  double d01 = 0.0, d12 = 0.0;
  for (std::size_t p = 0; p < r0.paths.size(); ++p) {
    d01 += std::pow(r0.paths[p].terminal_state - r1.paths[p].terminal_state, 2);
    d12 += std::pow(r1.paths[p].terminal_state - r2.paths[p].terminal_state, 2);
  }
  const double ratio = std::sqrt(d01 / d12);
  INFO("RMS ratio " << ratio);
  CHECK(ratio >= 1.7);
  CHECK(ratio <= 2.3);
}

TEST_CASE("blow-up marks paths divergent") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  SdeConfig c;
  c.blowup = 0.5;
  const PathEnsemble e = simulate_ensemble(f, NoiseSpec::constant(5.0), 0.0, 10.0, 20, 1, inv, c);
  const EnsembleReport r = classify_ensemble(e, 0.1);
  CHECK(r.divergent == 20);
}

TEST_CASE("square-integrable noise ensemble at the pinned seed") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  const PathEnsemble e = simulate_ensemble(f, NoiseSpec::power_tail(1.0, 2.0), 1.0, 1e4, 200, 42, inv);
  const EnsembleReport r = classify_ensemble(e, 0.1);
  CHECK(r.minus_one == 16);
  CHECK(r.zero == 0);
  CHECK(r.plus_one == 176);
  CHECK(r.unresolved == 8);
  CHECK(r.divergent == 0);
  CHECK(r.frac_lambda_set >= 0.9);
  CHECK(r.frac_envelope_exceeded <= 0.2);
  CHECK(r.frac_tail_decayed >= 0.9);
}

TEST_CASE("noise with infinite mu leaves few paths at a rate") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  const PathEnsemble e = simulate_ensemble(f, NoiseSpec::power_tail(1.0, 0.75), 1.0, 1e4, 200, 42, inv);
  CHECK(classify_ensemble(e, 0.1).frac_lambda_set < 0.5);
}

TEST_CASE("ensemble argument checks") {
  const auto f = NonlinearitySpec::power(2.0);
  const InverseFlow inv = make_inverse_flow(f);
  CHECK_THROWS_AS(simulate_ensemble(f, NoiseSpec::zero(), 1.0, 1e3, 0, 1, inv), SpecError);
  CHECK_THROWS_AS(simulate_ensemble(f, NoiseSpec::zero(), 1.0, 5.0, 1, 1, inv), SpecError);
}
