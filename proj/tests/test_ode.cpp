#include <catch_amalgamated.hpp>

#include <cmath>

#include "decaylab/errors.hpp"
#include "decaylab/ode.hpp"

using namespace decaylab;
using Catch::Matchers::WithinAbs;
using Catch::Matchers::WithinRel;

TEST_CASE("output grid") {
  const auto g = output_grid(1e6, 64);
  CHECK(g.front() == 0.0);
  CHECK(g.back() == 1e6);
  CHECK(g.size() == 6 * 64 + 1);
  CHECK(g[g.size() - 2] == std::pow(10.0, 383.0 / 64.0) - 1.0);
  for (std::size_t i = 1; i < g.size(); ++i) CHECK(g[i] > g[i - 1]);
}

TEST_CASE("unperturbed square law is exact") {
  const auto f = NonlinearitySpec::power(2.0);
  for (double xi : {1.0, -1.0}) {
    const Trajectory tr = integrate_external(f, PerturbationSpec::zero(), xi, 1e6);
    for (std::size_t i = 0; i < tr.size(); ++i) {
      const double exact = xi / (1.0 + tr.t[i]);
      CHECK(std::abs(tr.x[i] - exact) <= 1e-6 * std::abs(exact));
    }
  }
}

TEST_CASE("odd symmetry of the unperturbed flow") {
  const auto f = NonlinearitySpec::power(3.0);
  const Trajectory a = integrate_external(f, PerturbationSpec::zero(), 0.7, 1e4);
  const Trajectory b = integrate_external(f, PerturbationSpec::zero(), -0.7, 1e4);
  REQUIRE(a.size() == b.size());
  for (std::size_t i = 0; i < a.size(); ++i) CHECK(a.x[i] == -b.x[i]);
}

TEST_CASE("zero initial state stays at zero") {
  const Trajectory tr = integrate_external(NonlinearitySpec::power(2.0), PerturbationSpec::zero(), 0.0, 1e3);
  for (double x : tr.x) CHECK(x == 0.0);
}

TEST_CASE("preserved cell approaches the unperturbed rate") {
  const Trajectory tr =
      integrate_external(NonlinearitySpec::power(2.0), PerturbationSpec::power_tail(1.0, 3.0), 1.0, 1e6);
  CHECK_THAT(tr.x.back() * (1.0 + 1e6), WithinAbs(1.0, 0.02));
}

TEST_CASE("critical cell settles on the golden ratio") {
  const Trajectory tr =
      integrate_external(NonlinearitySpec::power(2.0), PerturbationSpec::power_tail(1.0, 2.0), 1.0, 1e6);
  CHECK_THAT(tr.x.back() * (1.0 + 1e6), WithinRel((1.0 + std::sqrt(5.0)) / 2.0, 1e-5));
}

TEST_CASE("derivative output matches the right-hand side") {
  const auto f = NonlinearitySpec::power(2.0);
  const auto g = PerturbationSpec::power_tail(1.0, 3.0);
  const Trajectory tr = integrate_external(f, g, 1.0, 1e3);
  for (std::size_t i = 0; i < tr.size(); ++i) {
    CHECK_THAT(tr.deriv[i], WithinRel(-f(tr.x[i]) + g(tr.t[i]), 1e-12));
  }
}

TEST_CASE("internal form reproduces the external trajectory") {
  const auto f = NonlinearitySpec::power(2.0);
  const auto g = PerturbationSpec::power_tail(1.0, 3.0);
  const Trajectory ext = integrate_external(f, g, 1.0, 1e6);
  const auto red = reduce_external_to_internal(g, 1.0);
  const Trajectory in = integrate_internal(f, red.gamma, red.xi, 1e6);
  REQUIRE(in.size() == ext.size());
  for (std::size_t i = 0; i < in.size(); ++i) {
    CHECK(in.t[i] == ext.t[i]);
    CHECK_THAT(in.x[i] + red.gamma(in.t[i]), WithinAbs(ext.x[i], 1e-6));
  }
}

TEST_CASE("internal form with zero Gamma is unperturbed") {
  const Trajectory in = integrate_internal(NonlinearitySpec::power(2.0), [](double) { return 0.0; }, 1.0, 1e4);
  for (std::size_t i = 0; i < in.size(); ++i) CHECK_THAT(in.x[i], WithinRel(1.0 / (1.0 + in.t[i]), 1e-6));
}

TEST_CASE("internal form with Gamma of order F inverse stays of that order") {
  const Trajectory in =
      integrate_internal(NonlinearitySpec::power(2.0), [](double t) { return 1.0 / (1.0 + t); }, 1.0, 1e6);
  const double terminal = std::abs(in.x.back()) * (1.0 + 1e6);
  CHECK(terminal < 10.0);
  CHECK(terminal > 0.1);
}

TEST_CASE("tightening tolerances converges") {
  const auto f = NonlinearitySpec::power(3.0);
  const auto g = PerturbationSpec::oscillatory(1.0, 2.0, 1.0);
  Tolerances loose;
  loose.rtol = 1e-6;
  loose.atol = 1e-10;
  Tolerances tight;
  tight.rtol = 1e-10;
  tight.atol = 1e-14;
  const Trajectory a = integrate_external(f, g, 1.0, 1e3, loose);
  const Trajectory b = integrate_external(f, g, 1.0, 1e3, tight);
  CHECK_THAT(a.x.back(), WithinRel(b.x.back(), 1e-4));
  CHECK(b.stats.steps > a.stats.steps);
}

TEST_CASE("invalid arguments are rejected") {
  const auto f = NonlinearitySpec::power(2.0);
  CHECK_THROWS_AS(integrate_external(f, PerturbationSpec::zero(), 1.0, 0.5), SpecError);
  CHECK_THROWS_AS(integrate_external(f, PerturbationSpec::zero(), std::nan(""), 10.0), SpecError);
}
