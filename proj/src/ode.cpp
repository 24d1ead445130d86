#include "decaylab/ode.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "decaylab/errors.hpp"

namespace decaylab {

namespace {

// Dormand-Prince 5(4) tableau.
constexpr double c2 = 1.0 / 5, c3 = 3.0 / 10, c4 = 4.0 / 5, c5 = 8.0 / 9;
constexpr double a21 = 1.0 / 5;
constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187, a53 = 64448.0 / 6561, a54 = -212.0 / 729;
constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247, a64 = 49.0 / 176,
                 a65 = -5103.0 / 18656;
constexpr double a71 = 35.0 / 384, a73 = 500.0 / 1113, a74 = 125.0 / 192, a75 = -2187.0 / 6784, a76 = 11.0 / 84;
constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920, e5 = -17253.0 / 339200,
                 e6 = 22.0 / 525, e7 = -1.0 / 40;
constexpr double d1 = -12715105075.0 / 11282082432, d3 = 87487479700.0 / 32700410799,
                 d4 = -10690763975.0 / 1880347072, d5 = 701980252875.0 / 199316789632,
                 d6 = -1453857185.0 / 822651844, d7 = 69997945.0 / 29380423;

struct Dense {
  double r1, r2, r3, r4, r5;
  double operator()(double theta) const {
    const double th1 = 1.0 - theta;
    return r1 + theta * (r2 + th1 * (r3 + theta * (r4 + th1 * r5)));
  }
};

std::string describe_failure(const char* what, double t, double x) {
  std::ostringstream os;
  os << what << " at t = " << t << " (last state x = " << x << ")";
  return os.str();
}

}  // namespace

std::vector<double> output_grid(double horizon, int nodes_per_decade) {
  if (!(horizon > 0.0) || !std::isfinite(horizon)) throw SpecError("horizon must be positive and finite");
  if (nodes_per_decade < 1) throw SpecError("nodes_per_decade must be >= 1");
  std::vector<double> grid{0.0};
  const double top = std::log10(1.0 + horizon);
  for (int j = 1;; ++j) {
    const double e = static_cast<double>(j) / nodes_per_decade;
    if (e > top - 0.5 / nodes_per_decade) break;
    grid.push_back(std::pow(10.0, e) - 1.0);
  }
  grid.push_back(horizon);
  return grid;
}

Trajectory integrate_scalar(const std::function<double(double, double)>& rhs, double xi, double horizon,
                            const Tolerances& tol) {
  if (!(tol.rtol > 0.0) || !(tol.atol > 0.0)) throw SpecError("integrator tolerances must be positive");
  if (!std::isfinite(xi)) throw SpecError("initial state must be finite");
  const auto grid = output_grid(horizon, tol.nodes_per_decade);

  Trajectory traj;
  traj.t.reserve(grid.size());
  traj.x.reserve(grid.size());
  traj.deriv.reserve(grid.size());
  IntegratorStats& st = traj.stats;

  auto F = [&](double s, double x) {
    ++st.rhs_evaluations;
    const double t = std::expm1(s);
    return (1.0 + t) * rhs(t, x);
  };
  auto record = [&](double t, double x) {
    if (!std::isfinite(x)) throw IntegrationError(describe_failure("non-finite state", t, x), t, x);
    traj.t.push_back(t);
    traj.x.push_back(x);
    traj.deriv.push_back(rhs(t, x));
    traj.max_abs = std::max(traj.max_abs, std::abs(x));
  };

  const double s_end = std::log1p(horizon);
  double s = 0.0;
  double y = xi;
  double k1 = F(s, y);
  record(0.0, y);
  std::size_t next = 1;

  auto sk_of = [&](double a, double b) { return tol.atol + tol.rtol * std::max(std::abs(a), std::abs(b)); };

  double h = tol.initial_step;
  if (!(h > 0.0)) {
    const double sk = sk_of(y, y);
    const double dn0 = std::abs(y) / sk;
    const double dn1 = std::abs(k1) / sk;
    double h0 = (dn0 <= 1e-10 || dn1 <= 1e-10) ? 1e-6 : 0.01 * dn0 / dn1;
    h0 = std::min(h0, s_end);
    const double k2 = F(s + h0, y + h0 * k1);
    const double dn2 = std::abs(k2 - k1) / sk / h0;
    const double m = std::max(dn1, dn2);
    const double h1 = m <= 1e-15 ? std::max(1e-6, h0 * 1e-3) : std::pow(0.01 / m, 0.2);
    h = std::min(100.0 * h0, h1);
  }
  h = std::min(h, s_end);

  constexpr double beta = 0.04, expo1 = 0.2 - beta * 0.75, safe = 0.9;
  constexpr double fac_min = 0.1, fac_max = 5.0;
  double facold = 1e-4;
  bool last_rejected = false;

  while (s < s_end) {
    if (st.steps + st.rejected >= tol.max_steps) {
      const double t = std::expm1(s);
      throw IntegrationError(describe_failure("step budget exhausted", t, y), t, y);
    }
    if (h < 1e-13 * std::max(1.0, s)) {
      const double t = std::expm1(s);
      throw IntegrationError(describe_failure("step size collapsed", t, y), t, y);
    }
    bool last = false;
    if (s + h >= s_end) {
      h = s_end - s;
      last = true;
    }
    const double k2 = F(s + c2 * h, y + h * a21 * k1);
    const double k3 = F(s + c3 * h, y + h * (a31 * k1 + a32 * k2));
    const double k4 = F(s + c4 * h, y + h * (a41 * k1 + a42 * k2 + a43 * k3));
    const double k5 = F(s + c5 * h, y + h * (a51 * k1 + a52 * k2 + a53 * k3 + a54 * k4));
    const double y6 = y + h * (a61 * k1 + a62 * k2 + a63 * k3 + a64 * k4 + a65 * k5);
    const double s_new = last ? s_end : s + h;
    const double k6 = F(s_new, y6);
    const double y1 = y + h * (a71 * k1 + a73 * k3 + a74 * k4 + a75 * k5 + a76 * k6);
    const double k7 = F(s_new, y1);

    const double sk = sk_of(y, y1);
    const double err_abs = std::abs(h * (e1 * k1 + e3 * k3 + e4 * k4 + e5 * k5 + e6 * k6 + e7 * k7));
    const double err = err_abs / sk;
    if (!std::isfinite(err) || !std::isfinite(y1)) {
      h *= 0.25;
      ++st.rejected;
      last_rejected = true;
      continue;
    }

    const double fac11 = std::pow(err, expo1);
    if (err <= 1.0) {
      facold = std::max(err, 1e-4);
      ++st.steps;
      st.max_local_error = std::max(st.max_local_error, err_abs);
      if (y1 != y6) st.max_stiffness = std::max(st.max_stiffness, std::abs(h * (k7 - k6) / (y1 - y6)));

      if (next < grid.size()) {
        Dense dn{y, y1 - y, 0.0, 0.0, h * (d1 * k1 + d3 * k3 + d4 * k4 + d5 * k5 + d6 * k6 + d7 * k7)};
        dn.r3 = h * k1 - dn.r2;
        dn.r4 = dn.r2 - h * k7 - dn.r3;
        while (next < grid.size()) {
          const double sn = std::log1p(grid[next]);
          if (sn > s_new && !(last && next + 1 == grid.size())) break;
          const double theta = (next + 1 == grid.size() && last) ? 1.0 : (sn - s) / h;
          record(grid[next], theta >= 1.0 ? y1 : dn(theta));
          ++next;
        }
      }

      double fac = fac11 / std::pow(facold, beta);
      fac = std::max(1.0 / fac_max, std::min(1.0 / fac_min, fac / safe));
      double h_new = h / fac;
      if (last_rejected) h_new = std::min(h_new, h);
      last_rejected = false;
      s = s_new;
      y = y1;
      k1 = k7;
      h = h_new;
    } else {
      h = h / std::min(1.0 / fac_min, fac11 / safe);
      ++st.rejected;
      last_rejected = true;
    }
  }
  if (traj.t.size() != grid.size()) {
    throw IntegrationError(describe_failure("output grid incomplete", horizon, y), horizon, y);
  }
  traj.terminal_abs = std::abs(traj.x.back());
  return traj;
}

Trajectory integrate_external(const NonlinearitySpec& f, const PerturbationSpec& g, double xi, double horizon,
                              const Tolerances& tol) {
  if (!(horizon >= 1.0)) throw SpecError("horizon must be >= 1");
  return integrate_scalar([&](double t, double x) { return -f(x) + g(t); }, xi, horizon, tol);
}

Trajectory integrate_internal(const NonlinearitySpec& f, const std::function<double(double)>& gamma, double xi,
                              double horizon, const Tolerances& tol) {
  if (!(horizon >= 1.0)) throw SpecError("horizon must be >= 1");
  if (!gamma) throw SpecError("integrate_internal needs a Gamma evaluator");
  return integrate_scalar([&](double t, double z) { return -f(z + gamma(t)); }, xi, horizon, tol);
}

}  // namespace decaylab
