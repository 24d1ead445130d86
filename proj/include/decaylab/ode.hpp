#pragma once

#include <cstddef>
#include <functional>
#include <vector>

#include "decaylab/nonlinearity.hpp"
#include "decaylab/perturbation.hpp"

namespace decaylab {

struct Tolerances {
  double rtol = 1e-8;
  double atol = 1e-12;
  /// Output nodes per decade of (1 + t).
  int nodes_per_decade = 64;
  std::size_t max_steps = 2'000'000;
  /// Initial step in s = log(1 + t); 0 picks one automatically.
  double initial_step = 0.0;
};

struct IntegratorStats {
  std::size_t steps = 0;
  std::size_t rejected = 0;
  std::size_t rhs_evaluations = 0;
  /// Largest accepted scaled error estimate times the local tolerance, i.e. an absolute local error.
  double max_local_error = 0.0;
  /// Largest |h * d(rhs)/dx| seen at accepted steps (stiffness indicator in s time).
  double max_stiffness = 0.0;
};

struct Trajectory {
  std::vector<double> t;
  std::vector<double> x;
  std::vector<double> deriv;
  IntegratorStats stats;
  double max_abs = 0.0;
  double terminal_abs = 0.0;

  std::size_t size() const noexcept { return t.size(); }
};

/// t_0 = 0 followed by nodes with log10(1 + t) on a uniform grid, ending exactly at horizon.
std::vector<double> output_grid(double horizon, int nodes_per_decade);

/// Scalar ODE x' = rhs(t, x) integrated by Dormand-Prince 5(4) in s = log(1 + t)
/// with PI step control and fifth-order dense output on the log grid.
Trajectory integrate_scalar(const std::function<double(double, double)>& rhs, double xi, double horizon,
                            const Tolerances& tol = {});

/// x' = -f(x) + g(t), x(0) = xi.
Trajectory integrate_external(const NonlinearitySpec& f, const PerturbationSpec& g, double xi, double horizon,
                              const Tolerances& tol = {});

/// z' = -f(z + Gamma(t)), z(0) = xi.
Trajectory integrate_internal(const NonlinearitySpec& f, const std::function<double(double)>& gamma, double xi,
                              double horizon, const Tolerances& tol = {});

}  // namespace decaylab
