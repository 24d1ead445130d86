#pragma once

#include <functional>

namespace decaylab::quadrature {

/// Composite 30-point Gauss-Legendre rule on `panels` equal panels of [a, b].
double gauss_legendre(const std::function<double(double)>& g, double a, double b, int panels);

struct PanelResult {
  double value = 0.0;
  double error = 0.0;
  int panels = 0;
  bool converged = false;
};

/// Doubles the panel count from `start_panels` until two successive composite
/// estimates agree within max(abs_tol, rel_tol * |value|).
PanelResult integrate_doubling(const std::function<double(double)>& g, double a, double b,
                               double abs_tol, double rel_tol, int max_panels, int start_panels = 1);

}  // namespace decaylab::quadrature
