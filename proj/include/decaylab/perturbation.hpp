#pragma once

#include <functional>
#include <memory>
#include <string>

namespace decaylab {

/// |h(s)| <= A (1 + s)^{-p} for every s >= 0.
struct Envelope {
  double A = 1.0;
  double p = 2.0;
};

enum class PerturbationForm { Zero, PowerTail, Oscillatory, Custom };
enum class TailModel { ClosedForm, Numeric };

std::string to_string(PerturbationForm form);
std::string to_string(TailModel model);

/// Deterministic forcing g(t) together with the tail integral Gamma(t) = -int_t^inf g.
class PerturbationSpec {
 public:
  /// g = 0.
  static PerturbationSpec zero();
  /// g(t) = c (1 + t)^{-q}. Gamma is closed-form when q > 1; otherwise int g diverges.
  static PerturbationSpec power_tail(double c, double q);
  /// g(t) = c (1 + t)^{-q} cos(omega t), q > 0. Gamma is evaluated by a rotated contour
  /// so the conditionally convergent range q in (0, 1] is covered too.
  static PerturbationSpec oscillatory(double c, double q, double omega);
  /// Arbitrary g with a declared absolutely integrable envelope (p > 1), checked by sampling.
  static PerturbationSpec custom(std::function<double(double)> g, Envelope envelope,
                                 std::string label = "custom");

  double operator()(double t) const;
  double g(double t) const { return (*this)(t); }

  /// Gamma(t) = -int_t^inf g(s) ds. Throws DomainError when the integral diverges.
  double gamma(double t) const;
  /// int_0^inf g(s) ds.
  double total_integral() const { return -gamma(0.0); }
  /// int_0^t g(s) ds has a finite limit.
  bool integral_converges() const noexcept;

  PerturbationForm form() const noexcept { return form_; }
  TailModel tail_model() const noexcept { return tail_; }
  double c() const noexcept { return c_; }
  double q() const noexcept { return q_; }
  double omega() const noexcept { return omega_; }
  const Envelope& envelope() const noexcept { return envelope_; }
  const std::string& label() const noexcept { return label_; }
  std::string describe() const;

 private:
  PerturbationSpec() = default;

  double numeric_gamma(double t) const;
  double oscillatory_gamma(double t) const;

  PerturbationForm form_ = PerturbationForm::Zero;
  TailModel tail_ = TailModel::ClosedForm;
  double c_ = 0.0;
  double q_ = 0.0;
  double omega_ = 0.0;
  Envelope envelope_{};
  std::string label_ = "zero";
  std::shared_ptr<const std::function<double(double)>> g_;
};

double gamma_of(const PerturbationSpec& p, double t);

/// Tail integral of a function with envelope |h| <= A (1+s)^{-p}, p > 1:
/// integrates [t, T_cut] with T_cut = max(10 t, envelope bound) and splits the
/// error budget evenly between quadrature and the discarded tail.
double tail_integral_numeric(const std::function<double(double)>& h, const Envelope& envelope, double t,
                             double rel_tol = 1e-10);

/// Samples |h| against 1.001 A (1+s)^{-p} on a log grid of [0, t_max]; throws SpecError on violation.
void validate_envelope(const std::function<double(double)>& h, const Envelope& envelope,
                       double t_max = 1e8, int samples = 4096);

struct InternalReduction {
  std::function<double(double)> gamma;
  /// xi' = xi + int_0^inf g.
  double xi = 0.0;
};

/// z = x - Gamma turns x' = -f(x) + g into z' = -f(z + Gamma) with z(0) = xi'.
InternalReduction reduce_external_to_internal(const PerturbationSpec& g, double xi);

}  // namespace decaylab
