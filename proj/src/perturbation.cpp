#include "decaylab/perturbation.hpp"

#include <cmath>
#include <complex>
#include <limits>
#include <sstream>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "decaylab/errors.hpp"
#include "decaylab/quadrature.hpp"

namespace decaylab {

std::string to_string(PerturbationForm form) {
  switch (form) {
    case PerturbationForm::Zero: return "zero";
    case PerturbationForm::PowerTail: return "power_tail";
    case PerturbationForm::Oscillatory: return "oscillatory";
    case PerturbationForm::Custom: return "custom";
  }
  return "custom";
}

std::string to_string(TailModel model) { return model == TailModel::ClosedForm ? "closed_form" : "numeric"; }

PerturbationSpec PerturbationSpec::zero() { return PerturbationSpec{}; }

PerturbationSpec PerturbationSpec::power_tail(double c, double q) {
  if (!std::isfinite(c) || !std::isfinite(q) || q < 0.0) throw SpecError("power_tail needs finite c and q >= 0");
  PerturbationSpec s;
  s.form_ = PerturbationForm::PowerTail;
  s.c_ = c;
  s.q_ = q;
  s.envelope_ = {std::abs(c), q};
  s.label_ = "power_tail";
  return s;
}

PerturbationSpec PerturbationSpec::oscillatory(double c, double q, double omega) {
  if (!std::isfinite(c) || !std::isfinite(omega) || !(q > 0.0)) {
    throw SpecError("oscillatory needs finite c, omega and q > 0");
  }
  if (omega == 0.0) return power_tail(c, q);
  PerturbationSpec s;
  s.form_ = PerturbationForm::Oscillatory;
  s.c_ = c;
  s.q_ = q;
  s.omega_ = std::abs(omega);
  s.envelope_ = {std::abs(c), q};
  s.label_ = "oscillatory";
  return s;
}

PerturbationSpec PerturbationSpec::custom(std::function<double(double)> g, Envelope envelope, std::string label) {
  if (!g) throw SpecError("custom perturbation needs an evaluator");
  if (!(envelope.p > 1.0)) {
    throw SpecError("custom perturbation envelope needs p > 1 (got " + std::to_string(envelope.p) +
                    "); Gamma is undefined otherwise");
  }
  if (!(envelope.A >= 0.0) || !std::isfinite(envelope.A)) throw SpecError("envelope needs finite A >= 0");
  validate_envelope(g, envelope);
  PerturbationSpec s;
  s.form_ = PerturbationForm::Custom;
  s.tail_ = TailModel::Numeric;
  s.envelope_ = envelope;
  s.label_ = std::move(label);
  s.g_ = std::make_shared<const std::function<double(double)>>(std::move(g));
  return s;
}

double PerturbationSpec::operator()(double t) const {
  switch (form_) {
    case PerturbationForm::Zero: return 0.0;
    case PerturbationForm::PowerTail: return c_ * std::pow(1.0 + t, -q_);
    case PerturbationForm::Oscillatory: return c_ * std::pow(1.0 + t, -q_) * std::cos(omega_ * t);
    case PerturbationForm::Custom: return (*g_)(t);
  }
  return 0.0;
}

bool PerturbationSpec::integral_converges() const noexcept {
  switch (form_) {
    case PerturbationForm::Zero: return true;
    case PerturbationForm::PowerTail: return q_ > 1.0 || c_ == 0.0;
    case PerturbationForm::Oscillatory: return true;
    case PerturbationForm::Custom: return true;
  }
  return false;
}

double PerturbationSpec::gamma(double t) const {
  if (!(t >= 0.0)) throw DomainError("Gamma needs t >= 0", 0.0);
  switch (form_) {
    case PerturbationForm::Zero: return 0.0;
    case PerturbationForm::PowerTail:
      if (c_ == 0.0) return 0.0;
      if (!(q_ > 1.0)) {
        throw DomainError("int g diverges for power_tail with q = " + std::to_string(q_) + " <= 1", 1.0);
      }
      return -c_ * std::pow(1.0 + t, 1.0 - q_) / (q_ - 1.0);
    case PerturbationForm::Oscillatory: return oscillatory_gamma(t);
    case PerturbationForm::Custom: return numeric_gamma(t);
  }
  return 0.0;
}

double PerturbationSpec::oscillatory_gamma(double t) const {
  // int_t^inf (1+s)^{-q} cos(w s) ds = Re[i e^{i w t} int_0^inf (1+t+iy)^{-q} e^{-w y} dy]
  const double a = 1.0 + t;
  const double w = omega_;
  const double q = q_;
  auto part = [&](bool imag) {
    return [=](double y) {
      const std::complex<double> v = std::pow(std::complex<double>(a, y), -q) * std::exp(-w * y);
      return imag ? v.imag() : v.real();
    };
  };
  boost::math::quadrature::exp_sinh<double> integrator;
  const double tol = 1e-13;
  const double re = integrator.integrate(part(false), 0.0, std::numeric_limits<double>::infinity(), tol);
  const double im = integrator.integrate(part(true), 0.0, std::numeric_limits<double>::infinity(), tol);
  const std::complex<double> J(re, im);
  const std::complex<double> tail = std::complex<double>(0.0, 1.0) * std::polar(1.0, w * t) * J;
  return -c_ * tail.real();
}

double PerturbationSpec::numeric_gamma(double t) const { return -tail_integral_numeric(*g_, envelope_, t); }

std::string PerturbationSpec::describe() const {
  std::ostringstream os;
  switch (form_) {
    case PerturbationForm::Zero: os << "0"; break;
    case PerturbationForm::PowerTail: os << c_ << "*(1+t)^-" << q_; break;
    case PerturbationForm::Oscillatory: os << c_ << "*(1+t)^-" << q_ << "*cos(" << omega_ << "t)"; break;
    case PerturbationForm::Custom: os << "custom(" << label_ << ")"; break;
  }
  return os.str();
}

double gamma_of(const PerturbationSpec& p, double t) { return p.gamma(t); }

double tail_integral_numeric(const std::function<double(double)>& h, const Envelope& envelope, double t,
                             double rel_tol) {
  if (!(envelope.p > 1.0)) throw DomainError("envelope exponent must exceed 1", 1.0);
  if (envelope.A == 0.0) return 0.0;
  // Budget relative to the envelope's own tail at t.
  const double scale = envelope.A * std::pow(1.0 + t, 1.0 - envelope.p) / (envelope.p - 1.0);
  const double budget = rel_tol * scale + std::numeric_limits<double>::min();
  // A (1+T)^{1-p} / (p-1) <= budget / 2
  const double bound = std::pow(0.5 * budget * (envelope.p - 1.0) / envelope.A, 1.0 / (1.0 - envelope.p)) - 1.0;
  const double t_cut = std::max(10.0 * t + 10.0, bound);
  // s = log(1+u) spreads the algebraic tail evenly.
  auto integrand = [&h](double s) {
    const double u = std::expm1(s);
    return h(u) * (1.0 + u);
  };
  const auto r = quadrature::integrate_doubling(integrand, std::log1p(t), std::log1p(t_cut), 0.5 * budget, 0.0,
                                                1 << 16, 8);
  if (!r.converged) {
    throw DomainError("tail integral from t = " + std::to_string(t) + " did not reach tolerance", t);
  }
  return r.value;
}

void validate_envelope(const std::function<double(double)>& h, const Envelope& envelope, double t_max, int samples) {
  const double step = std::log1p(t_max) / (samples - 1);
  for (int i = 0; i < samples; ++i) {
    const double s = std::expm1(step * i);
    const double v = h(s);
    const double cap = 1.001 * envelope.A * std::pow(1.0 + s, -envelope.p);
    if (!std::isfinite(v) || std::abs(v) > cap) {
      std::ostringstream os;
      os << "envelope violated at s = " << s << ": |h| = " << std::abs(v) << " > " << cap;
      throw SpecError(os.str());
    }
  }
}

InternalReduction reduce_external_to_internal(const PerturbationSpec& g, double xi) {
  if (!g.integral_converges()) {
    throw DomainError("int_0^inf g diverges for " + g.describe() + "; no internal reduction exists", 0.0);
  }
  InternalReduction r;
  r.xi = xi + g.total_integral();
  if (g.form() == PerturbationForm::Zero) {
    r.gamma = [](double) { return 0.0; };
  } else {
    r.gamma = [g](double t) { return g.gamma(t); };
  }
  return r;
}

}  // namespace decaylab
