#include "decaylab/noise.hpp"

#include <cmath>
#include <sstream>

#include "decaylab/errors.hpp"

namespace decaylab {

std::string to_string(NoiseForm form) {
  switch (form) {
    case NoiseForm::Zero: return "zero";
    case NoiseForm::PowerTail: return "power_tail";
    case NoiseForm::Constant: return "constant";
    case NoiseForm::Custom: return "custom";
  }
  return "custom";
}

std::string to_string(MuBucket b) {
  switch (b) {
    case MuBucket::Zero: return "zero";
    case MuBucket::PositiveFinite: return "positive_finite";
    case MuBucket::Infinite: return "infinite";
    case MuBucket::NotApplicable: return "not_applicable";
  }
  return "not_applicable";
}

NoiseSpec NoiseSpec::zero() { return NoiseSpec{}; }

NoiseSpec NoiseSpec::power_tail(double c, double p) {
  if (!std::isfinite(c) || !std::isfinite(p) || p < 0.0) throw SpecError("noise power_tail needs finite c, p >= 0");
  NoiseSpec s;
  s.form_ = NoiseForm::PowerTail;
  s.c_ = c;
  s.p_ = p;
  s.envelope_ = {std::abs(c), p};
  s.label_ = "power_tail";
  return s;
}

NoiseSpec NoiseSpec::constant(double c) {
  if (!std::isfinite(c)) throw SpecError("noise constant needs finite c");
  NoiseSpec s;
  s.form_ = NoiseForm::Constant;
  s.c_ = c;
  s.envelope_ = {std::abs(c), 0.0};
  s.label_ = "constant";
  return s;
}

NoiseSpec NoiseSpec::custom(std::function<double(double)> sigma, Envelope envelope, std::string label) {
  if (!sigma) throw SpecError("custom noise needs an evaluator");
  if (!(envelope.p > 0.5)) throw SpecError("custom noise envelope needs p > 1/2 for a tail integral");
  validate_envelope(sigma, envelope);
  NoiseSpec s;
  s.form_ = NoiseForm::Custom;
  s.c_ = envelope.A;
  s.p_ = envelope.p;
  s.envelope_ = envelope;
  s.label_ = std::move(label);
  s.sigma_ = std::make_shared<const std::function<double(double)>>(std::move(sigma));
  return s;
}

double NoiseSpec::operator()(double t) const {
  switch (form_) {
    case NoiseForm::Zero: return 0.0;
    case NoiseForm::PowerTail: return c_ * std::pow(1.0 + t, -p_);
    case NoiseForm::Constant: return c_;
    case NoiseForm::Custom: return (*sigma_)(t);
  }
  return 0.0;
}

bool NoiseSpec::in_L2() const noexcept {
  switch (form_) {
    case NoiseForm::Zero: return true;
    case NoiseForm::PowerTail: return p_ > 0.5 || c_ == 0.0;
    case NoiseForm::Constant: return c_ == 0.0;
    case NoiseForm::Custom: return true;
  }
  return false;
}

std::string NoiseSpec::describe() const {
  std::ostringstream os;
  switch (form_) {
    case NoiseForm::Zero: os << "0"; break;
    case NoiseForm::PowerTail: os << c_ << "*(1+t)^-" << p_; break;
    case NoiseForm::Constant: os << c_; break;
    case NoiseForm::Custom: os << "custom(" << label_ << ")"; break;
  }
  return os.str();
}

double sigma_tail_integral(const NoiseSpec& sigma, double t) {
  if (!(t >= 0.0)) throw DomainError("I(t) needs t >= 0", 0.0);
  if (!sigma.in_L2()) {
    throw DomainError("sigma = " + sigma.describe() + " is not square integrable; I(t) is undefined", 0.0);
  }
  if (sigma.is_zero()) return 0.0;
  switch (sigma.form()) {
    case NoiseForm::PowerTail: {
      const double e = 2.0 * sigma.p() - 1.0;
      return sigma.c() * sigma.c() * std::pow(1.0 + t, -e) / e;
    }
    case NoiseForm::Custom: {
      const Envelope sq{sigma.envelope().A * sigma.envelope().A, 2.0 * sigma.envelope().p};
      return tail_integral_numeric([&sigma](double s) { const double v = sigma(s); return v * v; }, sq, t);
    }
    default: return 0.0;
  }
}

double sigma_threshold_time(const NoiseSpec& sigma) {
  const double target = std::exp(-1.0);
  if (!sigma.in_L2() || sigma.is_zero()) {
    throw DomainError("Sigma is undefined for sigma = " + sigma.describe(), 0.0);
  }
  if (sigma_tail_integral(sigma, 0.0) <= target) return 0.0;
  if (sigma.form() == NoiseForm::PowerTail) {
    const double e = 2.0 * sigma.p() - 1.0;
    return std::pow(sigma.c() * sigma.c() / (e * target), 1.0 / e) - 1.0;
  }
  double lo = 0.0, hi = 1.0;
  while (sigma_tail_integral(sigma, hi) > target) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw DomainError("I(t) never falls below 1/e", hi);
  }
  for (int i = 0; i < 200 && hi - lo > 1e-14 * hi; ++i) {
    const double mid = 0.5 * (lo + hi);
    (sigma_tail_integral(sigma, mid) > target ? lo : hi) = mid;
  }
  return hi;
}

double compute_Sigma(const NoiseSpec& sigma, double t) {
  const double t0 = sigma_threshold_time(sigma);
  if (t < t0) {
    std::ostringstream os;
    os << "Sigma(" << t << ") undefined: needs t >= T0 = " << t0;
    throw DomainError(os.str(), t0);
  }
  const double I = sigma_tail_integral(sigma, t);
  if (!(I > 0.0)) throw DomainError("Sigma undefined where I(t) = 0", t0);
  const double ll = std::log(std::log(1.0 / I));
  return std::sqrt(2.0 * I * std::max(ll, 0.0));
}

MuEstimate estimate_mu(const NoiseSpec& sigma, const InverseFlow& inv, const MuConfig& config) {
  MuEstimate est;
  if (sigma.is_zero()) {
    est.note = "deterministic case (sigma = 0)";
    return est;
  }
  if (!sigma.in_L2()) {
    est.note = "sigma not in L^2";
    return est;
  }
  const double t0 = sigma_threshold_time(sigma);
  est.t = log_spaced(std::max(config.t_lo, t0 + 1.0), std::max(config.t_hi, t0 + 10.0), config.points);
  std::vector<double> lt, lr;
  for (double t : est.t) {
    const double r = compute_Sigma(sigma, t) / inv(t);
    est.ratio.push_back(r);
    if (r > 0.0) {
      lt.push_back(std::log(t));
      lr.push_back(std::log(r));
    }
  }
  est.value = est.ratio.back();
  if (lt.size() >= 2) {
    double mx = 0.0, my = 0.0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      mx += lt[i];
      my += lr[i];
    }
    mx /= static_cast<double>(lt.size());
    my /= static_cast<double>(lt.size());
    double sxy = 0.0, sxx = 0.0;
    for (std::size_t i = 0; i < lt.size(); ++i) {
      sxy += (lt[i] - mx) * (lr[i] - my);
      sxx += (lt[i] - mx) * (lt[i] - mx);
    }
    est.slope = sxy / sxx;
  }
  if (est.slope < -config.slope_tol) {
    est.bucket = MuBucket::Zero;
  } else if (est.slope > config.slope_tol) {
    est.bucket = MuBucket::Infinite;
  } else {
    est.bucket = MuBucket::PositiveFinite;
  }
  return est;
}

}  // namespace decaylab
