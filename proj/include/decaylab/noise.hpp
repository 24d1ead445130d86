#pragma once

#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "decaylab/flow.hpp"
#include "decaylab/perturbation.hpp"

namespace decaylab {

enum class NoiseForm { Zero, PowerTail, Constant, Custom };
std::string to_string(NoiseForm form);

/// Diffusion coefficient sigma(t) of dX = -f(X) dt + sigma(t) dB.
class NoiseSpec {
 public:
  static NoiseSpec zero();
  /// sigma(t) = c (1 + t)^{-p}; square integrable iff p > 1/2.
  static NoiseSpec power_tail(double c, double p);
  static NoiseSpec constant(double c);
  /// Arbitrary sigma with |sigma(s)| <= A (1 + s)^{-p}, p > 1/2, checked by sampling.
  static NoiseSpec custom(std::function<double(double)> sigma, Envelope envelope, std::string label = "custom");

  double operator()(double t) const;
  double sigma(double t) const { return (*this)(t); }
  /// sigma in L^2(0, inf).
  bool in_L2() const noexcept;
  bool is_zero() const noexcept { return form_ == NoiseForm::Zero || c_ == 0.0; }

  NoiseForm form() const noexcept { return form_; }
  double c() const noexcept { return c_; }
  double p() const noexcept { return p_; }
  const Envelope& envelope() const noexcept { return envelope_; }
  std::string describe() const;

 private:
  NoiseSpec() = default;

  NoiseForm form_ = NoiseForm::Zero;
  double c_ = 0.0;
  double p_ = 0.0;
  Envelope envelope_{};
  std::string label_ = "zero";
  std::shared_ptr<const std::function<double(double)>> sigma_;
};

/// I(t) = int_t^inf sigma(s)^2 ds. Throws DomainError when sigma is not in L^2.
double sigma_tail_integral(const NoiseSpec& sigma, double t);

/// Smallest t with I(t) <= 1/e, from which the iterated logarithm in Sigma is defined.
double sigma_threshold_time(const NoiseSpec& sigma);

/// Sigma(t) = sqrt(2 I(t) log log(1 / I(t))). Throws DomainError naming T0 when t < T0
/// or when I vanishes identically.
double compute_Sigma(const NoiseSpec& sigma, double t);

enum class MuBucket { Zero, PositiveFinite, Infinite, NotApplicable };
std::string to_string(MuBucket b);

struct MuEstimate {
  MuBucket bucket = MuBucket::NotApplicable;
  /// Sigma / F^{-1} at the last sampled time.
  double value = 0.0;
  /// d log(Sigma / F^{-1}) / d log t over the window.
  double slope = 0.0;
  std::vector<double> t;
  std::vector<double> ratio;
  std::string note;
};

struct MuConfig {
  double t_lo = 1e4;
  double t_hi = 1e6;
  int points = 33;
  /// |slope| below this counts as a finite positive limit.
  double slope_tol = 0.05;
};

/// Trichotomy for mu = lim Sigma(t) / F^{-1}(t) from the log-log trend on [t_lo, t_hi].
MuEstimate estimate_mu(const NoiseSpec& sigma, const InverseFlow& inv, const MuConfig& config = {});

}  // namespace decaylab
