#pragma once

#include <stdexcept>
#include <string>

namespace decaylab {

/// Argument outside the region where a quantity is defined or computable.
/// `boundary` carries the nearest supported value (smallest x, threshold T0, ...).
class DomainError : public std::domain_error {
 public:
  DomainError(const std::string& what, double boundary)
      : std::domain_error(what), boundary_(boundary) {}
  explicit DomainError(const std::string& what) : DomainError(what, 0.0) {}

  double boundary() const noexcept { return boundary_; }

 private:
  double boundary_;
};

/// A declared specification violates its own invariants (envelope, monotonicity, ...).
class SpecError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Time integration could not proceed. Holds the last accepted state.
class IntegrationError : public std::runtime_error {
 public:
  IntegrationError(const std::string& what, double last_time, double last_state)
      : std::runtime_error(what), last_time_(last_time), last_state_(last_state) {}

  double last_time() const noexcept { return last_time_; }
  double last_state() const noexcept { return last_state_; }

 private:
  double last_time_;
  double last_state_;
};

}  // namespace decaylab
