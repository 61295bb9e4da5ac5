#pragma once

#include <stdexcept>
#include <string>

namespace ddfc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
 public:
  using Error::Error;
};

// lti
class NoRelativeDegree : public Error {
 public:
  using Error::Error;
};
class NotPositiveDefinite : public Error {
 public:
  using Error::Error;
};
class DegenerateCompletion : public Error {
 public:
  using Error::Error;
};

// funnel
class AlphaDomain : public Error {
 public:
  using Error::Error;
};
class InitialConditionViolated : public Error {
 public:
  using Error::Error;
};
class NotHurwitz : public Error {
 public:
  using Error::Error;
};
class DivisionByZero : public Error {
 public:
  using Error::Error;
};

// datadrive / mpc
class TooShort : public Error {
 public:
  using Error::Error;
};
class InsufficientPE : public Error {
 public:
  using Error::Error;
};
class SingularKKT : public Error {
 public:
  using Error::Error;
};

// supervisor
class FunnelViolation : public Error {
 public:
  FunnelViolation(const std::string& what, double time) : Error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// configuration
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace ddfc
