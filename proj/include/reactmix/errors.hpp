#pragma once

#include <stdexcept>
#include <string>

namespace reactmix {

// Base class for all failures raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Malformed configuration, bad constructor arguments, schema violations.
struct ConfigError : Error {
  using Error::Error;
};

// A time step violated one of the stability bounds. The step is rejected;
// nothing is mutated.
struct CflError : Error {
  CflError(const std::string& which, double dt, double limit)
      : Error("time step rejected: " + which + " bound violated (dt=" +
              std::to_string(dt) + ", limit=" + std::to_string(limit) + ")"),
        bound(which), dt(dt), limit(limit) {}
  std::string bound;
  double dt = 0.0;
  double limit = 0.0;
};

// The solution left the domain of validity (non-finite values, negativity
// beyond tolerance). Carries the last time at which the state was good.
struct NumericsError : Error {
  NumericsError(const std::string& msg, double last_good_time)
      : Error(msg), last_good_time(last_good_time) {}
  double last_good_time = 0.0;
};

}  // namespace reactmix
