#pragma once

#include <stdexcept>
#include <string>

namespace qbbgky {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad configuration or API misuse detectable before any numerics run:
// schema violations, out-of-range orders, mismatched states.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// Physically inconsistent model input (asymmetric kernel, negative mass,
// mode index outside the grid).
class InvalidModelError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Hamiltonian pieces above the supported polynomial degree.
class UnsupportedInteractionError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// A tensor order was requested that the state does not store, or an
// operation was applied at an order it does not cover.
class StateOrderError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Runtime numerical failure (eigensolver breakdown, non-finite values).
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Integration produced non-finite tensor entries.
class DivergenceError : public NumericalError {
 public:
  DivergenceError(double time, int m, int n)
      : NumericalError("divergence at t=" + std::to_string(time) + " in Gamma^(" +
                       std::to_string(m) + "," + std::to_string(n) + ")"),
        time_(time),
        m_(m),
        n_(n) {}

  double time() const { return time_; }
  int order_m() const { return m_; }
  int order_n() const { return n_; }

 private:
  double time_;
  int m_, n_;
};

// The truncated Fock space is too small for the requested state or run.
class CutoffError : public Error {
 public:
  using Error::Error;
};

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitConfig = 2;
inline constexpr int kExitNumerical = 3;
inline constexpr int kExitCutoff = 4;

}  // namespace qbbgky
