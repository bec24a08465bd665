#pragma once

// Basic vocabulary shared by every module: fixed-size vectors, complex
// amplitudes, and the exception hierarchy.

#include <Eigen/Dense>

#include <cmath>
#include <complex>
#include <numbers>
#include <stdexcept>
#include <string>

namespace mott {

using Vec3 = Eigen::Vector3d;
using Complex = std::complex<double>;
using ComplexAmplitude = Complex;

inline constexpr double pi = std::numbers::pi;
inline constexpr double two_pi = 2.0 * std::numbers::pi;

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Invalid physical or experiment configuration. Carries the offending key
/// path when the error originates from a parsed document.
class ConfigError : public Error {
public:
  explicit ConfigError(const std::string& what, std::string key = {})
      : Error(key.empty() ? what : key + ": " + what), key_(std::move(key)) {}

  const std::string& key() const noexcept { return key_; }

private:
  std::string key_;
};

/// Argument outside the domain where a function is defined (e.g. the origin
/// for kernels with a 1/|x| singularity).
class DomainError : public Error {
public:
  using Error::Error;
};

/// Chart point outside the cap mu^2 + nu^2 <= sin^2(theta_bar).
class ChartViolation : public DomainError {
public:
  using DomainError::DomainError;
};

/// Iterative method failed to converge, or quadrature could not meet its
/// error budget.
class NumericalError : public Error {
public:
  using Error::Error;
};

inline bool is_finite(const Complex& z) {
  return std::isfinite(z.real()) && std::isfinite(z.imag());
}

inline Complex expi(double phase) { return {std::cos(phase), std::sin(phase)}; }

} // namespace mott
