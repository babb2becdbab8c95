#ifndef SOV_CORE_HPP
#define SOV_CORE_HPP

#include <cmath>
#include <complex>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace sov {

using Complex = std::complex<double>;
using CVector = std::vector<Complex>;

inline constexpr double kPi = 3.14159265358979323846264338327950288;

// ---------------------------------------------------------------------------
// Errors. Every failure mode the library reports derives from sov::Error so
// the CLI can map categories onto exit codes.

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Input field has non-finite entries or does not conform to its grid.
class InvalidField : public Error {
 public:
  using Error::Error;
};

/// Argument outside the supported domain of an operation.
class OutOfRange : public Error {
 public:
  using Error::Error;
};

/// Ratio functional evaluated on the zero pair.
class UndefinedQuotient : public Error {
 public:
  using Error::Error;
};

/// Numerical procedure failed to converge or was stopped by a guard.
class NumericalFailure : public Error {
 public:
  using Error::Error;
};

class EstimationFailed : public NumericalFailure {
 public:
  EstimationFailed(const std::string& what, double best)
      : NumericalFailure(what), best_so_far(best) {}
  double best_so_far;
};

class StepControlError : public NumericalFailure {
 public:
  using NumericalFailure::NumericalFailure;
};

class BlowUpSuspected : public NumericalFailure {
 public:
  BlowUpSuspected(const std::string& what, double t, double hdot1)
      : NumericalFailure(what), time(t), hdot1_norm(hdot1) {}
  double time;
  double hdot1_norm;
};

/// Operation requires lambda_plus == lambda_minus == lambda_zero.
class UnequalLambda : public Error {
 public:
  using Error::Error;
};

/// The 2x2 symbol cannot be diagonalised at xi = 0.
class DegenerateFrequency : public Error {
 public:
  using Error::Error;
};

class GridTooSmall : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// ---------------------------------------------------------------------------

/// Physical coefficients shared by every module: SOC strength and the three
/// focusing coefficients.
struct Parameters {
  double nu = 1.0;
  double lambda_plus = 1.0;
  double lambda_minus = 1.0;
  double lambda_zero = 1.0;

  void validate() const {
    if (!(nu > 0.0) || !std::isfinite(nu)) throw OutOfRange("nu must be positive");
    if (!(lambda_plus > 0.0) || !(lambda_minus > 0.0) || !(lambda_zero > 0.0))
      throw OutOfRange("lambda coefficients must be positive (focusing)");
  }

  bool lambdas_equal() const {
    return lambda_plus == lambda_minus && lambda_minus == lambda_zero;
  }
};

/// Neumaier compensated accumulator. Summation order is whatever order add()
/// is called in; callers iterate row-major so totals are reproducible.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x))
      comp_ += (sum_ - t) + x;
    else
      comp_ += (x - t) + sum_;
    sum_ = t;
  }
  double value() const { return sum_ + comp_; }

 private:
  double sum_ = 0.0;
  double comp_ = 0.0;
};

inline bool all_finite(std::span<const Complex> v) {
  for (const auto& z : v)
    if (!std::isfinite(z.real()) || !std::isfinite(z.imag())) return false;
  return true;
}

/// Weighted inner product sum_j w_j conj(a_j) b_j with compensated summation.
inline Complex weighted_dot(std::span<const Complex> a, std::span<const Complex> b,
                            std::span<const double> w) {
  CompensatedSum re, im;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const Complex z = std::conj(a[j]) * b[j] * w[j];
    re.add(z.real());
    im.add(z.imag());
  }
  return {re.value(), im.value()};
}

/// Uniform-weight inner product: cell * sum conj(a) b.
inline Complex uniform_dot(std::span<const Complex> a, std::span<const Complex> b,
                           double cell) {
  CompensatedSum re, im;
  for (std::size_t j = 0; j < a.size(); ++j) {
    const Complex z = std::conj(a[j]) * b[j];
    re.add(z.real());
    im.add(z.imag());
  }
  return {re.value() * cell, im.value() * cell};
}

}  // namespace sov

#endif  // SOV_CORE_HPP
