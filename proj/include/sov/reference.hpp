#ifndef SOV_REFERENCE_HPP
#define SOV_REFERENCE_HPP

// Slow extended-precision references used by the self-test and the tests.

#include <boost/multiprecision/cpp_bin_float.hpp>

#include "sov/core.hpp"

namespace sov::reference {

using Big = boost::multiprecision::cpp_bin_float_50;

/// J_l(x) from the first `terms` terms of the power series in 50-digit
/// arithmetic. Cancellation costs about x / ln 10 digits, so x <= 50 keeps
/// roughly 28 correct digits.
inline double bessel_j_series(int l, double x, int terms = 200) {
  if (l < 0) throw OutOfRange("reference series needs l >= 0");
  const Big half = Big(x) / 2;
  const Big q = -half * half;
  Big term = 1;
  for (int k = 1; k <= l; ++k) term *= half / k;
  Big sum = term;
  for (int k = 1; k < terms; ++k) {
    term *= q / (Big(k) * Big(k + l));
    sum += term;
  }
  return static_cast<double>(sum);
}

}  // namespace sov::reference

#endif  // SOV_REFERENCE_HPP
