#ifndef OBLIVION_RATIONAL_HPP
#define OBLIVION_RATIONAL_HPP

#include <boost/multiprecision/cpp_int.hpp>

#include "oblivion/errors.hpp"

namespace oblivion {

// All coefficient algebra is done exactly; doubles appear only at the final
// weighted-sum stage of the attribution engine.
using BigInt = boost::multiprecision::cpp_int;
using Rational = boost::multiprecision::cpp_rational;

inline BigInt factorial(int n) {
  if (n < 0) throw DomainError("factorial of negative argument");
  BigInt r = 1;
  for (int i = 2; i <= n; ++i) r *= i;
  return r;
}

inline BigInt binomial(int n, int r) {
  if (r < 0 || r > n) return 0;
  BigInt num = 1, den = 1;
  for (int i = 0; i < r; ++i) {
    num *= (n - i);
    den *= (i + 1);
  }
  return num / den;
}

inline double to_double(const Rational& r) { return r.convert_to<double>(); }

}  // namespace oblivion

#endif
