#pragma once

#include <cmath>
#include <complex>
#include <cstdint>

namespace cubeavg {

using cplx = std::complex<double>;

inline constexpr double kTwoPi = 6.283185307179586476925286766559;

// Reduce x to [0, 1).
inline double fract(double x) {
  double r = x - std::floor(x);
  if (r >= 1.0) r -= 1.0;
  if (r < 0.0) r += 1.0;
  return r;
}

// k * theta mod 1 for integer k. Doubling and the conditional subtraction of 1
// are exact in binary floating point, so only the bit accumulations round;
// the result stays within a few ulp of the true multiple even for k ~ 2^62.
inline double mulmod1(std::uint64_t k, double theta) {
  double p = fract(theta);
  double r = 0.0;
  while (k != 0) {
    if (k & 1u) {
      r += p;
      if (r >= 1.0) r -= 1.0;
    }
    p += p;
    if (p >= 1.0) p -= 1.0;
    k >>= 1;
  }
  return r;
}

inline double mulmod1(std::int64_t k, double theta) {
  if (k >= 0) return mulmod1(static_cast<std::uint64_t>(k), theta);
  double r = mulmod1(static_cast<std::uint64_t>(-k), theta);
  return r == 0.0 ? 0.0 : 1.0 - r;
}

// e^{2 pi i x}
inline cplx unit_phase(double x) {
  double a = kTwoPi * fract(x);
  return {std::cos(a), std::sin(a)};
}

// Distance on the circle R/Z.
inline double circle_dist(double a, double b) {
  double d = std::fabs(fract(a) - fract(b));
  return d <= 0.5 ? d : 1.0 - d;
}

}  // namespace cubeavg
