#pragma once

#include <complex>
#include <map>
#include <mutex>
#include <stdexcept>
#include <utility>
#include <vector>

#include "cubeavg/phase.hpp"

namespace cubeavg {

inline std::size_t next_pow2(std::size_t n) {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

namespace detail {

// Shared half-length twiddle tables e^{-2 pi i j / n}, built once per size.
inline const std::vector<cplx>& fft_twiddles(std::size_t n) {
  static std::mutex mu;
  static std::map<std::size_t, std::vector<cplx>> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find(n);
  if (it != cache.end()) return it->second;
  std::vector<cplx> w(n / 2);
  for (std::size_t j = 0; j < n / 2; ++j) {
    double a = -kTwoPi * static_cast<double>(j) / static_cast<double>(n);
    w[j] = {std::cos(a), std::sin(a)};
  }
  return cache.emplace(n, std::move(w)).first->second;
}

}  // namespace detail

// In-place iterative radix-2 transform. sign = -1 gives the forward DFT
// X_j = sum_k x_k e^{-2 pi i jk/n}; sign = +1 the unscaled inverse.
inline void fft(std::vector<cplx>& a, int sign) {
  const std::size_t n = a.size();
  if (n == 0 || (n & (n - 1)) != 0)
    throw std::invalid_argument("fft: size must be a nonzero power of two");
  if (n == 1) return;
  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(a[i], a[j]);
  }
  const auto& w = detail::fft_twiddles(n);
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const std::size_t half = len / 2;
    const std::size_t step = n / len;
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t j = 0; j < half; ++j) {
        cplx tw = w[j * step];
        if (sign > 0) tw = std::conj(tw);
        cplx u = a[i + j];
        cplx v = a[i + j + half] * tw;
        a[i + j] = u + v;
        a[i + j + half] = u - v;
      }
    }
  }
}

// Linear convolution via zero-padded FFT; result has length |x| + |y| - 1.
inline std::vector<cplx> convolve(const std::vector<cplx>& x, const std::vector<cplx>& y) {
  if (x.empty() || y.empty()) throw std::invalid_argument("convolve: empty input");
  const std::size_t out = x.size() + y.size() - 1;
  const std::size_t n = next_pow2(out);
  std::vector<cplx> fx(n), fy(n);
  std::copy(x.begin(), x.end(), fx.begin());
  std::copy(y.begin(), y.end(), fy.begin());
  fft(fx, -1);
  fft(fy, -1);
  for (std::size_t i = 0; i < n; ++i) fx[i] *= fy[i];
  fft(fx, +1);
  const double inv = 1.0 / static_cast<double>(n);
  std::vector<cplx> r(out);
  for (std::size_t k = 0; k < out; ++k) r[k] = fx[k] * inv;
  return r;
}

// Evaluates S_j = sum_k s_k e^{+2 pi i k j / G} on the frequency grid
// t_j = j / G, where G = next power of two >= grid hint.
inline std::vector<cplx> spectrum_grid(const std::vector<cplx>& s, std::size_t grid_hint) {
  std::size_t g = next_pow2(std::max(grid_hint, s.size()));
  std::vector<cplx> a(g);
  std::copy(s.begin(), s.end(), a.begin());
  fft(a, +1);
  return a;
}

}  // namespace cubeavg
