#pragma once

#include <array>
#include <cstdint>
#include <cstdio>
#include <stdexcept>
#include <vector>

#include "cubeavg/cesaro.hpp"
#include "cubeavg/wiener_wintner.hpp"

namespace cubeavg {

// Executable instances of the two divergence constructions on explicit torus
// systems. Both route through the generic average kernels with no algebraic
// shortcut, so the closed-form right sides double as kernel validation.

namespace detail {

// The collapse identities hold for any angle, but a nearly rational alpha
// degrades the ergodic controls and the chirp decorrelation at desk scale.
inline bool alpha_nearly_rational(double alpha) {
  for (int q = 1; q <= 64; ++q) {
    double scaled = alpha * q;
    if (std::fabs(scaled - std::llround(scaled)) < 1e-6 * q) return true;
  }
  return false;
}

inline void warn_if_nearly_rational(double alpha) {
  if (alpha_nearly_rational(alpha))
    std::fprintf(stderr,
                 "warning: alpha=%.12g is within 1e-6 of a rational p/q with q <= 64; "
                 "controls and chirp decorrelation will be degenerate\n",
                 alpha);
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Nonergodic collapse: T = S x S on T^4 with f = e^{-2 pi i x2} e^{2 pi i x4}
// and weights a_n = v_n e^{-2 pi i n (x3 - x1)}, b_m = e^{-2 pi i m (x3 - x1)}.
// The weighted average collapses exactly to (1/N sum v_n) e^{2 pi i (x4 - x2)}.

struct Prop7Instance {
  double alpha = 0.0;
  TorusPoint x;            // dimension 4
  BoundedSequence vn;      // +-1 block sequence, length max_n
  BoundedSequence a;       // v_n times the kill phase, length max_n
  BoundedSequence b;       // pure kill phase, length max_n
  TorusSystem system;      // S x S
  Observable f;
  std::int64_t max_n = 0;
};

inline Prop7Instance make_prop7_instance(double alpha, const TorusPoint& x, std::int64_t max_n,
                                         std::uint64_t growth = 4) {
  if (x.dimension() != 4) throw std::invalid_argument("prop7: point must lie on T^4");
  if (max_n < 1) throw std::invalid_argument("prop7: max_n must be >= 1");
  detail::warn_if_nearly_rational(alpha);
  const double delta = fract(x[2] - x[0]);
  BoundedSequence vn = vn_sequence(static_cast<std::size_t>(max_n), growth);
  BoundedSequence a = modulate(vn, -delta);
  BoundedSequence b = modulate(BoundedSequence::ones(static_cast<std::size_t>(max_n)), -delta);
  TorusSystem skew = TorusSystem::skew_product(alpha);
  TorusSystem system = TorusSystem::product({skew, skew});
  Observable f(4, {ObservableTerm{{0, -1, 0, 1}, cplx{1.0, 0.0}}});
  return Prop7Instance{alpha, x,  std::move(vn), std::move(a), std::move(b),
                       std::move(system), std::move(f), max_n};
}

struct CollapseCheck {
  cplx lhs;
  cplx rhs;
  double diff = 0.0;
};

inline CollapseCheck prop7_check(const Prop7Instance& inst, std::size_t N,
                                 AverageMethod method = AverageMethod::Convolution) {
  if (N == 0) throw std::invalid_argument("prop7_check: N must be >= 1");
  if (static_cast<std::int64_t>(N) > inst.max_n)
    throw std::invalid_argument("prop7_check: N exceeds instance capacity");
  BoundedSequence orbit = orbit_sequence(inst.system, inst.x, inst.f, 2 * N - 1);
  CollapseCheck out;
  out.lhs = cube_average_2(inst.a, inst.b, orbit, N, method);
  cplx mean = 0.0;
  for (std::size_t n = 0; n < N; ++n) mean += inst.vn[n];
  mean /= static_cast<double>(N);
  out.rhs = mean * unit_phase(inst.x[3] - inst.x[1]);
  out.diff = std::abs(out.lhs - out.rhs);
  return out;
}

// Oscillation of Re(lhs_N e^{-2 pi i (x4-x2)}) over the ladder. With the
// nonergodic instance this tracks the prefix means of v_n and stays large;
// the ergodic control (a single skew factor with a fiber character) decays.
inline double prop7_divergence(const Prop7Instance& inst, const std::vector<std::int64_t>& Ns,
                               bool ergodic_control = false) {
  if (Ns.size() < 2) throw std::invalid_argument("prop7_divergence: need at least two N values");
  for (std::int64_t N : Ns)
    if (N < 1 || N > inst.max_n)
      throw std::invalid_argument("prop7_divergence: N outside instance capacity");
  std::int64_t maxN = 0;
  for (std::int64_t N : Ns) maxN = std::max(maxN, N);

  TorusSystem control = TorusSystem::skew_product(inst.alpha);
  TorusPoint control_x({inst.x[0], inst.x[1]});
  Observable control_f(2, {ObservableTerm{{0, 1}, cplx{1.0, 0.0}}});

  BoundedSequence orbit =
      ergodic_control
          ? orbit_sequence(control, control_x, control_f, 2 * static_cast<std::size_t>(maxN) - 1)
          : orbit_sequence(inst.system, inst.x, inst.f, 2 * static_cast<std::size_t>(maxN) - 1);

  const cplx ref = std::conj(unit_phase(inst.x[3] - inst.x[1]));
  double lo = 0.0, hi = 0.0;
  bool first = true;
  for (std::int64_t N : Ns) {
    cplx v = cube_average_2(inst.a, inst.b, orbit, static_cast<std::size_t>(N),
                            AverageMethod::Convolution);
    double r = (v * ref).real();
    if (first) {
      lo = hi = r;
      first = false;
    } else {
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  }
  return hi - lo;
}

// ---------------------------------------------------------------------------
// Seven-term collapse on an ergodic skew product: six chirp weights built
// from (n+m+p)^2 = (n+m)^2 + (n+p)^2 + (m+p)^2 - n^2 - m^2 - p^2 make the
// triple average collapse to (1/N sum v_n) e^{4 pi i y} even though every
// weight has convergent twisted means.

struct Prop9Instance {
  double alpha = 0.0;
  TorusPoint point;  // (x, y) on T^2
  std::uint64_t growth = 4;
  std::int64_t max_n = 0;
  BoundedSequence vn;
  std::array<BoundedSequence, 6> weights;  // slot order: p, n, p+n, m, n+m, p+m
  TorusSystem system;
  Observable f;  // e^{4 pi i y}
};

inline Prop9Instance make_prop9_instance(double alpha, const TorusPoint& point,
                                         std::int64_t max_n, std::uint64_t growth = 4) {
  if (point.dimension() != 2) throw std::invalid_argument("prop9: point must lie on T^2");
  if (max_n < 1) throw std::invalid_argument("prop9: max_n must be >= 1");
  detail::warn_if_nearly_rational(alpha);
  const std::size_t single = static_cast<std::size_t>(max_n);
  const std::size_t paired = 2 * single - 1;
  const double lin = -(point[0] - alpha / 2.0);

  BoundedSequence vn = vn_sequence(single, growth);
  BoundedSequence chirp1 = weyl_sequence(alpha, single);
  BoundedSequence chirp2 = weyl_sequence(alpha, paired);
  BoundedSequence conj_lin = modulate(conjugate(chirp2), lin);

  std::array<BoundedSequence, 6> w = {
      chirp1,                          // a1 at p
      pointwise_product(vn, chirp1),   // a2 at n
      conj_lin,                        // a3 at p+n
      chirp1,                          // a4 at m
      conj_lin,                        // a5 at n+m
      conj_lin,                        // a6 at p+m
  };
  return Prop9Instance{alpha,
                       point,
                       growth,
                       max_n,
                       std::move(vn),
                       std::move(w),
                       TorusSystem::skew_product(alpha),
                       Observable(2, {ObservableTerm{{0, 2}, cplx{1.0, 0.0}}})};
}

inline CollapseCheck prop9_check(const Prop9Instance& inst, std::size_t N,
                                 std::size_t budget = 256) {
  if (N == 0) throw std::invalid_argument("prop9_check: N must be >= 1");
  if (N > budget) throw std::invalid_argument("prop9_check: N exceeds the triple-sum budget");
  if (static_cast<std::int64_t>(N) > inst.max_n)
    throw std::invalid_argument("prop9_check: N exceeds instance capacity");
  static constexpr std::array<IndexPattern, 6> pats = {IndexPattern::P,  IndexPattern::N,
                                                       IndexPattern::NP, IndexPattern::M,
                                                       IndexPattern::NM, IndexPattern::MP};
  CubeSpec spec;
  for (std::size_t s = 0; s < 6; ++s)
    spec.slots.push_back(CubeSlot{inst.weights[s], pats[s], 0.0});
  spec.slots.push_back(
      CubeSlot{orbit_sequence(inst.system, inst.point, inst.f, 3 * N - 2), IndexPattern::NMP, 0.0});

  CollapseCheck out;
  out.lhs = cube_average_3(spec, N);
  cplx mean = 0.0;
  for (std::size_t n = 0; n < N; ++n) mean += inst.vn[n];
  mean /= static_cast<double>(N);
  out.rhs = mean * unit_phase(2.0 * inst.point[1]);
  out.diff = std::abs(out.lhs - out.rhs);
  return out;
}

inline bool quadratic_cube_identity(std::int64_t n, std::int64_t m, std::int64_t p) {
  auto sq = [](std::int64_t v) { return v * v; };
  return sq(n + m + p) == sq(n + m) + sq(n + p) + sq(m + p) - sq(n) - sq(m) - sq(p);
}

// ---------------------------------------------------------------------------
// Uniform Wiener-Wintner failure witness: on the nonergodic product the orbit
// of f is a pure character in n, so the twisted sup stays at 1 for every N;
// the ergodic control decays.

inline WWReport uniform_ww_failure(const TorusPoint& x, double alpha, std::size_t N,
                                   const WWSupOptions& opts = {}) {
  if (x.dimension() != 4) throw std::invalid_argument("uniform_ww_failure: point must lie on T^4");
  if (N == 0) throw std::invalid_argument("uniform_ww_failure: N must be >= 1");
  TorusSystem skew = TorusSystem::skew_product(alpha);
  TorusSystem system = TorusSystem::product({skew, skew});
  Observable f(4, {ObservableTerm{{0, -1, 0, 1}, cplx{1.0, 0.0}}});
  BoundedSequence orbit = orbit_sequence(system, x, f, N);
  return ww_sup(orbit, TwistedSumSpec::standard(static_cast<std::int64_t>(N)), opts);
}

inline WWReport uniform_ww_ergodic_control(const TorusPoint& xy, double alpha, std::size_t N,
                                           const WWSupOptions& opts = {}) {
  if (xy.dimension() != 2)
    throw std::invalid_argument("uniform_ww_ergodic_control: point must lie on T^2");
  if (N == 0) throw std::invalid_argument("uniform_ww_ergodic_control: N must be >= 1");
  TorusSystem skew = TorusSystem::skew_product(alpha);
  Observable f(2, {ObservableTerm{{0, 1}, cplx{1.0, 0.0}}});
  BoundedSequence orbit = orbit_sequence(skew, xy, f, N);
  return ww_sup(orbit, TwistedSumSpec::standard(static_cast<std::int64_t>(N)), opts);
}

}  // namespace cubeavg
