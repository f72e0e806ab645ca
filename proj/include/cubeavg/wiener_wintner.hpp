#pragma once

#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <vector>

#include "cubeavg/cesaro.hpp"
#include "cubeavg/dynamics.hpp"
#include "cubeavg/fft.hpp"
#include "cubeavg/parallel.hpp"
#include "cubeavg/rng.hpp"

namespace cubeavg {

// ---------------------------------------------------------------------------
// Twisted sums over explicit index ranges. The normalizer is independent of
// the range length on purpose: some of the inequality estimates divide a sum
// over 1..2(N-1) by N.

struct TwistedSumSpec {
  std::int64_t start = 0;
  std::int64_t end = 0;  // inclusive; start > end means an empty sum
  std::int64_t normalizer = 1;

  static TwistedSumSpec standard(std::int64_t N) { return {0, N - 1, N}; }
};

inline void validate_spec(const BoundedSequence& seq, const TwistedSumSpec& spec) {
  if (spec.normalizer < 1) throw std::invalid_argument("TwistedSumSpec: normalizer must be >= 1");
  if (spec.start > spec.end) return;  // empty range is allowed and sums to zero
  if (spec.start < 0 || static_cast<std::size_t>(spec.end) >= seq.size())
    throw std::invalid_argument("TwistedSumSpec: range outside sequence");
}

// (1/normalizer) sum_{k=start}^{end} seq[k] e^{2 pi i k t}
inline cplx twisted_sum(const BoundedSequence& seq, const TwistedSumSpec& spec, double t) {
  validate_spec(seq, spec);
  if (spec.start > spec.end) return 0.0;
  const double tr = fract(t);
  // Incremental rotation with periodic exact resync keeps the cost at a few
  // flops per term while the phase drift stays below ~1e-12.
  const cplx step = unit_phase(tr);
  cplx rot = unit_phase(mulmod1(spec.start, tr));
  cplx total = 0.0;
  std::size_t since_sync = 0;
  for (std::int64_t k = spec.start; k <= spec.end; ++k) {
    total += seq[static_cast<std::size_t>(k)] * rot;
    rot *= step;
    if (++since_sync == 1024) {
      rot = unit_phase(mulmod1(k + 1, tr));
      since_sync = 0;
    }
  }
  return total / static_cast<double>(spec.normalizer);
}

// ---------------------------------------------------------------------------
// Uniform Wiener-Wintner diagnostic: sup over frequencies of |twisted_sum|.

struct WWReport {
  double sup_value = 0.0;
  double argmax_t = 0.0;
  std::size_t grid_size = 0;
  bool refined = false;
};

struct WWSupOptions {
  std::size_t grid_factor = 8;   // oversampling of the FFT frequency grid
  double refine_tol = 1e-10;     // ternary-search width in t
};

// Evaluates |S(t)|^2 on a grid of grid_factor * (range length) frequencies
// with one zero-padded FFT, then refines the best cell by ternary search.
// |S(t)|^2 is unimodal within one oversampled cell for trigonometric
// polynomials of degree below the range length; that is a heuristic, and the
// tests fall back to a dense grid (factor 64) as the oracle.
inline WWReport ww_sup(const BoundedSequence& seq, const TwistedSumSpec& spec,
                       const WWSupOptions& opts = {}) {
  validate_spec(seq, spec);
  if (opts.grid_factor < 2) throw std::invalid_argument("ww_sup: grid_factor must be >= 2");
  if (!(opts.refine_tol > 0.0)) throw std::invalid_argument("ww_sup: refine_tol must be > 0");
  WWReport report;
  if (spec.start > spec.end) return report;

  const std::size_t L = static_cast<std::size_t>(spec.end - spec.start + 1);
  std::vector<cplx> window(seq.values().begin() + spec.start,
                           seq.values().begin() + spec.end + 1);
  std::vector<cplx> grid = spectrum_grid(window, opts.grid_factor * L);
  const std::size_t G = grid.size();
  const double inv_norm = 1.0 / static_cast<double>(spec.normalizer);

  std::size_t jbest = 0;
  double qbest = -1.0;
  for (std::size_t j = 0; j < G; ++j) {
    double q = std::norm(grid[j]);
    if (q > qbest) {
      qbest = q;
      jbest = j;
    }
  }
  double best_val = std::sqrt(qbest) * inv_norm;
  double best_t = static_cast<double>(jbest) / static_cast<double>(G);
  report.grid_size = G;

  const double cell = 1.0 / static_cast<double>(G);
  if (opts.refine_tol < 2.0 * cell) {
    double lo = best_t - cell, hi = best_t + cell;
    auto q = [&](double t) { return std::abs(twisted_sum(seq, spec, t)); };
    while (hi - lo > opts.refine_tol) {
      double m1 = lo + (hi - lo) / 3.0;
      double m2 = hi - (hi - lo) / 3.0;
      double q1 = q(m1), q2 = q(m2);
      if (q1 < q2) {
        lo = m1;
        if (q2 > best_val) {
          best_val = q2;
          best_t = m2;
        }
      } else {
        hi = m2;
        if (q1 > best_val) {
          best_val = q1;
          best_t = m1;
        }
      }
    }
    double mid = 0.5 * (lo + hi);
    double qm = q(mid);
    if (qm > best_val) {
      best_val = qm;
      best_t = mid;
    }
    report.refined = true;
  }
  report.sup_value = best_val;
  report.argmax_t = fract(best_t);
  return report;
}

// ---------------------------------------------------------------------------
// WW1 membership diagnostic. A_N(t) = (1/N) sum_{n<N} seq[n] e^{2 pi i n t};
// the defect is the largest dyadic increment |A_{2N}(t) - A_N(t)| over the
// frequency grid. Small defects are evidence of membership; a large defect
// certifies non-membership at the witnessed t.

struct WW1Report {
  double defect = 0.0;
  double witness_t = 0.0;
  std::int64_t witness_N = 0;  // the smaller N of the worst pair
};

inline WW1Report ww1_defect(const BoundedSequence& seq, const std::vector<double>& t_grid,
                            const std::vector<std::int64_t>& Ns) {
  if (t_grid.empty()) throw std::invalid_argument("ww1_defect: empty frequency grid");
  if (Ns.size() < 2) throw std::invalid_argument("ww1_defect: need at least two ladder entries");
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (Ns[i] < 1) throw std::invalid_argument("ww1_defect: ladder entries must be >= 1");
    if (i > 0 && Ns[i] != 2 * Ns[i - 1])
      throw std::invalid_argument("ww1_defect: ladder must be dyadic");
  }
  if (static_cast<std::size_t>(Ns.back()) > seq.size())
    throw std::invalid_argument("ww1_defect: sequence shorter than ladder top");

  WW1Report report;
  const std::size_t maxN = static_cast<std::size_t>(Ns.back());
  for (double t : t_grid) {
    const double tr = fract(t);
    const cplx step = unit_phase(tr);
    cplx rot = 1.0;
    cplx run = 0.0;
    std::size_t ladder_pos = 0;
    cplx prevA = 0.0;
    bool have_prev = false;
    std::size_t since_sync = 0;
    for (std::size_t n = 0; n < maxN; ++n) {
      run += seq[n] * rot;
      rot *= step;
      if (++since_sync == 1024) {
        rot = unit_phase(mulmod1(static_cast<std::uint64_t>(n + 1), tr));
        since_sync = 0;
      }
      if (ladder_pos < Ns.size() && static_cast<std::int64_t>(n + 1) == Ns[ladder_pos]) {
        cplx A = run / static_cast<double>(Ns[ladder_pos]);
        if (have_prev) {
          double d = std::abs(A - prevA);
          if (d > report.defect) {
            report.defect = d;
            report.witness_t = tr;
            report.witness_N = Ns[ladder_pos - 1];
          }
        }
        prevA = A;
        have_prev = true;
        ++ladder_pos;
      }
    }
  }
  return report;
}

// ---------------------------------------------------------------------------
// Eigenspace projection estimators.

// (1/N) sum_{n<N} f(T^n x) e^{-2 pi i n t}: the finite-N estimator of the
// projection of f onto the eigenspace of e^{2 pi i t}. At t = 0 this is the
// plain Birkhoff average.
inline cplx et_estimate(const TorusSystem& system, const Observable& f, const TorusPoint& x,
                        double t, std::size_t N) {
  BoundedSequence orbit = orbit_sequence(system, x, f, N);
  TwistedSumSpec spec = TwistedSumSpec::standard(static_cast<std::int64_t>(N));
  return twisted_sum(orbit, spec, -t);
}

// Monte Carlo estimate of the inner product int E_t(f) conj(E_s(f)) dmu.
inline cplx et_orthogonality(const TorusSystem& system, const Observable& f, double t, double s,
                             std::size_t samples, std::size_t N, std::uint64_t seed) {
  if (samples == 0 || N == 0)
    throw std::invalid_argument("et_orthogonality: samples and N must be >= 1");
  const std::size_t d = system.dimension();
  SplitMix64 base(seed);
  constexpr std::size_t kBlock = 64;
  const std::size_t nblocks = (samples + kBlock - 1) / kBlock;
  std::vector<cplx> partial(nblocks, cplx{0.0, 0.0});
  parallel_for_blocks(nblocks, [&](std::size_t blk) {
    cplx acc = 0.0;
    const std::size_t s0 = blk * kBlock, s1 = std::min(s0 + kBlock, samples);
    for (std::size_t si = s0; si < s1; ++si) {
      SplitMix64 g = base.fork(si);
      std::vector<double> coords(d);
      for (std::size_t i = 0; i < d; ++i) coords[i] = g.next_double();
      TorusPoint x(coords);
      BoundedSequence orbit = orbit_sequence(system, x, f, N);
      TwistedSumSpec sp = TwistedSumSpec::standard(static_cast<std::int64_t>(N));
      acc += twisted_sum(orbit, sp, -t) * std::conj(twisted_sum(orbit, sp, -s));
    }
    partial[blk] = acc;
  });
  cplx total = 0.0;
  for (const cplx& v : partial) total += v;
  return total / static_cast<double>(samples);
}

// Bessel-type check: the summed energy of the estimated projections at any
// distinct frequencies never exceeds the energy of the Kronecker projection,
// which is exact coefficient arithmetic for trigonometric polynomials.
struct BesselReport {
  double lhs = 0.0;  // sum_k estimated ||E_{t_k}(f)||^2
  double rhs = 0.0;  // exact ||E(f, K)||^2
};

inline BesselReport bessel_check(const TorusSystem& system, const Observable& f,
                                 const std::vector<double>& t_list, std::size_t samples,
                                 std::size_t N, std::uint64_t seed) {
  if (t_list.empty()) throw std::invalid_argument("bessel_check: empty frequency list");
  if (samples == 0 || N == 0)
    throw std::invalid_argument("bessel_check: samples and N must be >= 1");
  for (std::size_t i = 0; i < t_list.size(); ++i)
    for (std::size_t j = i + 1; j < t_list.size(); ++j)
      if (circle_dist(t_list[i], t_list[j]) < 1e-12)
        throw std::invalid_argument("bessel_check: frequencies must be distinct mod 1");

  const std::size_t d = system.dimension();
  SplitMix64 base(seed);
  constexpr std::size_t kBlock = 64;
  const std::size_t nblocks = (samples + kBlock - 1) / kBlock;
  std::vector<std::vector<double>> partial(nblocks, std::vector<double>(t_list.size(), 0.0));
  parallel_for_blocks(nblocks, [&](std::size_t blk) {
    auto& acc = partial[blk];
    const std::size_t s0 = blk * kBlock, s1 = std::min(s0 + kBlock, samples);
    for (std::size_t si = s0; si < s1; ++si) {
      SplitMix64 g = base.fork(si);
      std::vector<double> coords(d);
      for (std::size_t i = 0; i < d; ++i) coords[i] = g.next_double();
      TorusPoint x(coords);
      BoundedSequence orbit = orbit_sequence(system, x, f, N);
      TwistedSumSpec sp = TwistedSumSpec::standard(static_cast<std::int64_t>(N));
      for (std::size_t k = 0; k < t_list.size(); ++k)
        acc[k] += std::norm(twisted_sum(orbit, sp, -t_list[k]));
    }
  });
  BesselReport report;
  for (std::size_t k = 0; k < t_list.size(); ++k) {
    double total = 0.0;
    for (const auto& blk : partial) total += blk[k];
    report.lhs += total / static_cast<double>(samples);
  }
  report.rhs = kronecker_project(system, f).l2_norm_sq();
  return report;
}

// ---------------------------------------------------------------------------
// Correlation gamma(h) = (1/N) sum_{n<N} seq[n] conj(seq[n+h]).

inline cplx correlation(const BoundedSequence& seq, std::size_t h, std::size_t N) {
  if (N == 0) throw std::invalid_argument("correlation: N must be >= 1");
  if (seq.size() < N + h) throw std::invalid_argument("correlation: sequence too short");
  cplx total = 0.0;
  for (std::size_t n = 0; n < N; ++n) total += seq[n] * std::conj(seq[n + h]);
  return total / static_cast<double>(N);
}

// ---------------------------------------------------------------------------
// Affinity demonstration: the chirped block sequence v_n e^{2 pi i n^2 alpha}
// has vanishing twisted sups while the raw Cesaro means of v_n keep
// oscillating.

struct AffinityRow {
  std::int64_t N = 0;
  double twisted_sup = 0.0;
  double plain_mean = 0.0;
};

inline std::vector<AffinityRow> affinity_demo(double alpha, const std::vector<std::int64_t>& Ns,
                                              std::uint64_t growth = 4,
                                              const WWSupOptions& opts = {}) {
  validate_ladder(Ns);
  const std::size_t maxN = static_cast<std::size_t>(Ns.back());
  BoundedSequence vn = vn_sequence(maxN, growth);
  BoundedSequence chirped = pointwise_product(vn, weyl_sequence(alpha, maxN));
  std::vector<AffinityRow> rows;
  for (std::int64_t N : Ns) {
    AffinityRow row;
    row.N = N;
    row.twisted_sup = ww_sup(chirped, TwistedSumSpec::standard(N), opts).sup_value;
    double mean = 0.0;
    for (std::int64_t n = 0; n < N; ++n) mean += vn[static_cast<std::size_t>(n)].real();
    row.plain_mean = mean / static_cast<double>(N);
    rows.push_back(row);
  }
  return rows;
}

}  // namespace cubeavg
