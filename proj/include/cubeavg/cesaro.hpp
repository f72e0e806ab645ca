#pragma once

#include <array>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubeavg/dynamics.hpp"
#include "cubeavg/fft.hpp"
#include "cubeavg/parallel.hpp"
#include "cubeavg/rng.hpp"

namespace cubeavg {

// ---------------------------------------------------------------------------
// Index patterns: the nonempty subsets of {n, m, p}, read as the sum of the
// selected indices. These are the seven exponents appearing in the cube
// averages.

enum class IndexPattern : unsigned {
  N = 1,
  M = 2,
  NM = 3,
  P = 4,
  NP = 5,
  MP = 6,
  NMP = 7,
};

inline unsigned pattern_bits(IndexPattern p) { return static_cast<unsigned>(p); }

inline std::size_t pattern_arity(IndexPattern p) {
  unsigned b = pattern_bits(p);
  return ((b & 1u) != 0) + ((b & 2u) != 0) + ((b & 4u) != 0);
}

inline std::size_t pattern_value(IndexPattern pat, std::size_t n, std::size_t m, std::size_t p) {
  unsigned b = pattern_bits(pat);
  return ((b & 1u) ? n : 0) + ((b & 2u) ? m : 0) + ((b & 4u) ? p : 0);
}

// Largest index the pattern touches when each of n, m, p runs over 0..N-1.
inline std::size_t pattern_max_index(IndexPattern pat, std::size_t N) {
  return pattern_arity(pat) * (N - 1);
}

inline std::string pattern_name(IndexPattern pat) {
  switch (pat) {
    case IndexPattern::N: return "n";
    case IndexPattern::M: return "m";
    case IndexPattern::P: return "p";
    case IndexPattern::NM: return "n+m";
    case IndexPattern::NP: return "n+p";
    case IndexPattern::MP: return "m+p";
    case IndexPattern::NMP: return "n+m+p";
  }
  throw std::invalid_argument("pattern_name: bad pattern");
}

inline IndexPattern pattern_from_name(const std::string& s) {
  if (s == "n") return IndexPattern::N;
  if (s == "m") return IndexPattern::M;
  if (s == "p") return IndexPattern::P;
  if (s == "n+m" || s == "m+n") return IndexPattern::NM;
  if (s == "n+p" || s == "p+n") return IndexPattern::NP;
  if (s == "m+p" || s == "p+m") return IndexPattern::MP;
  if (s == "n+m+p") return IndexPattern::NMP;
  throw std::invalid_argument("pattern_from_name: unknown pattern '" + s + "'");
}

// ---------------------------------------------------------------------------
// CubeSpec: the slots of a triple-index average. Each slot contributes
// seq[pattern(n,m,p)] * e^{2 pi i pattern(n,m,p) * twist}.

struct CubeSlot {
  BoundedSequence sequence;
  IndexPattern pattern;
  double twist = 0.0;
};

struct CubeSpec {
  std::vector<CubeSlot> slots;
};

struct CesaroSeries {
  std::vector<std::int64_t> Ns;
  std::vector<cplx> values;
};

// ---------------------------------------------------------------------------
// Two-index average (1/N^2) sum_{n,m=0}^{N-1} a_n b_m c_{n+m}.

enum class AverageMethod { Naive, Convolution };

inline cplx cube_average_2(const BoundedSequence& a, const BoundedSequence& b,
                           const BoundedSequence& c, std::size_t N,
                           AverageMethod method = AverageMethod::Convolution) {
  if (N == 0) throw std::invalid_argument("cube_average_2: N must be >= 1");
  if (a.size() < N || b.size() < N)
    throw std::invalid_argument("cube_average_2: a and b need length >= N");
  if (c.size() < 2 * N - 1)
    throw std::invalid_argument("cube_average_2: c needs length >= 2N-1");
  const double inv = 1.0 / (static_cast<double>(N) * static_cast<double>(N));
  if (method == AverageMethod::Naive) {
    cplx total = 0.0;
    for (std::size_t n = 0; n < N; ++n) {
      cplx row = 0.0;
      for (std::size_t m = 0; m < N; ++m) row += b[m] * c[n + m];
      total += a[n] * row;
    }
    return total * inv;
  }
  std::vector<cplx> av(a.values().begin(), a.values().begin() + N);
  std::vector<cplx> bv(b.values().begin(), b.values().begin() + N);
  std::vector<cplx> w = convolve(av, bv);
  cplx total = 0.0;
  for (std::size_t k = 0; k < 2 * N - 1; ++k) total += w[k] * c[k];
  return total * inv;
}

// ---------------------------------------------------------------------------
// Triple-index average (1/N^3) sum_{n,m,p=0}^{N-1} prod_slots seq[pat] e^{2 pi i pat t}.
//
// Cache-blocked loops; the n range is cut into fixed blocks whose partial
// sums are reduced in block order, so the result is bit-identical for any
// worker count.

inline cplx cube_average_3(const CubeSpec& spec, std::size_t N) {
  if (N == 0) throw std::invalid_argument("cube_average_3: N must be >= 1");
  if (spec.slots.empty() || spec.slots.size() > 7)
    throw std::invalid_argument("cube_average_3: need between 1 and 7 slots");
  const std::size_t nslots = spec.slots.size();

  // Twisted per-slot tables g[v] = seq[v] e^{2 pi i v twist}; memory O(N).
  std::vector<std::vector<cplx>> tbl(nslots);
  std::array<std::size_t, 7> bits{};
  for (std::size_t s = 0; s < nslots; ++s) {
    const CubeSlot& slot = spec.slots[s];
    const std::size_t need = pattern_max_index(slot.pattern, N) + 1;
    if (slot.sequence.size() < need)
      throw std::invalid_argument("cube_average_3: slot sequence too short for pattern " +
                                  pattern_name(slot.pattern));
    tbl[s].resize(need);
    for (std::size_t v = 0; v < need; ++v) {
      cplx x = slot.sequence[v];
      if (slot.twist != 0.0)
        x *= unit_phase(mulmod1(static_cast<std::uint64_t>(v), slot.twist));
      tbl[s][v] = x;
    }
    bits[s] = pattern_bits(slot.pattern);
  }

  constexpr std::size_t kBlock = 64;
  const std::size_t nblocks = (N + kBlock - 1) / kBlock;
  std::vector<cplx> partial(nblocks, cplx{0.0, 0.0});

  parallel_for_blocks(nblocks, [&](std::size_t nb) {
    const std::size_t n0 = nb * kBlock, n1 = std::min(n0 + kBlock, N);
    cplx acc = 0.0;
    for (std::size_t pb = 0; pb < N; pb += kBlock) {
      const std::size_t p1 = std::min(pb + kBlock, N);
      for (std::size_t mb = 0; mb < N; mb += kBlock) {
        const std::size_t m1 = std::min(mb + kBlock, N);
        for (std::size_t n = n0; n < n1; ++n) {
          for (std::size_t p = pb; p < p1; ++p) {
            cplx row = 0.0;
            for (std::size_t m = mb; m < m1; ++m) {
              cplx prod = 1.0;
              for (std::size_t s = 0; s < nslots; ++s) {
                const std::size_t v = ((bits[s] & 1u) ? n : 0) + ((bits[s] & 2u) ? m : 0) +
                                      ((bits[s] & 4u) ? p : 0);
                prod *= tbl[s][v];
              }
              row += prod;
            }
            acc += row;
          }
        }
      }
    }
    partial[nb] = acc;
  });

  cplx total = 0.0;
  for (const cplx& v : partial) total += v;
  const double dN = static_cast<double>(N);
  return total / (dN * dN * dN);
}

// ---------------------------------------------------------------------------
// Six-slot orbit series: the six face patterns n, m, p, n+m, n+p, m+p
// evaluated on a ladder of N values.

inline CesaroSeries theorem1_series(const std::vector<TorusSystem>& systems,
                                    const std::vector<Observable>& fs, const TorusPoint& x,
                                    const std::vector<std::int64_t>& Ns) {
  if (systems.size() != 6 || fs.size() != 6)
    throw std::invalid_argument("theorem1_series: needs six systems and six observables");
  validate_ladder(Ns);
  static constexpr std::array<IndexPattern, 6> pats = {IndexPattern::N,  IndexPattern::M,
                                                       IndexPattern::P,  IndexPattern::NM,
                                                       IndexPattern::NP, IndexPattern::MP};
  const std::size_t maxN = static_cast<std::size_t>(Ns.back());
  CubeSpec spec;
  for (std::size_t i = 0; i < 6; ++i) {
    const std::size_t len = pattern_max_index(pats[i], maxN) + 1;
    spec.slots.push_back(CubeSlot{orbit_sequence(systems[i], x, fs[i], len), pats[i], 0.0});
  }
  CesaroSeries series;
  series.Ns = Ns;
  for (std::int64_t N : Ns)
    series.values.push_back(cube_average_3(spec, static_cast<std::size_t>(N)));
  return series;
}

// ---------------------------------------------------------------------------
// Weighted series M_N = (1/N^2) sum a_n b_m f(T^{n+m} x).

inline CesaroSeries weighted_series(const BoundedSequence& a, const BoundedSequence& b,
                                    const TorusSystem& system, const Observable& f,
                                    const TorusPoint& x, const std::vector<std::int64_t>& Ns,
                                    AverageMethod method = AverageMethod::Convolution) {
  validate_ladder(Ns);
  const std::size_t maxN = static_cast<std::size_t>(Ns.back());
  if (a.size() < maxN || b.size() < maxN)
    throw std::invalid_argument("weighted_series: weight sequences too short");
  BoundedSequence orbit = orbit_sequence(system, x, f, 2 * maxN - 1);
  CesaroSeries series;
  series.Ns = Ns;
  for (std::int64_t N : Ns)
    series.values.push_back(cube_average_2(a, b, orbit, static_cast<std::size_t>(N), method));
  return series;
}

// ---------------------------------------------------------------------------
// Monte Carlo estimate of || M_N(.) - M_M(.) ||_{L2(mu)} for the weighted
// average, sampling the start point uniformly. Per-sample streams are forked
// from the seed by sample index and partial sums are reduced in block order,
// so the estimate is reproducible for any worker count.

inline double l2_cauchy_estimate(const TorusSystem& system, const Observable& f,
                                 const BoundedSequence& a, const BoundedSequence& b,
                                 std::size_t N, std::size_t M, std::size_t samples,
                                 std::uint64_t seed) {
  if (N == 0 || M == 0) throw std::invalid_argument("l2_cauchy_estimate: N, M must be >= 1");
  if (samples == 0) throw std::invalid_argument("l2_cauchy_estimate: samples must be >= 1");
  const std::size_t big = std::max(N, M);
  if (a.size() < big || b.size() < big)
    throw std::invalid_argument("l2_cauchy_estimate: weight sequences too short");
  if (N == M) return 0.0;
  const std::size_t d = system.dimension();
  const std::size_t orbit_len = 2 * big - 1;
  SplitMix64 base(seed);

  constexpr std::size_t kBlock = 64;
  const std::size_t nblocks = (samples + kBlock - 1) / kBlock;
  std::vector<double> partial(nblocks, 0.0);
  parallel_for_blocks(nblocks, [&](std::size_t blk) {
    double acc = 0.0;
    const std::size_t s0 = blk * kBlock, s1 = std::min(s0 + kBlock, samples);
    for (std::size_t si = s0; si < s1; ++si) {
      SplitMix64 g = base.fork(si);
      std::vector<double> coords(d);
      for (std::size_t i = 0; i < d; ++i) coords[i] = g.next_double();
      TorusPoint x(coords);
      BoundedSequence orbit = orbit_sequence(system, x, f, orbit_len);
      cplx vN = cube_average_2(a, b, orbit, N, AverageMethod::Convolution);
      cplx vM = cube_average_2(a, b, orbit, M, AverageMethod::Convolution);
      acc += std::norm(vN - vM);
    }
    partial[blk] = acc;
  });
  double total = 0.0;
  for (double v : partial) total += v;
  return std::sqrt(total / static_cast<double>(samples));
}

}  // namespace cubeavg
