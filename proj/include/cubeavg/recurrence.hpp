#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubeavg/dynamics.hpp"
#include "cubeavg/parallel.hpp"
#include "cubeavg/rng.hpp"

namespace cubeavg {

// ---------------------------------------------------------------------------
// BoxSet: a finite union of axis-aligned boxes in [0,1)^d, stored disjoint.
// Wrap-around input intervals are split on insertion, so every stored
// interval satisfies 0 <= lo < hi <= 1.

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
  double length() const { return hi - lo; }
  bool contains(double x) const { return x >= lo && x < hi; }
};

struct Box {
  std::vector<Interval> axes;
  double volume() const {
    double v = 1.0;
    for (const Interval& iv : axes) v *= iv.length();
    return v;
  }
};

class BoxSet {
 public:
  explicit BoxSet(std::size_t dimension) : dimension_(dimension) {
    if (dimension_ == 0) throw std::invalid_argument("BoxSet: dimension must be >= 1");
  }

  // One axis-aligned box. An axis pair (lo, hi) with fract(hi) <= fract(lo)
  // wraps around; a full axis is (0, 1).
  static BoxSet box(const std::vector<std::pair<double, double>>& axes) {
    BoxSet s(axes.size());
    s.add_box(axes);
    return s;
  }

  std::size_t dimension() const { return dimension_; }
  const std::vector<Box>& boxes() const { return boxes_; }

  double measure() const {
    double m = 0.0;
    for (const Box& b : boxes_) m += b.volume();
    return std::min(m, 1.0);
  }

  bool contains(const TorusPoint& p) const {
    if (p.dimension() != dimension_)
      throw std::invalid_argument("BoxSet::contains: dimension mismatch");
    for (const Box& b : boxes_) {
      bool in = true;
      for (std::size_t i = 0; i < dimension_; ++i)
        if (!b.axes[i].contains(p[i])) {
          in = false;
          break;
        }
      if (in) return true;
    }
    return false;
  }

  bool contains_coords(const std::vector<double>& x) const {
    for (const Box& b : boxes_) {
      bool in = true;
      for (std::size_t i = 0; i < dimension_; ++i)
        if (!b.axes[i].contains(x[i])) {
          in = false;
          break;
        }
      if (in) return true;
    }
    return false;
  }

  // Inserts a box, normalizing against the existing boxes so the stored
  // family stays disjoint.
  void add_box(const std::vector<std::pair<double, double>>& axes) {
    if (axes.size() != dimension_) throw std::invalid_argument("add_box: dimension mismatch");
    std::vector<Box> pending = split_wraparound(axes);
    for (Box& candidate : pending) {
      std::vector<Box> fragments{candidate};
      for (const Box& existing : boxes_) {
        std::vector<Box> next;
        for (const Box& frag : fragments) subtract(frag, existing, next);
        fragments = std::move(next);
        if (fragments.empty()) break;
      }
      for (Box& frag : fragments) boxes_.push_back(std::move(frag));
    }
  }

  BoxSet translated(const std::vector<double>& shift) const {
    if (shift.size() != dimension_) throw std::invalid_argument("translated: dimension mismatch");
    BoxSet out(dimension_);
    for (const Box& b : boxes_) {
      // Translate each axis; an interval pushed across 1 splits in two.
      std::vector<std::vector<Interval>> per_axis(dimension_);
      for (std::size_t i = 0; i < dimension_; ++i) {
        double lo = fract(b.axes[i].lo + shift[i]);
        double len = b.axes[i].length();
        double hi = lo + len;
        if (hi <= 1.0 + 1e-15) {
          per_axis[i].push_back({lo, std::min(hi, 1.0)});
        } else {
          per_axis[i].push_back({lo, 1.0});
          per_axis[i].push_back({0.0, hi - 1.0});
        }
      }
      append_cross_product(per_axis, out.boxes_);
    }
    return out;
  }

  BoxSet intersect(const BoxSet& other) const {
    if (other.dimension_ != dimension_)
      throw std::invalid_argument("intersect: dimension mismatch");
    BoxSet out(dimension_);
    for (const Box& x : boxes_) {
      for (const Box& y : other.boxes_) {
        Box z;
        z.axes.resize(dimension_);
        bool empty = false;
        for (std::size_t i = 0; i < dimension_; ++i) {
          double lo = std::max(x.axes[i].lo, y.axes[i].lo);
          double hi = std::min(x.axes[i].hi, y.axes[i].hi);
          if (hi <= lo) {
            empty = true;
            break;
          }
          z.axes[i] = {lo, hi};
        }
        if (!empty) out.boxes_.push_back(std::move(z));
      }
    }
    return out;
  }

 private:
  std::vector<Box> split_wraparound(const std::vector<std::pair<double, double>>& axes) const {
    std::vector<std::vector<Interval>> per_axis(dimension_);
    for (std::size_t i = 0; i < dimension_; ++i) {
      double lo = axes[i].first, hi = axes[i].second;
      if (lo == 0.0 && hi == 1.0) {
        per_axis[i].push_back({0.0, 1.0});
        continue;
      }
      lo = fract(lo);
      hi = fract(hi);
      if (hi > lo) {
        per_axis[i].push_back({lo, hi});
      } else {
        per_axis[i].push_back({lo, 1.0});
        if (hi > 0.0) per_axis[i].push_back({0.0, hi});
      }
    }
    std::vector<Box> out;
    append_cross_product(per_axis, out);
    return out;
  }

  static void append_cross_product(const std::vector<std::vector<Interval>>& per_axis,
                                   std::vector<Box>& out) {
    std::size_t total = 1;
    for (const auto& opts : per_axis) total *= opts.size();
    for (std::size_t idx = 0; idx < total; ++idx) {
      Box b;
      b.axes.resize(per_axis.size());
      std::size_t rem = idx;
      for (std::size_t i = 0; i < per_axis.size(); ++i) {
        b.axes[i] = per_axis[i][rem % per_axis[i].size()];
        rem /= per_axis[i].size();
      }
      if (b.volume() > 0.0) out.push_back(std::move(b));
    }
  }

  // frag \ cut, appended to out as disjoint boxes.
  static void subtract(const Box& frag, const Box& cut, std::vector<Box>& out) {
    const std::size_t d = frag.axes.size();
    for (std::size_t i = 0; i < d; ++i) {
      double lo = std::max(frag.axes[i].lo, cut.axes[i].lo);
      double hi = std::min(frag.axes[i].hi, cut.axes[i].hi);
      if (hi <= lo) {
        out.push_back(frag);
        return;
      }
    }
    Box core = frag;
    for (std::size_t i = 0; i < d; ++i) {
      if (core.axes[i].lo < cut.axes[i].lo) {
        Box piece = core;
        piece.axes[i].hi = cut.axes[i].lo;
        if (piece.volume() > 0.0) out.push_back(std::move(piece));
        core.axes[i].lo = cut.axes[i].lo;
      }
      if (core.axes[i].hi > cut.axes[i].hi) {
        Box piece = core;
        piece.axes[i].lo = cut.axes[i].hi;
        if (piece.volume() > 0.0) out.push_back(std::move(piece));
        core.axes[i].hi = cut.axes[i].hi;
      }
    }
    // what remains of core lies inside cut and is dropped
  }

  std::size_t dimension_;
  std::vector<Box> boxes_;
};

// ---------------------------------------------------------------------------
// Intersection measures.

struct PreimageTerm {
  TorusSystem system;
  std::int64_t n = 0;
};

enum class McMode { Auto, Exact, MonteCarlo };

struct McConfig {
  McMode mode = McMode::Auto;
  std::size_t samples = 100000;
  std::uint64_t seed = 0;
  double tolerance = 1e-9;  // slack applied to the satisfied flag
  // Factor in the three-transformation lower bound factor * mu(A)^8. The
  // asserted value is 1/2; smaller factors allow empirical exploration of
  // sharper constants.
  double k3_bound_factor = 0.5;
};

namespace detail {

inline bool exact_capable(const std::vector<PreimageTerm>& terms) {
  for (const auto& t : terms)
    if (!t.system.translation_like()) return false;
  return true;
}

}  // namespace detail

// mu(A cap T_1^{-n_1}A cap ... ). Rotations and identities translate boxes,
// giving an exact interval-arithmetic path; anything containing a skew
// product falls back to seeded Monte Carlo.
inline double intersection_measure(const BoxSet& A, const std::vector<PreimageTerm>& terms,
                                   const McConfig& mc = {}) {
  for (const auto& t : terms)
    if (t.system.dimension() != A.dimension())
      throw std::invalid_argument("intersection_measure: dimension mismatch");
  const bool capable = detail::exact_capable(terms);
  bool use_exact = false;
  switch (mc.mode) {
    case McMode::Auto: use_exact = capable; break;
    case McMode::Exact:
      if (!capable)
        throw std::invalid_argument("intersection_measure: exact path needs translation systems");
      use_exact = true;
      break;
    case McMode::MonteCarlo: use_exact = false; break;
  }
  if (use_exact) {
    BoxSet cur = A;
    for (const auto& t : terms) {
      std::vector<double> v = t.system.translation_by(-t.n);
      cur = cur.intersect(A.translated(v));
      if (cur.boxes().empty()) return 0.0;
    }
    return cur.measure();
  }
  if (mc.samples == 0) throw std::invalid_argument("intersection_measure: samples must be >= 1");
  const std::size_t d = A.dimension();
  SplitMix64 base(mc.seed);
  constexpr std::size_t kBlock = 4096;
  const std::size_t nblocks = (mc.samples + kBlock - 1) / kBlock;
  std::vector<std::uint64_t> partial(nblocks, 0);
  parallel_for_blocks(nblocks, [&](std::size_t blk) {
    std::uint64_t count = 0;
    const std::size_t s0 = blk * kBlock, s1 = std::min(s0 + kBlock, mc.samples);
    for (std::size_t si = s0; si < s1; ++si) {
      SplitMix64 g = base.fork(si);
      std::vector<double> coords(d);
      for (std::size_t i = 0; i < d; ++i) coords[i] = g.next_double();
      if (!A.contains_coords(coords)) continue;
      TorusPoint x(coords);
      bool in = true;
      for (const auto& t : terms) {
        if (!A.contains(iterate(t.system, x, t.n))) {
          in = false;
          break;
        }
      }
      if (in) ++count;
    }
    partial[blk] = count;
  });
  std::uint64_t total = 0;
  for (std::uint64_t c : partial) total += c;
  return static_cast<double>(total) / static_cast<double>(mc.samples);
}

// ---------------------------------------------------------------------------
// Khintchine-type series reports. Sums run over n, m = 1..N.

enum class BoundStatus { Satisfied, Violated, NotApplicable };

struct RecurrenceReport {
  double muA = 0.0;
  std::vector<std::int64_t> Ns;
  std::vector<double> series_values;
  double limit_estimate = 0.0;
  double uncertainty = 0.0;  // max of the last three ladder increments
  double lower_bound = 0.0;
  std::string bound_name;
  BoundStatus satisfied = BoundStatus::NotApplicable;
  std::string path;  // "exact" or "monte-carlo"
};

namespace detail {

inline void finish_report(RecurrenceReport& r, const McConfig& mc, bool applicable) {
  r.limit_estimate = r.series_values.back();
  r.uncertainty = 0.0;
  const std::size_t k = r.series_values.size();
  for (std::size_t i = k > 3 ? k - 3 : 1; i < k; ++i)
    r.uncertainty =
        std::max(r.uncertainty, std::fabs(r.series_values[i] - r.series_values[i - 1]));
  if (!applicable) {
    r.satisfied = BoundStatus::NotApplicable;
  } else {
    r.satisfied = r.limit_estimate >= r.lower_bound - mc.tolerance ? BoundStatus::Satisfied
                                                                   : BoundStatus::Violated;
  }
}

}  // namespace detail

// (1/N^2) sum_{n,m=1}^{N} mu(A cap T1^{-n}A cap T2^{-n-m}A) against mu(A)^4.
inline RecurrenceReport khintchine2_series(const TorusSystem& T1, const TorusSystem& T2,
                                           const BoxSet& A, const std::vector<std::int64_t>& Ns,
                                           const McConfig& mc = {}) {
  validate_ladder(Ns);
  if (T1.dimension() != A.dimension() || T2.dimension() != A.dimension())
    throw std::invalid_argument("khintchine2_series: dimension mismatch");
  const double muA = A.measure();
  if (muA <= 0.0) throw std::invalid_argument("khintchine2_series: A must have positive measure");

  RecurrenceReport report;
  report.muA = muA;
  report.Ns = Ns;
  report.lower_bound = muA * muA * muA * muA;
  report.bound_name = "muA^4";
  const std::size_t maxN = static_cast<std::size_t>(Ns.back());

  const bool capable = T1.translation_like() && T2.translation_like();
  bool use_exact = false;
  switch (mc.mode) {
    case McMode::Auto: use_exact = capable; break;
    case McMode::Exact:
      if (!capable)
        throw std::invalid_argument("khintchine2_series: exact path needs translation systems");
      use_exact = true;
      break;
    case McMode::MonteCarlo: use_exact = false; break;
  }

  std::vector<double> acc(Ns.size(), 0.0);
  if (use_exact) {
    report.path = "exact";
    std::vector<BoxSet> C;  // C[k] = T2^{-k} A for k = 2..2*maxN
    C.reserve(2 * maxN + 1);
    for (std::size_t k = 0; k <= 2 * maxN; ++k)
      C.push_back(A.translated(T2.translation_by(-static_cast<std::int64_t>(k))));
    constexpr std::size_t kBlock = 32;
    const std::size_t nblocks = (maxN + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> partial(nblocks, std::vector<double>(Ns.size(), 0.0));
    parallel_for_blocks(nblocks, [&](std::size_t blk) {
      auto& out = partial[blk];
      const std::size_t n0 = blk * kBlock + 1, n1 = std::min(n0 + kBlock, maxN + 1);
      std::vector<double> rowprefix(maxN + 1, 0.0);
      for (std::size_t n = n0; n < n1; ++n) {
        BoxSet AB = A.intersect(A.translated(T1.translation_by(-static_cast<std::int64_t>(n))));
        double run = 0.0;
        for (std::size_t m = 1; m <= maxN; ++m) {
          run += AB.intersect(C[n + m]).measure();
          rowprefix[m] = run;
        }
        for (std::size_t j = 0; j < Ns.size(); ++j)
          if (static_cast<std::size_t>(Ns[j]) >= n)
            out[j] += rowprefix[static_cast<std::size_t>(Ns[j])];
      }
    });
    for (const auto& p : partial)
      for (std::size_t j = 0; j < Ns.size(); ++j) acc[j] += p[j];
    for (std::size_t j = 0; j < Ns.size(); ++j) {
      double dN = static_cast<double>(Ns[j]);
      report.series_values.push_back(acc[j] / (dN * dN));
    }
  } else {
    report.path = "monte-carlo";
    if (mc.samples == 0) throw std::invalid_argument("khintchine2_series: samples must be >= 1");
    const std::size_t d = A.dimension();
    SplitMix64 base(mc.seed);
    constexpr std::size_t kBlock = 512;
    const std::size_t nblocks = (mc.samples + kBlock - 1) / kBlock;
    std::vector<std::vector<std::uint64_t>> partial(nblocks,
                                                    std::vector<std::uint64_t>(Ns.size(), 0));
    parallel_for_blocks(nblocks, [&](std::size_t blk) {
      auto& out = partial[blk];
      const std::size_t s0 = blk * kBlock, s1 = std::min(s0 + kBlock, mc.samples);
      std::vector<std::uint8_t> u(maxN + 1, 0);
      std::vector<std::uint64_t> wpre(2 * maxN + 1, 0);
      for (std::size_t si = s0; si < s1; ++si) {
        SplitMix64 g = base.fork(si);
        std::vector<double> coords(d);
        for (std::size_t i = 0; i < d; ++i) coords[i] = g.next_double();
        if (!A.contains_coords(coords)) continue;
        TorusPoint x(coords);
        TorusPoint p1 = x;
        for (std::size_t n = 1; n <= maxN; ++n) {
          p1 = apply(T1, p1);
          u[n] = A.contains(p1) ? 1 : 0;
        }
        TorusPoint p2 = x;
        for (std::size_t k = 1; k <= 2 * maxN; ++k) {
          p2 = apply(T2, p2);
          wpre[k] = wpre[k - 1] + (A.contains(p2) ? 1 : 0);
        }
        for (std::size_t j = 0; j < Ns.size(); ++j) {
          const std::size_t N = static_cast<std::size_t>(Ns[j]);
          std::uint64_t count = 0;
          for (std::size_t n = 1; n <= N; ++n)
            if (u[n]) count += wpre[n + N] - wpre[n];
          out[j] += count;
        }
      }
    });
    std::vector<std::uint64_t> totals(Ns.size(), 0);
    for (const auto& p : partial)
      for (std::size_t j = 0; j < Ns.size(); ++j) totals[j] += p[j];
    for (std::size_t j = 0; j < Ns.size(); ++j) {
      double dN = static_cast<double>(Ns[j]);
      report.series_values.push_back(static_cast<double>(totals[j]) /
                                     (dN * dN * static_cast<double>(mc.samples)));
    }
  }
  detail::finish_report(report, mc, /*applicable=*/true);
  return report;
}

// Unique root of x^7 + x - 1 (beta) or the threshold 1 - root(x^7/2 + x - 1)
// (delta), found by bisection on (0, 1).
enum class ThresholdKind { Delta, Beta };

inline double threshold_root(ThresholdKind which, double tol) {
  if (!(tol > 0.0)) throw std::invalid_argument("threshold_root: tol must be > 0");
  const double lead = which == ThresholdKind::Delta ? 0.5 : 1.0;
  auto f = [lead](double x) {
    double x3 = x * x * x;
    return lead * x3 * x3 * x + x - 1.0;
  };
  double lo = 0.0, hi = 1.0;
  while (hi - lo > tol) {
    double mid = 0.5 * (lo + hi);
    if (f(mid) < 0.0)
      lo = mid;
    else
      hi = mid;
  }
  double root = 0.5 * (lo + hi);
  return which == ThresholdKind::Delta ? 1.0 - root : root;
}

// (1/N^2) sum_{n,m=1}^{N} mu(A cap T1^{-n}A cap T2^{-m}A cap T3^{-n-m}A).
// The (1/2) mu(A)^8 bound applies when mu(A) > 1 - delta; below the gate the
// report is still produced with the flag NotApplicable.
inline RecurrenceReport khintchine3_series(const TorusSystem& T1, const TorusSystem& T2,
                                           const TorusSystem& T3, const BoxSet& A,
                                           const std::vector<std::int64_t>& Ns,
                                           const McConfig& mc = {}) {
  validate_ladder(Ns);
  if (T1.dimension() != A.dimension() || T2.dimension() != A.dimension() ||
      T3.dimension() != A.dimension())
    throw std::invalid_argument("khintchine3_series: dimension mismatch");
  const double muA = A.measure();
  if (muA <= 0.0) throw std::invalid_argument("khintchine3_series: A must have positive measure");

  RecurrenceReport report;
  report.muA = muA;
  report.Ns = Ns;
  double mu8 = muA;
  for (int i = 0; i < 3; ++i) mu8 *= mu8;
  report.lower_bound = mc.k3_bound_factor * mu8;
  report.bound_name = "half-muA^8";
  const double delta = threshold_root(ThresholdKind::Delta, 1e-14);
  const bool applicable = muA > 1.0 - delta;
  const std::size_t maxN = static_cast<std::size_t>(Ns.back());

  const bool capable =
      T1.translation_like() && T2.translation_like() && T3.translation_like();
  bool use_exact = false;
  switch (mc.mode) {
    case McMode::Auto: use_exact = capable; break;
    case McMode::Exact:
      if (!capable)
        throw std::invalid_argument("khintchine3_series: exact path needs translation systems");
      use_exact = true;
      break;
    case McMode::MonteCarlo: use_exact = false; break;
  }

  std::vector<double> acc(Ns.size(), 0.0);
  if (use_exact) {
    report.path = "exact";
    std::vector<BoxSet> D2, D3;
    D2.reserve(maxN + 1);
    D3.reserve(2 * maxN + 1);
    for (std::size_t m = 0; m <= maxN; ++m)
      D2.push_back(A.translated(T2.translation_by(-static_cast<std::int64_t>(m))));
    for (std::size_t k = 0; k <= 2 * maxN; ++k)
      D3.push_back(A.translated(T3.translation_by(-static_cast<std::int64_t>(k))));
    constexpr std::size_t kBlock = 32;
    const std::size_t nblocks = (maxN + kBlock - 1) / kBlock;
    std::vector<std::vector<double>> partial(nblocks, std::vector<double>(Ns.size(), 0.0));
    parallel_for_blocks(nblocks, [&](std::size_t blk) {
      auto& out = partial[blk];
      const std::size_t n0 = blk * kBlock + 1, n1 = std::min(n0 + kBlock, maxN + 1);
      std::vector<double> rowprefix(maxN + 1, 0.0);
      for (std::size_t n = n0; n < n1; ++n) {
        BoxSet AB = A.intersect(A.translated(T1.translation_by(-static_cast<std::int64_t>(n))));
        double run = 0.0;
        for (std::size_t m = 1; m <= maxN; ++m) {
          run += AB.intersect(D2[m]).intersect(D3[n + m]).measure();
          rowprefix[m] = run;
        }
        for (std::size_t j = 0; j < Ns.size(); ++j)
          if (static_cast<std::size_t>(Ns[j]) >= n)
            out[j] += rowprefix[static_cast<std::size_t>(Ns[j])];
      }
    });
    for (const auto& p : partial)
      for (std::size_t j = 0; j < Ns.size(); ++j) acc[j] += p[j];
  } else {
    report.path = "monte-carlo";
    if (mc.samples == 0) throw std::invalid_argument("khintchine3_series: samples must be >= 1");
    const std::size_t d = A.dimension();
    SplitMix64 base(mc.seed);
    constexpr std::size_t kBlock = 256;
    const std::size_t nblocks = (mc.samples + kBlock - 1) / kBlock;
    std::vector<std::vector<std::uint64_t>> partial(nblocks,
                                                    std::vector<std::uint64_t>(Ns.size(), 0));
    parallel_for_blocks(nblocks, [&](std::size_t blk) {
      auto& out = partial[blk];
      const std::size_t s0 = blk * kBlock, s1 = std::min(s0 + kBlock, mc.samples);
      std::vector<std::uint8_t> u(maxN + 1, 0), v(maxN + 1, 0), w(2 * maxN + 1, 0);
      for (std::size_t si = s0; si < s1; ++si) {
        SplitMix64 g = base.fork(si);
        std::vector<double> coords(d);
        for (std::size_t i = 0; i < d; ++i) coords[i] = g.next_double();
        if (!A.contains_coords(coords)) continue;
        TorusPoint x(coords);
        TorusPoint p1 = x, p2 = x, p3 = x;
        for (std::size_t n = 1; n <= maxN; ++n) {
          p1 = apply(T1, p1);
          u[n] = A.contains(p1) ? 1 : 0;
          p2 = apply(T2, p2);
          v[n] = A.contains(p2) ? 1 : 0;
        }
        for (std::size_t k = 1; k <= 2 * maxN; ++k) {
          p3 = apply(T3, p3);
          w[k] = A.contains(p3) ? 1 : 0;
        }
        for (std::size_t j = 0; j < Ns.size(); ++j) {
          const std::size_t N = static_cast<std::size_t>(Ns[j]);
          std::uint64_t count = 0;
          for (std::size_t n = 1; n <= N; ++n) {
            if (!u[n]) continue;
            std::uint64_t inner = 0;
            for (std::size_t m = 1; m <= N; ++m) inner += v[m] & w[n + m];
            count += inner;
          }
          out[j] += count;
        }
      }
    });
    std::vector<std::uint64_t> totals(Ns.size(), 0);
    for (const auto& p : partial)
      for (std::size_t j = 0; j < Ns.size(); ++j) totals[j] += p[j];
    for (std::size_t j = 0; j < Ns.size(); ++j) acc[j] = static_cast<double>(totals[j]) /
                                                         static_cast<double>(mc.samples);
  }
  for (std::size_t j = 0; j < Ns.size(); ++j) {
    double dN = static_cast<double>(Ns[j]);
    report.series_values.push_back(acc[j] / (dN * dN));
  }
  detail::finish_report(report, mc, applicable);
  return report;
}

// ---------------------------------------------------------------------------
// Predicted limit of the two-transformation series: the integral over A of
// the product of the two invariant conditional expectations. Irrational
// rotations give the constant mu(A); the identity gives the indicator; other
// systems fall back to a long Birkhoff average on a grid.

namespace detail {

inline bool near_rational(double alpha, int max_q, double tol) {
  for (int q = 1; q <= max_q; ++q) {
    double scaled = alpha * q;
    if (std::fabs(scaled - std::llround(scaled)) < tol * q) return true;
  }
  return false;
}

enum class ExpectationKind { ConstMuA, Indicator, Grid };

inline ExpectationKind classify_for_expectation(const TorusSystem& T) {
  switch (T.kind()) {
    case TorusSystem::Kind::Identity:
      return ExpectationKind::Indicator;
    case TorusSystem::Kind::Rotation:
      if (T.alphas().size() == 1 && !near_rational(T.alphas()[0], 64, 1e-9))
        return ExpectationKind::ConstMuA;
      return ExpectationKind::Grid;
    default:
      return ExpectationKind::Grid;
  }
}

}  // namespace detail

inline double conditional_product_integral(const TorusSystem& T1, const TorusSystem& T2,
                                           const BoxSet& A, std::size_t resolution = 0,
                                           std::size_t birkhoff_n = 4096) {
  if (T1.dimension() != A.dimension() || T2.dimension() != A.dimension())
    throw std::invalid_argument("conditional_product_integral: dimension mismatch");
  const double muA = A.measure();
  auto k1 = detail::classify_for_expectation(T1);
  auto k2 = detail::classify_for_expectation(T2);
  using EK = detail::ExpectationKind;
  if (k1 != EK::Grid && k2 != EK::Grid) {
    // int_A E1 E2 with E in {muA, 1_A}: each indicator collapses onto A.
    double value = muA;
    if (k1 == EK::ConstMuA) value *= muA;
    if (k2 == EK::ConstMuA) value *= muA;
    return value;
  }
  if (resolution < 2)
    throw std::invalid_argument(
        "conditional_product_integral: grid fallback needs resolution >= 2");
  const std::size_t d = A.dimension();
  double cells = std::pow(static_cast<double>(resolution), static_cast<double>(d));
  if (cells > 4.0e6)
    throw std::invalid_argument("conditional_product_integral: grid too large");
  const std::size_t total = static_cast<std::size_t>(cells + 0.5);

  double integral = 0.0;
  std::vector<double> coords(d);
  for (std::size_t idx = 0; idx < total; ++idx) {
    std::size_t rem = idx;
    for (std::size_t i = 0; i < d; ++i) {
      coords[i] = (static_cast<double>(rem % resolution) + 0.5) / static_cast<double>(resolution);
      rem /= resolution;
    }
    if (!A.contains_coords(coords)) continue;
    TorusPoint x(coords);
    auto birkhoff = [&](const TorusSystem& T, detail::ExpectationKind k) {
      if (k == EK::ConstMuA) return muA;
      if (k == EK::Indicator) return 1.0;  // x is already in A here
      TorusPoint p = x;
      std::size_t hits = 0;
      for (std::size_t n = 0; n < birkhoff_n; ++n) {
        if (A.contains(p)) ++hits;
        p = apply(T, p);
      }
      return static_cast<double>(hits) / static_cast<double>(birkhoff_n);
    };
    integral += birkhoff(T1, k1) * birkhoff(T2, k2);
  }
  return integral / static_cast<double>(total);
}

}  // namespace cubeavg
