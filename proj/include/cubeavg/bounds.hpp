#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <stdexcept>
#include <string>
#include <vector>

#include "cubeavg/cesaro.hpp"
#include "cubeavg/wiener_wintner.hpp"

namespace cubeavg {

struct MarginReport {
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;  // rhs - lhs
  std::string witness;
};

// The two-index inequality comes with asymmetric ranges: the a and b sups
// run over 1..N while the left side uses indices 0..N-1, and the c sup runs
// over 1..2(N-1) although the left side touches c_0. AsPrinted keeps those
// ranges exactly; ZeroBased aligns everything at index 0.
enum class RangeConvention { AsPrinted, ZeroBased };

namespace detail {

inline void require_unit_bound(const BoundedSequence& s, const char* name) {
  if (s.bound() > 1.0 + 1e-9)
    throw std::invalid_argument(std::string("sequence ") + name +
                                " must be bounded by one (rescale first)");
}

}  // namespace detail

// |(1/N^2) sum a_n b_m c_{n+m}|^2 against the minimum of the three squared
// twisted sups.
inline MarginReport lemma1_margin(const BoundedSequence& a, const BoundedSequence& b,
                                  const BoundedSequence& c, std::size_t N,
                                  RangeConvention convention = RangeConvention::AsPrinted,
                                  const WWSupOptions& opts = {}) {
  if (N == 0) throw std::invalid_argument("lemma1_margin: N must be >= 1");
  detail::require_unit_bound(a, "a");
  detail::require_unit_bound(b, "b");
  detail::require_unit_bound(c, "c");
  const std::int64_t n = static_cast<std::int64_t>(N);
  TwistedSumSpec sa, sb, sc;
  if (convention == RangeConvention::AsPrinted) {
    sa = {1, n, n};
    sb = {1, n, n};
    sc = {1, 2 * (n - 1), n};
    if (a.size() < N + 1 || b.size() < N + 1)
      throw std::invalid_argument("lemma1_margin: a and b need length >= N+1 (printed ranges)");
  } else {
    sa = {0, n - 1, n};
    sb = {0, n - 1, n};
    sc = {0, 2 * (n - 1), n};
  }
  if (c.size() < 2 * N - 1)
    throw std::invalid_argument("lemma1_margin: c needs length >= 2N-1");

  MarginReport report;
  cplx avg = cube_average_2(a, b, c, N, AverageMethod::Convolution);
  report.lhs = std::norm(avg);

  WWReport wa = ww_sup(a, sa, opts);
  WWReport wb = ww_sup(b, sb, opts);
  WWReport wc = ww_sup(c, sc, opts);
  double qa = wa.sup_value * wa.sup_value;
  double qb = wb.sup_value * wb.sup_value;
  double qc = wc.sup_value * wc.sup_value;
  report.rhs = qc;
  report.witness = "c-term sup at t=" + std::to_string(wc.argmax_t);
  if (qa < report.rhs) {
    report.rhs = qa;
    report.witness = "a-term sup at t=" + std::to_string(wa.argmax_t);
  }
  if (qb < report.rhs) {
    report.rhs = qb;
    report.witness = "b-term sup at t=" + std::to_string(wb.argmax_t);
  }
  report.margin = report.rhs - report.lhs;
  return report;
}

// ---------------------------------------------------------------------------
// Seven-slot inequality. The couples of slots connected by a single index,
// with slot patterns a1:p a2:n a3:p+n a4:m a5:n+m a6:p+m a7:n+m+p.

struct ConnectedPair {
  int i = 0;
  int j = 0;
  char index = 'n';
};

inline const std::array<ConnectedPair, 9>& connected_pairs() {
  static const std::array<ConnectedPair, 9> pairs = {{
      {1, 3, 'n'},
      {1, 6, 'm'},
      {2, 3, 'p'},
      {2, 5, 'm'},
      {4, 5, 'n'},
      {4, 6, 'p'},
      {3, 7, 'm'},
      {5, 7, 'p'},
      {6, 7, 'n'},
  }};
  return pairs;
}

inline const std::array<IndexPattern, 7>& lemma2_patterns() {
  static const std::array<IndexPattern, 7> pats = {
      IndexPattern::P,  IndexPattern::N,  IndexPattern::NP, IndexPattern::M,
      IndexPattern::NM, IndexPattern::MP, IndexPattern::NMP};
  return pats;
}

struct Lemma2Report {
  double lhs = 0.0;       // |M_N|^2
  double rhs_no_c = 0.0;  // min over connected pairs, constant C not applied
  double margin = 0.0;    // rhs_no_c - lhs
  double ratio = 0.0;     // lhs / rhs_no_c, 0 when both vanish
  std::string witness;
};

// For each connected pair (i, j): average over shifts of the squared twisted
// sup of m -> a_i[m] a_j[n+m], once with the inner range 0..N-1 and once with
// 0..2(N-1), both normalized by N; take the max of the two and minimize over
// the pair set.
inline Lemma2Report lemma2_margin(const std::array<BoundedSequence, 7>& A, std::size_t N,
                                  const WWSupOptions& opts = {}) {
  if (N == 0) throw std::invalid_argument("lemma2_margin: N must be >= 1");
  const std::size_t need = 3 * N - 2;
  for (std::size_t s = 0; s < 7; ++s) {
    detail::require_unit_bound(A[s], ("A" + std::to_string(s + 1)).c_str());
    if (A[s].size() < need)
      throw std::invalid_argument("lemma2_margin: sequences need length >= 3N-2");
  }

  Lemma2Report report;
  CubeSpec spec;
  const auto& pats = lemma2_patterns();
  for (std::size_t s = 0; s < 7; ++s) spec.slots.push_back(CubeSlot{A[s], pats[s], 0.0});
  report.lhs = std::norm(cube_average_3(spec, N));

  const std::int64_t n64 = static_cast<std::int64_t>(N);
  report.rhs_no_c = std::numeric_limits<double>::infinity();
  for (const ConnectedPair& pr : connected_pairs()) {
    const BoundedSequence& ai = A[pr.i - 1];
    const BoundedSequence& aj = A[pr.j - 1];
    double inner_short = 0.0, inner_long = 0.0;
    for (std::size_t shift = 0; shift < N; ++shift) {
      const std::size_t len_long = 2 * N - 1;  // m = 0..2(N-1)
      std::vector<cplx> prod(len_long);
      for (std::size_t m = 0; m < len_long; ++m) prod[m] = ai[m] * aj[shift + m];
      BoundedSequence d(std::move(prod), ai.bound() * aj.bound());
      double s_short = ww_sup(d, TwistedSumSpec{0, n64 - 1, n64}, opts).sup_value;
      double s_long = ww_sup(d, TwistedSumSpec{0, 2 * (n64 - 1), n64}, opts).sup_value;
      inner_short += s_short * s_short;
      inner_long += s_long * s_long;
    }
    inner_short /= static_cast<double>(N);
    inner_long /= static_cast<double>(N);
    double pair_val = std::max(inner_short, inner_long);
    if (pair_val < report.rhs_no_c) {
      report.rhs_no_c = pair_val;
      report.witness = "pair (" + std::to_string(pr.i) + "," + std::to_string(pr.j) +
                       ") connected by " + pr.index;
    }
  }
  report.margin = report.rhs_no_c - report.lhs;
  if (report.rhs_no_c == 0.0) {
    report.ratio = report.lhs == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  } else {
    report.ratio = report.lhs / report.rhs_no_c;
  }
  return report;
}

// ---------------------------------------------------------------------------
// Empirical estimate of the unspecified constant: the largest observed ratio
// lhs/rhs over randomized unit-modulus tuples. Reported, never asserted
// against a fixed bound.

enum class TrialEnsemble { Unit, AllOnes, AllZeros };

inline double empirical_C(std::size_t trials, const std::vector<std::int64_t>& Ns,
                          std::uint64_t seed, TrialEnsemble ensemble = TrialEnsemble::Unit,
                          const WWSupOptions& opts = {}) {
  if (trials == 0) throw std::invalid_argument("empirical_C: trials must be >= 1");
  validate_ladder(Ns);
  const std::size_t maxN = static_cast<std::size_t>(Ns.back());
  const std::size_t len = 3 * maxN - 2;
  SplitMix64 base(seed);
  std::vector<double> per_trial(trials, 0.0);
  parallel_for_blocks(trials, [&](std::size_t trial) {
    SplitMix64 g = base.fork(trial);
    std::vector<BoundedSequence> seqs;
    seqs.reserve(7);
    for (int s = 0; s < 7; ++s) {
      std::vector<cplx> v(len);
      for (auto& x : v) {
        switch (ensemble) {
          case TrialEnsemble::Unit: x = g.next_unit_complex(); break;
          case TrialEnsemble::AllOnes: x = cplx{1.0, 0.0}; break;
          case TrialEnsemble::AllZeros: x = cplx{0.0, 0.0}; break;
        }
      }
      seqs.emplace_back(std::move(v), ensemble == TrialEnsemble::AllZeros ? 0.0 : 1.0);
    }
    std::array<BoundedSequence, 7> tuple = {seqs[0], seqs[1], seqs[2], seqs[3],
                                            seqs[4], seqs[5], seqs[6]};
    double worst = 0.0;
    for (std::int64_t N : Ns) {
      Lemma2Report r = lemma2_margin(tuple, static_cast<std::size_t>(N), opts);
      if (r.ratio > worst) worst = r.ratio;
    }
    per_trial[trial] = worst;
  });
  double c_emp = 0.0;
  for (double v : per_trial) c_emp = std::max(c_emp, v);
  return c_emp;
}

}  // namespace cubeavg
