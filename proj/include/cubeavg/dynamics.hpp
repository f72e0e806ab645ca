#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "cubeavg/phase.hpp"

namespace cubeavg {

// Strictly increasing ladder of positive N values.
inline void validate_ladder(const std::vector<std::int64_t>& Ns) {
  if (Ns.empty()) throw std::invalid_argument("Ns: must be nonempty");
  for (std::size_t i = 0; i < Ns.size(); ++i) {
    if (Ns[i] < 1) throw std::invalid_argument("Ns: entries must be >= 1");
    if (i > 0 && Ns[i] <= Ns[i - 1])
      throw std::invalid_argument("Ns: must be strictly increasing");
  }
}

// ---------------------------------------------------------------------------
// TorusPoint: a point on T^d, all coordinates kept reduced to [0, 1).

class TorusPoint {
 public:
  explicit TorusPoint(std::vector<double> coords) : coords_(std::move(coords)) {
    if (coords_.empty()) throw std::invalid_argument("TorusPoint: dimension must be >= 1");
    for (double& c : coords_) c = fract(c);
  }

  std::size_t dimension() const { return coords_.size(); }
  double operator[](std::size_t i) const { return coords_[i]; }
  const std::vector<double>& coords() const { return coords_; }

 private:
  std::vector<double> coords_;
};

inline double torus_distance(const TorusPoint& a, const TorusPoint& b) {
  if (a.dimension() != b.dimension())
    throw std::invalid_argument("torus_distance: dimension mismatch");
  double s = 0.0;
  for (std::size_t i = 0; i < a.dimension(); ++i) {
    double d = circle_dist(a[i], b[i]);
    s += d * d;
  }
  return std::sqrt(s);
}

// ---------------------------------------------------------------------------
// TorusSystem: explicit measure-preserving maps on T^d.
//
//   Rotation(alphas)     x_i -> x_i + alpha_i
//   SkewProduct2(alpha)  (x, y) -> (x + alpha, x + y)
//   Product(factors)     acts blockwise
//   Identity(d)          x -> x
//
// iterate() uses closed forms: x + n*alpha for rotations and
// (x + n*alpha, y + n*x + n(n-1)/2 * alpha) for the skew product, with all
// integer multiples reduced mod 1 through mulmod1 so orbits of length up to
// ~1e9 carry no drift.

class TorusSystem {
 public:
  enum class Kind { Rotation, SkewProduct2, Product, Identity };

  static TorusSystem rotation(std::vector<double> alphas) {
    if (alphas.empty()) throw std::invalid_argument("rotation: needs at least one angle");
    TorusSystem s(Kind::Rotation);
    for (double& a : alphas) a = fract(a);
    s.dimension_ = alphas.size();
    s.alphas_ = std::move(alphas);
    return s;
  }

  static TorusSystem skew_product(double alpha) {
    TorusSystem s(Kind::SkewProduct2);
    s.dimension_ = 2;
    s.alphas_ = {fract(alpha)};
    return s;
  }

  static TorusSystem product(std::vector<TorusSystem> factors) {
    if (factors.empty()) throw std::invalid_argument("product: needs at least one factor");
    TorusSystem s(Kind::Product);
    s.dimension_ = 0;
    for (const auto& f : factors) s.dimension_ += f.dimension();
    s.factors_ = std::move(factors);
    return s;
  }

  static TorusSystem identity(std::size_t dimension) {
    if (dimension == 0) throw std::invalid_argument("identity: dimension must be >= 1");
    TorusSystem s(Kind::Identity);
    s.dimension_ = dimension;
    return s;
  }

  Kind kind() const { return kind_; }
  std::size_t dimension() const { return dimension_; }

  const std::vector<double>& alphas() const { return alphas_; }
  double alpha() const { return alphas_.at(0); }
  const std::vector<TorusSystem>& factors() const { return factors_; }

  // True for systems that act by translation (rotations, identity, products
  // of these); their set preimages reduce to box translations.
  bool translation_like() const {
    switch (kind_) {
      case Kind::Rotation:
      case Kind::Identity:
        return true;
      case Kind::SkewProduct2:
        return false;
      case Kind::Product:
        return std::all_of(factors_.begin(), factors_.end(),
                           [](const TorusSystem& f) { return f.translation_like(); });
    }
    return false;
  }

  // Translation vector of T^n, defined for translation_like systems.
  std::vector<double> translation_by(std::int64_t n) const {
    std::vector<double> v;
    v.reserve(dimension_);
    append_translation(n, v);
    return v;
  }

  std::string describe() const {
    switch (kind_) {
      case Kind::Rotation: {
        std::string s = "rotation(";
        for (std::size_t i = 0; i < alphas_.size(); ++i)
          s += (i ? "," : "") + std::to_string(alphas_[i]);
        return s + ")";
      }
      case Kind::SkewProduct2:
        return "skew(" + std::to_string(alphas_[0]) + ")";
      case Kind::Product: {
        std::string s = "product(";
        for (std::size_t i = 0; i < factors_.size(); ++i)
          s += (i ? "," : "") + factors_[i].describe();
        return s + ")";
      }
      case Kind::Identity:
        return "identity(" + std::to_string(dimension_) + ")";
    }
    return "?";
  }

 private:
  explicit TorusSystem(Kind k) : kind_(k) {}

  void append_translation(std::int64_t n, std::vector<double>& out) const {
    switch (kind_) {
      case Kind::Rotation:
        for (double a : alphas_) out.push_back(mulmod1(n, a));
        break;
      case Kind::Identity:
        out.insert(out.end(), dimension_, 0.0);
        break;
      case Kind::Product:
        for (const auto& f : factors_) f.append_translation(n, out);
        break;
      case Kind::SkewProduct2:
        throw std::invalid_argument("translation_by: skew product is not a translation");
    }
  }

  Kind kind_;
  std::size_t dimension_ = 0;
  std::vector<double> alphas_;
  std::vector<TorusSystem> factors_;
};

namespace detail {

inline void apply_into(const TorusSystem& s, const std::vector<double>& in, std::size_t offset,
                       std::vector<double>& out) {
  switch (s.kind()) {
    case TorusSystem::Kind::Rotation:
      for (std::size_t i = 0; i < s.alphas().size(); ++i)
        out.push_back(fract(in[offset + i] + s.alphas()[i]));
      break;
    case TorusSystem::Kind::SkewProduct2: {
      double x = in[offset], y = in[offset + 1];
      out.push_back(fract(x + s.alpha()));
      out.push_back(fract(x + y));
      break;
    }
    case TorusSystem::Kind::Identity:
      for (std::size_t i = 0; i < s.dimension(); ++i) out.push_back(in[offset + i]);
      break;
    case TorusSystem::Kind::Product: {
      std::size_t off = offset;
      for (const auto& f : s.factors()) {
        apply_into(f, in, off, out);
        off += f.dimension();
      }
      break;
    }
  }
}

inline void iterate_into(const TorusSystem& s, const std::vector<double>& in, std::size_t offset,
                         std::int64_t n, std::vector<double>& out) {
  switch (s.kind()) {
    case TorusSystem::Kind::Rotation:
      for (std::size_t i = 0; i < s.alphas().size(); ++i)
        out.push_back(fract(in[offset + i] + mulmod1(n, s.alphas()[i])));
      break;
    case TorusSystem::Kind::SkewProduct2: {
      double x = in[offset], y = in[offset + 1];
      // S^n(x, y) = (x + n a, y + n x + n(n-1)/2 a)
      std::uint64_t un = static_cast<std::uint64_t>(n);
      std::uint64_t tri = (un % 2 == 0) ? (un / 2) * (un - 1) : un * ((un - 1) / 2);
      double xn = fract(x + mulmod1(un, s.alpha()));
      double yn = fract(y + mulmod1(un, x));
      yn = fract(yn + mulmod1(tri, s.alpha()));
      out.push_back(xn);
      out.push_back(yn);
      break;
    }
    case TorusSystem::Kind::Identity:
      for (std::size_t i = 0; i < s.dimension(); ++i) out.push_back(in[offset + i]);
      break;
    case TorusSystem::Kind::Product: {
      std::size_t off = offset;
      for (const auto& f : s.factors()) {
        iterate_into(f, in, off, n, out);
        off += f.dimension();
      }
      break;
    }
  }
}

}  // namespace detail

inline TorusPoint apply(const TorusSystem& system, const TorusPoint& p) {
  if (system.dimension() != p.dimension())
    throw std::invalid_argument("apply: dimension mismatch");
  std::vector<double> out;
  out.reserve(p.dimension());
  detail::apply_into(system, p.coords(), 0, out);
  return TorusPoint(std::move(out));
}

inline TorusPoint iterate(const TorusSystem& system, const TorusPoint& p, std::int64_t n) {
  if (system.dimension() != p.dimension())
    throw std::invalid_argument("iterate: dimension mismatch");
  if (n < 0) throw std::invalid_argument("iterate: n must be nonnegative");
  if (n == 0) return p;
  std::vector<double> out;
  out.reserve(p.dimension());
  detail::iterate_into(system, p.coords(), 0, n, out);
  return TorusPoint(std::move(out));
}

// Torus distance between s1(s2(p)) and s2(s1(p)); zero iff the two maps agree
// at p. Diagnostic that a pair of test systems genuinely fails to commute.
inline double commutator_defect(const TorusSystem& s1, const TorusSystem& s2,
                                const TorusPoint& p) {
  if (s1.dimension() != s2.dimension())
    throw std::invalid_argument("commutator_defect: dimension mismatch");
  return torus_distance(apply(s1, apply(s2, p)), apply(s2, apply(s1, p)));
}

// ---------------------------------------------------------------------------
// Observable: finite trigonometric polynomial sum_j c_j e^{2 pi i <k_j, x>}.

struct ObservableTerm {
  std::vector<std::int64_t> frequency;
  cplx coefficient;
};

class Observable {
 public:
  Observable(std::size_t dimension, std::vector<ObservableTerm> terms)
      : dimension_(dimension), terms_(std::move(terms)) {
    if (dimension_ == 0) throw std::invalid_argument("Observable: dimension must be >= 1");
    for (const auto& t : terms_)
      if (t.frequency.size() != dimension_)
        throw std::invalid_argument("Observable: frequency dimension mismatch");
  }

  static Observable character(std::vector<std::int64_t> frequency, cplx coefficient = 1.0) {
    std::size_t d = frequency.size();
    return Observable(d, {ObservableTerm{std::move(frequency), coefficient}});
  }

  static Observable constant(std::size_t dimension, cplx value) {
    return Observable(dimension, {ObservableTerm{std::vector<std::int64_t>(dimension, 0), value}});
  }

  static Observable zero(std::size_t dimension) { return Observable(dimension, {}); }

  std::size_t dimension() const { return dimension_; }
  const std::vector<ObservableTerm>& terms() const { return terms_; }
  bool is_zero() const { return terms_.empty(); }

  double sup_bound() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::abs(t.coefficient);
    return s;
  }

  // L2 norm squared over the torus (characters are orthonormal).
  double l2_norm_sq() const {
    double s = 0.0;
    for (const auto& t : terms_) s += std::norm(t.coefficient);
    return s;
  }

  cplx evaluate(const TorusPoint& p) const {
    if (p.dimension() != dimension_)
      throw std::invalid_argument("Observable::evaluate: dimension mismatch");
    cplx v = 0.0;
    for (const auto& t : terms_) {
      double phase = 0.0;
      for (std::size_t i = 0; i < dimension_; ++i) {
        phase += mulmod1(t.frequency[i], p[i]);
        if (phase >= 1.0) phase -= 1.0;
      }
      v += t.coefficient * unit_phase(phase);
    }
    return v;
  }

 private:
  std::size_t dimension_;
  std::vector<ObservableTerm> terms_;
};

inline Observable operator+(const Observable& a, const Observable& b) {
  if (a.dimension() != b.dimension()) throw std::invalid_argument("Observable+: dimension mismatch");
  std::vector<ObservableTerm> terms = a.terms();
  for (const auto& t : b.terms()) terms.push_back(t);
  return Observable(a.dimension(), std::move(terms));
}

inline Observable operator*(cplx scalar, const Observable& f) {
  std::vector<ObservableTerm> terms = f.terms();
  for (auto& t : terms) t.coefficient *= scalar;
  return Observable(f.dimension(), std::move(terms));
}

// ---------------------------------------------------------------------------
// Kronecker projection.
//
// Every character is an eigenfunction of a rotation, and of the identity, so
// those systems project trivially. For the skew product the eigenfunctions
// are exactly the base characters, so terms with a nonzero frequency on the
// fiber coordinate drop; for products the fiber coordinates of every skew
// factor drop.

namespace detail {

inline void collect_fiber_coords(const TorusSystem& s, std::size_t offset,
                                 std::vector<std::size_t>& fibers) {
  switch (s.kind()) {
    case TorusSystem::Kind::Rotation:
    case TorusSystem::Kind::Identity:
      break;
    case TorusSystem::Kind::SkewProduct2:
      fibers.push_back(offset + 1);
      break;
    case TorusSystem::Kind::Product: {
      std::size_t off = offset;
      for (const auto& f : s.factors()) {
        collect_fiber_coords(f, off, fibers);
        off += f.dimension();
      }
      break;
    }
  }
}

}  // namespace detail

inline Observable kronecker_project(const TorusSystem& system, const Observable& f) {
  if (system.dimension() != f.dimension())
    throw std::invalid_argument("kronecker_project: dimension mismatch");
  std::vector<std::size_t> fibers;
  detail::collect_fiber_coords(system, 0, fibers);
  if (fibers.empty()) return f;
  std::vector<ObservableTerm> kept;
  for (const auto& t : f.terms()) {
    bool drop = false;
    for (std::size_t i : fibers)
      if (t.frequency[i] != 0) {
        drop = true;
        break;
      }
    if (!drop) kept.push_back(t);
  }
  return Observable(f.dimension(), std::move(kept));
}

// ---------------------------------------------------------------------------
// BoundedSequence: finite complex sequence with a certified sup bound.

class BoundedSequence {
 public:
  BoundedSequence(std::vector<cplx> values, double bound)
      : values_(std::move(values)), bound_(bound) {
    if (values_.empty()) throw std::invalid_argument("BoundedSequence: length must be >= 1");
    if (bound_ < 0.0) throw std::invalid_argument("BoundedSequence: bound must be >= 0");
    for (const cplx& v : values_)
      if (std::abs(v) > bound_ + 1e-12)
        throw std::invalid_argument("BoundedSequence: value exceeds declared bound");
  }

  static BoundedSequence from_values(std::vector<cplx> values) {
    double b = 0.0;
    for (const cplx& v : values) b = std::max(b, std::abs(v));
    return BoundedSequence(std::move(values), b);
  }

  static BoundedSequence ones(std::size_t n) {
    return BoundedSequence(std::vector<cplx>(n, cplx{1.0, 0.0}), 1.0);
  }

  std::size_t size() const { return values_.size(); }
  double bound() const { return bound_; }
  const cplx& operator[](std::size_t k) const { return values_[k]; }
  const std::vector<cplx>& values() const { return values_; }

 private:
  std::vector<cplx> values_;
  double bound_;
};

inline BoundedSequence conjugate(const BoundedSequence& s) {
  std::vector<cplx> v(s.size());
  for (std::size_t k = 0; k < s.size(); ++k) v[k] = std::conj(s[k]);
  return BoundedSequence(std::move(v), s.bound());
}

inline BoundedSequence pointwise_product(const BoundedSequence& a, const BoundedSequence& b) {
  if (a.size() != b.size())
    throw std::invalid_argument("pointwise_product: length mismatch");
  std::vector<cplx> v(a.size());
  for (std::size_t k = 0; k < a.size(); ++k) v[k] = a[k] * b[k];
  return BoundedSequence(std::move(v), a.bound() * b.bound());
}

// values[k] * e^{2 pi i k theta}
inline BoundedSequence modulate(const BoundedSequence& s, double theta) {
  std::vector<cplx> v(s.size());
  for (std::size_t k = 0; k < s.size(); ++k)
    v[k] = s[k] * unit_phase(mulmod1(static_cast<std::uint64_t>(k), theta));
  return BoundedSequence(std::move(v), s.bound());
}

inline BoundedSequence truncate(const BoundedSequence& s, std::size_t n) {
  if (n == 0 || n > s.size()) throw std::invalid_argument("truncate: bad length");
  return BoundedSequence(std::vector<cplx>(s.values().begin(), s.values().begin() + n), s.bound());
}

// ---------------------------------------------------------------------------
// Orbit and special sequences.

// values[n] = f(T^n p), n = 0..N-1; bound = sum of |coefficients|.
inline BoundedSequence orbit_sequence(const TorusSystem& system, const TorusPoint& p,
                                      const Observable& f, std::size_t N) {
  if (N == 0) throw std::invalid_argument("orbit_sequence: N must be >= 1");
  if (system.dimension() != p.dimension() || f.dimension() != p.dimension())
    throw std::invalid_argument("orbit_sequence: dimension mismatch");
  std::vector<cplx> v(N);
  for (std::size_t n = 0; n < N; ++n)
    v[n] = f.evaluate(iterate(system, p, static_cast<std::int64_t>(n)));
  return BoundedSequence(std::move(v), f.sup_bound());
}

// +-1 blocks: block k has length growth^k and sign (-1)^k, truncated at N.
// The averages 1/N sum v_n then oscillate between roughly +-(growth-1)/(growth+1)
// and never settle.
inline BoundedSequence vn_sequence(std::size_t N, std::uint64_t growth = 4) {
  if (N == 0) throw std::invalid_argument("vn_sequence: N must be >= 1");
  if (growth < 2) throw std::invalid_argument("vn_sequence: growth must be >= 2");
  std::vector<cplx> v;
  v.reserve(N);
  double sign = 1.0;
  std::uint64_t block_len = 1;
  while (v.size() < N) {
    for (std::uint64_t i = 0; i < block_len && v.size() < N; ++i) v.emplace_back(sign, 0.0);
    sign = -sign;
    block_len *= growth;
  }
  return BoundedSequence(std::move(v), 1.0);
}

// values[n] = e^{2 pi i n^2 alpha}
inline BoundedSequence weyl_sequence(double alpha, std::size_t N) {
  if (N == 0) throw std::invalid_argument("weyl_sequence: N must be >= 1");
  if (N > (1ull << 31)) throw std::invalid_argument("weyl_sequence: N too large");
  std::vector<cplx> v(N);
  for (std::size_t n = 0; n < N; ++n) {
    std::uint64_t nn = static_cast<std::uint64_t>(n) * static_cast<std::uint64_t>(n);
    v[n] = unit_phase(mulmod1(nn, alpha));
  }
  return BoundedSequence(std::move(v), 1.0);
}

}  // namespace cubeavg
