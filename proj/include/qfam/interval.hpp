#pragma once

#include <mpfr.h>

#include <string>
#include <utility>

#include "qfam/big_scalar.hpp"
#include "qfam/error.hpp"

namespace qfam {

// Closed interval [lo, hi] with representable endpoints, lo <= hi.
// Degenerate singletons are allowed.
struct RInterval {
  BigScalar lo;
  BigScalar hi;

  explicit RInterval(Precision prec = kDefaultPrecision) : lo(prec), hi(prec) {}

  RInterval(BigScalar lower, BigScalar upper) : lo(std::move(lower)), hi(std::move(upper)) {
    if (hi < lo) {
      throw ContractError("RInterval: lo > hi (" + lo.to_decimal(20) + " > " + hi.to_decimal(20) + ")");
    }
  }

  static RInterval point(const BigScalar& x) { return RInterval(x, x); }

  Precision precision() const noexcept { return lo.precision(); }

  bool contains(const BigScalar& x) const noexcept { return lo <= x && x <= hi; }
  bool contains_zero() const noexcept { return lo.sign() <= 0 && hi.sign() >= 0; }
  bool definite_sign() const noexcept { return !contains_zero(); }
  bool is_degenerate() const noexcept { return lo == hi; }

  bool subset_of(const RInterval& other) const noexcept { return other.lo <= lo && hi <= other.hi; }
  bool intersects(const RInterval& other) const noexcept { return !(hi < other.lo || other.hi < lo); }

  friend bool operator==(const RInterval&, const RInterval&) = default;
};

inline BigScalar width(const RInterval& x, Rounding r) { return sub(x.hi, x.lo, r); }

inline void width(BigScalar& out, const RInterval& x, Rounding r) { sub(out, x.hi, x.lo, r); }

inline RInterval hull(const RInterval& x, const RInterval& y) {
  return RInterval(min(x.lo, y.lo), max(x.hi, y.hi));
}

namespace detail {

// Running extremum over the four endpoint products of x*y, rounded in `r`.
// keep_larger selects max; otherwise min.
inline void product_extremum(BigScalar& out, BigScalar& scratch, const RInterval& x, const RInterval& y,
                             Rounding r, bool keep_larger) {
  const BigScalar* xs[2] = {&x.lo, &x.hi};
  const BigScalar* ys[2] = {&y.lo, &y.hi};
  bool first = true;
  for (const BigScalar* u : xs) {
    for (const BigScalar* v : ys) {
      mul(scratch, *u, *v, r);
      if (first || (keep_larger ? out < scratch : scratch < out)) mpfr_swap(out.get(), scratch.get());
      first = false;
    }
  }
}

}  // namespace detail

// Lower bound on min{-2uv : u in x, v in y}. `scratch` must share the precision of `out`.
inline void g_lower(BigScalar& out, BigScalar& scratch, const RInterval& x, const RInterval& y) {
  // min(-2uv) = -2 max(uv); multiplying by -2 is exact.
  detail::product_extremum(out, scratch, x, y, Rounding::Up, true);
  mpfr_mul_si(out.get(), out.get(), -2, MPFR_RNDD);
  out.check_finite("g_lower");
}

// Upper bound on max{-2uv : u in x, v in y}.
inline void g_upper(BigScalar& out, BigScalar& scratch, const RInterval& x, const RInterval& y) {
  detail::product_extremum(out, scratch, x, y, Rounding::Down, false);
  mpfr_mul_si(out.get(), out.get(), -2, MPFR_RNDU);
  out.check_finite("g_upper");
}

inline BigScalar g_lower(const RInterval& x, const RInterval& y) {
  const Precision p = std::max(x.precision(), y.precision());
  BigScalar out(p), scratch(p);
  g_lower(out, scratch, x, y);
  return out;
}

inline BigScalar g_upper(const RInterval& x, const RInterval& y) {
  const Precision p = std::max(x.precision(), y.precision());
  BigScalar out(p), scratch(p);
  g_upper(out, scratch, x, y);
  return out;
}

// Bound on a - x^2 in direction `mode`: x^2 is rounded the opposite way, the
// subtraction in `mode`. `out` may alias neither `a` nor `x`.
inline void f_eval(BigScalar& out, const BigScalar& a, const BigScalar& x, Rounding mode) {
  square(out, x, opposite(mode));
  sub(out, a, out, mode);
}

inline BigScalar f_eval(const BigScalar& a, const BigScalar& x, Rounding mode) {
  BigScalar out(std::max(a.precision(), x.precision()));
  f_eval(out, a, x, mode);
  return out;
}

}  // namespace qfam
