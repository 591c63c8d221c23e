#pragma once

// Locating parameters whose n-th critical image crosses a level, and cutting
// out the part of a parameter interval whose image may meet (-delta, delta).

#include <mpfr.h>

#include <cstddef>
#include <optional>

#include "qfam/big_scalar.hpp"
#include "qfam/interval.hpp"
#include "qfam/orbit.hpp"
#include "qfam/point_orbit.hpp"

namespace qfam {

// Nearest-rounded midpoint (a + b) / 2.
inline void midpoint(BigScalar& out, const BigScalar& a, const BigScalar& b) {
  mpfr_add(out.get(), a.get(), b.get(), MPFR_RNDN);
  mpfr_div_2ui(out.get(), out.get(), 1, MPFR_RNDN);
  out.check_finite("midpoint");
}

inline BigScalar midpoint(const BigScalar& a, const BigScalar& b) {
  BigScalar out(std::max(a.precision(), b.precision()));
  midpoint(out, a, b);
  return out;
}

// Returns p with the certified enclosure of c_n(p) at or below v (`below`)
// or at or above v (!below). c_n must be monotone on omega in the direction
// given by `increasing`. Falls back to the matching endpoint of omega when no
// midpoint certifies.
inline BigScalar bisection(const ParamInterval& omega, const BigScalar& v, std::size_t n, unsigned steps,
                           bool increasing, bool below, PointOrbitEvaluator& eval) {
  BigScalar lo = omega.a;
  BigScalar hi = omega.b;
  BigScalar m(omega.precision());
  // The candidate is whichever end of [lo, hi] is known to satisfy the bound.
  const bool candidate_is_lo = (increasing == below);
  for (unsigned i = 0; i < steps; ++i) {
    midpoint(m, lo, hi);
    const RInterval& c = eval.enclose(m, n);
    const bool certified = below ? (c.hi <= v) : (c.lo >= v);
    // Move the candidate end onto m when certified, otherwise shrink the other end.
    if (certified == candidate_is_lo) {
      mpfr_swap(lo.get(), m.get());
    } else {
      mpfr_swap(hi.get(), m.get());
    }
  }
  return candidate_is_lo ? lo : hi;
}

inline BigScalar bisection(const ParamInterval& omega, const BigScalar& v, std::size_t n, unsigned steps,
                           bool increasing, bool below) {
  PointOrbitEvaluator eval(omega.precision());
  return bisection(omega, v, n, steps, increasing, below, eval);
}

struct ChopResult {
  std::optional<ParamInterval> left;
  ParamInterval excluded;
  std::optional<ParamInterval> right;
  // inner enclosure ended exactly on -delta or +delta.
  bool boundary_touch = false;
};

// Splits omega into left / excluded / right around the parameters whose n-th
// image may fall in (-delta, delta). `inner` is the inner enclosure of omega_n.
inline ChopResult chop_at_delta(const ParamInterval& omega, std::size_t n, const RInterval& inner, bool increasing,
                                const BigScalar& delta, unsigned steps, PointOrbitEvaluator& eval) {
  const BigScalar neg_delta = neg(delta);
  BigScalar a_cut = omega.a;
  BigScalar b_cut = omega.b;
  if (inner.lo < neg_delta) {
    if (increasing) {
      a_cut = bisection(omega, neg_delta, n, steps, true, true, eval);
    } else {
      b_cut = bisection(omega, neg_delta, n, steps, false, true, eval);
    }
  }
  if (inner.hi > delta) {
    if (increasing) {
      b_cut = bisection(omega, delta, n, steps, true, false, eval);
    } else {
      a_cut = bisection(omega, delta, n, steps, false, false, eval);
    }
  }
  ChopResult out{std::nullopt, ParamInterval(a_cut, b_cut), std::nullopt,
                 inner.lo == neg_delta || inner.hi == delta};
  if (omega.a != a_cut) out.left.emplace(omega.a, a_cut);
  if (omega.b != b_cut) out.right.emplace(b_cut, omega.b);
  return out;
}

inline ChopResult chop_at_delta(const ParamInterval& omega, std::size_t n, const RInterval& inner, bool increasing,
                                const BigScalar& delta, unsigned steps) {
  PointOrbitEvaluator eval(omega.precision());
  return chop_at_delta(omega, n, inner, increasing, delta, steps, eval);
}

}  // namespace qfam
