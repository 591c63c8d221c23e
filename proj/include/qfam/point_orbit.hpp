#pragma once

#include <mpfr.h>

#include <cstddef>
#include <utility>

#include "qfam/big_scalar.hpp"
#include "qfam/interval.hpp"

namespace qfam {

// Rigorous enclosure of c_n(a) for one representable parameter, iterating
// x -> a - x^2 on an interval that starts at [a, a]. On definite-sign
// intervals the endpoint updates are exactly those of OrbitStepper, so the
// bounds agree bit for bit with the a/b tracks of the interval iteration.
// Every caller must go through this single routine.
class PointOrbitEvaluator {
 public:
  explicit PointOrbitEvaluator(Precision prec = kDefaultPrecision)
      : cur_(prec), next_(prec), scratch_(prec) {}

  // The returned reference is valid until the next call.
  const RInterval& enclose(const BigScalar& a, std::size_t n) {
    cur_.lo = a;
    cur_.hi = a;
    for (std::size_t k = 0; k < n; ++k) {
      if (cur_.hi.sign() < 0) {
        f_eval(next_.lo, a, cur_.lo, Rounding::Down);
        f_eval(next_.hi, a, cur_.hi, Rounding::Up);
      } else if (cur_.lo.sign() > 0) {
        f_eval(next_.lo, a, cur_.hi, Rounding::Down);
        f_eval(next_.hi, a, cur_.lo, Rounding::Up);
      } else {
        // [-u, v]^2 = [0, max(u, v)^2]
        square(next_.lo, cur_.lo, Rounding::Up);
        square(scratch_, cur_.hi, Rounding::Up);
        if (next_.lo < scratch_) mpfr_swap(next_.lo.get(), scratch_.get());
        sub(next_.lo, a, next_.lo, Rounding::Down);
        next_.hi = a;
      }
      std::swap(cur_, next_);
    }
    return cur_;
  }

 private:
  RInterval cur_;
  RInterval next_;
  BigScalar scratch_;
};

inline RInterval point_orbit_enclosure(const BigScalar& a, std::size_t n) {
  PointOrbitEvaluator eval(a.precision());
  return eval.enclose(a, n);
}

}  // namespace qfam
