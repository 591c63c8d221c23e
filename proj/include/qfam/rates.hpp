#pragma once

// Lower bounds on the exponential growth rates (1/N) log|(f^N)'| and
// (1/N) log|c_N'|, and an upper bound on the distortion sup|d| / inf|d| of the
// derivative ratio, from final enclosures.

#include <mpfr.h>

#include <optional>

#include "qfam/big_scalar.hpp"
#include "qfam/error.hpp"
#include "qfam/interval.hpp"

namespace qfam {

namespace detail {

inline void abs_extremes(BigScalar& smaller, BigScalar& larger, const RInterval& x) {
  mpfr_abs(smaller.get(), x.lo.get(), MPFR_RNDN);
  mpfr_abs(larger.get(), x.hi.get(), MPFR_RNDN);
  if (larger < smaller) mpfr_swap(smaller.get(), larger.get());
}

}  // namespace detail

// (1/N) log min|x|, rounded down. Negative when min|x| < 1.
inline BigScalar growth_rate_lower(const RInterval& deriv, unsigned escape_time) {
  if (deriv.contains_zero()) throw ContractError("growth_rate_lower: enclosure contains zero");
  if (escape_time == 0) throw ContractError("growth_rate_lower: escape time must be positive");
  BigScalar smaller(deriv.precision()), larger(deriv.precision());
  detail::abs_extremes(smaller, larger, deriv);
  BigScalar out(deriv.precision());
  log(out, smaller, Rounding::Down);
  mpfr_div_ui(out.get(), out.get(), escape_time, MPFR_RNDD);
  return out;
}

// max|x| / min|x|, rounded up.
inline BigScalar distortion_upper(const RInterval& ratio) {
  if (ratio.contains_zero()) throw ContractError("distortion_upper: enclosure contains zero");
  BigScalar smaller(ratio.precision()), larger(ratio.precision());
  detail::abs_extremes(smaller, larger, ratio);
  return div(larger, smaller, Rounding::Up);
}

struct RateBounds {
  BigScalar rate_f_lower;
  BigScalar rate_c_lower;
  // Absent when the ratio enclosure straddles zero.
  std::optional<BigScalar> distortion_upper;
};

inline RateBounds compute_rates(unsigned escape_time, const RInterval& f_prime, const RInterval& c_prime,
                                const RInterval& d_ratio) {
  RateBounds out{growth_rate_lower(f_prime, escape_time), growth_rate_lower(c_prime, escape_time), std::nullopt};
  if (d_ratio.definite_sign()) out.distortion_upper = distortion_upper(d_ratio);
  return out;
}

}  // namespace qfam
