#pragma once

// Reference values computed directly with mpfr_t at four times the working
// precision and round-to-nearest. Shares no code with the library beyond
// reading endpoint values out of a BigScalar.

#include <mpfr.h>

#include <algorithm>
#include <cstddef>
#include <string>
#include <vector>

#include "qfam/big_scalar.hpp"

namespace oracle {

class Real {
 public:
  explicit Real(mpfr_prec_t prec) { mpfr_init2(v_, prec); mpfr_set_zero(v_, 1); }
  Real(const qfam::BigScalar& x, mpfr_prec_t prec) : Real(prec) { mpfr_set(v_, x.get(), MPFR_RNDN); }
  Real(const char* decimal, mpfr_prec_t prec) : Real(prec) { mpfr_set_str(v_, decimal, 10, MPFR_RNDN); }
  Real(const Real& o) : Real(mpfr_get_prec(o.v_)) { mpfr_set(v_, o.v_, MPFR_RNDN); }
  Real& operator=(const Real& o) {
    mpfr_set(v_, o.v_, MPFR_RNDN);
    return *this;
  }
  ~Real() { mpfr_clear(v_); }

  mpfr_ptr get() { return v_; }
  mpfr_srcptr get() const { return v_; }
  double to_double() const { return mpfr_get_d(v_, MPFR_RNDN); }

 private:
  mpfr_t v_;
};

inline mpfr_prec_t high(mpfr_prec_t p) { return 4 * p; }

// Point on the critical orbit of a - x^2 together with its derivatives:
// c_{k+1} = a - c_k^2, c'_{k+1} = 1 - 2 c_k c'_k, f_{k+1} = -2 c_k f_k,
// d_{k+1} = d_k + 1 / f_{k+1}; c_0 = a, c'_0 = f_0 = d_0 = 1.
struct OrbitPoint {
  Real c, c_prime, f_prime, d_ratio;
  explicit OrbitPoint(mpfr_prec_t prec) : c(prec), c_prime(prec), f_prime(prec), d_ratio(prec) {}
};

inline std::vector<OrbitPoint> orbit(const qfam::BigScalar& a, std::size_t n) {
  const mpfr_prec_t p = high(a.precision());
  std::vector<OrbitPoint> out;
  OrbitPoint cur(p);
  mpfr_set(cur.c.get(), a.get(), MPFR_RNDN);
  mpfr_set_ui(cur.c_prime.get(), 1, MPFR_RNDN);
  mpfr_set_ui(cur.f_prime.get(), 1, MPFR_RNDN);
  mpfr_set_ui(cur.d_ratio.get(), 1, MPFR_RNDN);
  out.push_back(cur);
  Real t(p);
  for (std::size_t k = 0; k < n; ++k) {
    OrbitPoint next(p);
    mpfr_sqr(t.get(), cur.c.get(), MPFR_RNDN);
    mpfr_sub(next.c.get(), a.get(), t.get(), MPFR_RNDN);
    mpfr_mul(t.get(), cur.c.get(), cur.c_prime.get(), MPFR_RNDN);
    mpfr_mul_si(t.get(), t.get(), -2, MPFR_RNDN);
    mpfr_add_ui(next.c_prime.get(), t.get(), 1, MPFR_RNDN);
    mpfr_mul(t.get(), cur.c.get(), cur.f_prime.get(), MPFR_RNDN);
    mpfr_mul_si(next.f_prime.get(), t.get(), -2, MPFR_RNDN);
    mpfr_ui_div(t.get(), 1, next.f_prime.get(), MPFR_RNDN);
    mpfr_add(next.d_ratio.get(), cur.d_ratio.get(), t.get(), MPFR_RNDN);
    out.push_back(next);
    cur = next;
  }
  return out;
}

// -2 * x * y
inline Real minus_two_product(const qfam::BigScalar& x, const qfam::BigScalar& y) {
  Real r(high(std::max(x.precision(), y.precision())));
  mpfr_mul(r.get(), x.get(), y.get(), MPFR_RNDN);
  mpfr_mul_si(r.get(), r.get(), -2, MPFR_RNDN);
  return r;
}

// a - x^2
inline Real f(const qfam::BigScalar& a, const qfam::BigScalar& x) {
  Real r(high(std::max(a.precision(), x.precision())));
  mpfr_sqr(r.get(), x.get(), MPFR_RNDN);
  mpfr_sub(r.get(), a.get(), r.get(), MPFR_RNDN);
  return r;
}

inline Real sum_of_widths(const std::vector<std::pair<qfam::BigScalar, qfam::BigScalar>>& spans, mpfr_prec_t prec) {
  Real total(high(prec)), w(high(prec));
  for (const auto& [lo, hi] : spans) {
    mpfr_sub(w.get(), hi.get(), lo.get(), MPFR_RNDN);
    mpfr_add(total.get(), total.get(), w.get(), MPFR_RNDN);
  }
  return total;
}

inline int cmp(const qfam::BigScalar& x, const Real& y) { return mpfr_cmp(x.get(), y.get()); }

// lo <= y <= hi
inline bool within(const qfam::BigScalar& lo, const Real& y, const qfam::BigScalar& hi) {
  return cmp(lo, y) <= 0 && cmp(hi, y) >= 0;
}

}  // namespace oracle
