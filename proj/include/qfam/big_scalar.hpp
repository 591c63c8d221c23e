#pragma once

// Arbitrary-precision binary floating point with an explicit rounding
// direction on every operation. Thin RAII layer over MPFR.

#include <mpfr.h>

#include <algorithm>
#include <cctype>
#include <compare>
#include <cstdio>
#include <cstdlib>
#include <memory>
#include <string>
#include <string_view>
#include <utility>

#include "qfam/error.hpp"

namespace qfam {

using Precision = mpfr_prec_t;

inline constexpr Precision kDefaultPrecision = 250;
// 2^-250 is roughly 10^-80.
inline constexpr int kDefaultDecimalDigits = 80;

enum class Rounding { Down, Up, Nearest };

constexpr mpfr_rnd_t to_mpfr(Rounding r) noexcept {
  switch (r) {
    case Rounding::Down:
      return MPFR_RNDD;
    case Rounding::Up:
      return MPFR_RNDU;
    case Rounding::Nearest:
      break;
  }
  return MPFR_RNDN;
}

constexpr Rounding opposite(Rounding r) noexcept {
  switch (r) {
    case Rounding::Down:
      return Rounding::Up;
    case Rounding::Up:
      return Rounding::Down;
    case Rounding::Nearest:
      break;
  }
  return Rounding::Nearest;
}

constexpr std::string_view to_string(Rounding r) noexcept {
  switch (r) {
    case Rounding::Down:
      return "down";
    case Rounding::Up:
      return "up";
    case Rounding::Nearest:
      break;
  }
  return "nearest";
}

namespace detail {

struct MpfrFree {
  void operator()(char* p) const noexcept { mpfr_free_str(p); }
};

inline std::string take_mpfr_string(char* raw) {
  if (raw == nullptr) throw std::bad_alloc();
  std::unique_ptr<char, MpfrFree> owned(raw);
  return std::string(owned.get());
}

inline bool valid_decimal_numeral(std::string_view s) {
  std::size_t i = 0;
  if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
  std::size_t digits = 0;
  while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
  if (i < s.size() && s[i] == '.') {
    ++i;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++digits;
  }
  if (digits == 0) return false;
  if (i < s.size() && (s[i] == 'e' || s[i] == 'E')) {
    ++i;
    if (i < s.size() && (s[i] == '+' || s[i] == '-')) ++i;
    std::size_t exp_digits = 0;
    while (i < s.size() && std::isdigit(static_cast<unsigned char>(s[i]))) ++i, ++exp_digits;
    if (exp_digits == 0) return false;
  }
  return i == s.size();
}

}  // namespace detail

// A finite number exactly representable at its precision. Copies are exact
// (the copy adopts the source precision).
class BigScalar {
 public:
  explicit BigScalar(Precision prec = kDefaultPrecision) {
    check_precision(prec);
    mpfr_init2(value_, prec);
    mpfr_set_zero(value_, 1);
  }

  BigScalar(long v, Precision prec) : BigScalar(prec) {
    if (mpfr_set_si(value_, v, MPFR_RNDN) != 0) {
      throw ArithmeticError("integer " + std::to_string(v) + " not representable at precision " +
                            std::to_string(prec));
    }
  }

  static BigScalar from_double(double v, Precision prec, Rounding r = Rounding::Nearest) {
    BigScalar out(prec);
    mpfr_set_d(out.value_, v, to_mpfr(r));
    out.check_finite("from_double");
    return out;
  }

  BigScalar(const BigScalar& other) {
    mpfr_init2(value_, mpfr_get_prec(other.value_));
    mpfr_set(value_, other.value_, MPFR_RNDN);
  }

  BigScalar(BigScalar&& other) noexcept {
    value_[0] = other.value_[0];
    other.value_->_mpfr_d = nullptr;
  }

  BigScalar& operator=(const BigScalar& other) {
    if (this == &other) return *this;
    const Precision p = mpfr_get_prec(other.value_);
    if (value_->_mpfr_d == nullptr) {
      mpfr_init2(value_, p);
    } else if (mpfr_get_prec(value_) != p) {
      mpfr_set_prec(value_, p);
    }
    mpfr_set(value_, other.value_, MPFR_RNDN);
    return *this;
  }

  BigScalar& operator=(BigScalar&& other) noexcept {
    std::swap(value_[0], other.value_[0]);
    return *this;
  }

  ~BigScalar() {
    if (value_->_mpfr_d != nullptr) mpfr_clear(value_);
  }

  Precision precision() const noexcept { return mpfr_get_prec(value_); }

  // Changes precision, rounding the current value in direction r.
  void set_precision(Precision prec, Rounding r = Rounding::Nearest) {
    check_precision(prec);
    mpfr_prec_round(value_, prec, to_mpfr(r));
  }

  int sign() const noexcept { return mpfr_sgn(value_); }
  bool is_zero() const noexcept { return mpfr_zero_p(value_) != 0; }

  mpfr_srcptr get() const noexcept { return value_; }
  mpfr_ptr get() noexcept { return value_; }

  double to_double(Rounding r = Rounding::Nearest) const noexcept {
    return mpfr_get_d(value_, to_mpfr(r));
  }

  // Scientific notation with `digits` significant decimal digits.
  std::string to_decimal(int digits = kDefaultDecimalDigits, Rounding r = Rounding::Nearest) const {
    if (digits < 1) throw ContractError("to_decimal: digits must be >= 1");
    char* raw = nullptr;
    if (mpfr_asprintf(&raw, "%.*R*e", digits - 1, to_mpfr(r), value_) < 0) throw std::bad_alloc();
    return detail::take_mpfr_string(raw);
  }

  // `%g`-style rendering with `digits` significant digits.
  std::string to_general(int digits, Rounding r = Rounding::Nearest) const {
    if (digits < 1) throw ContractError("to_general: digits must be >= 1");
    char* raw = nullptr;
    if (mpfr_asprintf(&raw, "%.*R*g", digits, to_mpfr(r), value_) < 0) throw std::bad_alloc();
    return detail::take_mpfr_string(raw);
  }

  // Exact hexadecimal floating-point form, e.g. "0x1.f5c28f5c28f5cp+0".
  std::string to_hex() const {
    char* raw = nullptr;
    if (mpfr_asprintf(&raw, "%Ra", value_) < 0) throw std::bad_alloc();
    return detail::take_mpfr_string(raw);
  }

  void check_finite(const char* op) const {
    if (mpfr_number_p(value_) == 0) {
      throw ArithmeticError(std::string("non-finite result in ") + op);
    }
  }

  friend bool operator==(const BigScalar& x, const BigScalar& y) noexcept {
    return mpfr_equal_p(x.value_, y.value_) != 0;
  }

  friend std::strong_ordering operator<=>(const BigScalar& x, const BigScalar& y) noexcept {
    const int c = mpfr_cmp(x.value_, y.value_);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

  friend bool operator==(const BigScalar& x, long y) noexcept { return mpfr_cmp_si(x.value_, y) == 0; }

  friend std::strong_ordering operator<=>(const BigScalar& x, long y) noexcept {
    const int c = mpfr_cmp_si(x.value_, y);
    return c < 0 ? std::strong_ordering::less
                 : (c > 0 ? std::strong_ordering::greater : std::strong_ordering::equal);
  }

 private:
  static void check_precision(Precision prec) {
    if (prec < MPFR_PREC_MIN || prec > MPFR_PREC_MAX) {
      throw ConfigError("precision out of range: " + std::to_string(prec));
    }
  }

  mpfr_t value_;
};

// Nearest representable number to a decimal numeral such as "-1.4e-3".
inline BigScalar parse_decimal(std::string_view text, Precision prec = kDefaultPrecision) {
  if (!detail::valid_decimal_numeral(text)) {
    throw ParseError("malformed decimal numeral: '" + std::string(text) + "'");
  }
  const std::string buf(text);
  BigScalar out(prec);
  char* end = nullptr;
  mpfr_strtofr(out.get(), buf.c_str(), &end, 10, MPFR_RNDN);
  if (end != buf.c_str() + buf.size()) {
    throw ParseError("malformed decimal numeral: '" + buf + "'");
  }
  out.check_finite("parse_decimal");
  return out;
}

// Parses the output of BigScalar::to_hex(); fails unless the value is exact at `prec`.
inline BigScalar parse_hex(std::string_view text, Precision prec = kDefaultPrecision) {
  const std::string buf(text);
  BigScalar out(prec);
  char* end = nullptr;
  const int ternary = mpfr_strtofr(out.get(), buf.c_str(), &end, 0, MPFR_RNDN);
  if (buf.empty() || end != buf.c_str() + buf.size()) {
    throw ParseError("malformed hex float: '" + buf + "'");
  }
  if (ternary != 0) {
    throw ParseError("hex float '" + buf + "' is not exact at precision " + std::to_string(prec));
  }
  out.check_finite("parse_hex");
  return out;
}

enum class OpKind { Add, Sub, Mul, Div, Square, Neg, Log, Sqrt };

constexpr bool is_binary(OpKind k) noexcept {
  return k == OpKind::Add || k == OpKind::Sub || k == OpKind::Mul || k == OpKind::Div;
}

// In-place forms write at the precision of `out`; aliasing is allowed.

inline void add(BigScalar& out, const BigScalar& x, const BigScalar& y, Rounding r) {
  mpfr_add(out.get(), x.get(), y.get(), to_mpfr(r));
  out.check_finite("add");
}

inline void sub(BigScalar& out, const BigScalar& x, const BigScalar& y, Rounding r) {
  mpfr_sub(out.get(), x.get(), y.get(), to_mpfr(r));
  out.check_finite("sub");
}

inline void mul(BigScalar& out, const BigScalar& x, const BigScalar& y, Rounding r) {
  mpfr_mul(out.get(), x.get(), y.get(), to_mpfr(r));
  out.check_finite("mul");
}

inline void div(BigScalar& out, const BigScalar& x, const BigScalar& y, Rounding r) {
  if (y.is_zero()) throw ArithmeticError("division by zero");
  mpfr_div(out.get(), x.get(), y.get(), to_mpfr(r));
  out.check_finite("div");
}

inline void square(BigScalar& out, const BigScalar& x, Rounding r) {
  mpfr_sqr(out.get(), x.get(), to_mpfr(r));
  out.check_finite("square");
}

inline void neg(BigScalar& out, const BigScalar& x, Rounding r) {
  mpfr_neg(out.get(), x.get(), to_mpfr(r));
}

inline void log(BigScalar& out, const BigScalar& x, Rounding r) {
  if (x.sign() <= 0) throw ArithmeticError("log of non-positive value");
  mpfr_log(out.get(), x.get(), to_mpfr(r));
  out.check_finite("log");
}

inline void sqrt(BigScalar& out, const BigScalar& x, Rounding r) {
  if (x.sign() < 0) throw ArithmeticError("sqrt of negative value");
  mpfr_sqrt(out.get(), x.get(), to_mpfr(r));
  out.check_finite("sqrt");
}

// Value-returning forms compute at the larger operand precision.

inline BigScalar add(const BigScalar& x, const BigScalar& y, Rounding r) {
  BigScalar out(std::max(x.precision(), y.precision()));
  add(out, x, y, r);
  return out;
}

inline BigScalar sub(const BigScalar& x, const BigScalar& y, Rounding r) {
  BigScalar out(std::max(x.precision(), y.precision()));
  sub(out, x, y, r);
  return out;
}

inline BigScalar mul(const BigScalar& x, const BigScalar& y, Rounding r) {
  BigScalar out(std::max(x.precision(), y.precision()));
  mul(out, x, y, r);
  return out;
}

inline BigScalar div(const BigScalar& x, const BigScalar& y, Rounding r) {
  BigScalar out(std::max(x.precision(), y.precision()));
  div(out, x, y, r);
  return out;
}

inline BigScalar square(const BigScalar& x, Rounding r) {
  BigScalar out(x.precision());
  square(out, x, r);
  return out;
}

inline BigScalar neg(const BigScalar& x) {
  BigScalar out(x.precision());
  neg(out, x, Rounding::Nearest);
  return out;
}

inline BigScalar log(const BigScalar& x, Rounding r) {
  BigScalar out(x.precision());
  log(out, x, r);
  return out;
}

inline BigScalar sqrt(const BigScalar& x, Rounding r) {
  BigScalar out(x.precision());
  sqrt(out, x, r);
  return out;
}

inline BigScalar rounded_op(OpKind kind, const BigScalar& x, const BigScalar& y, Rounding r) {
  switch (kind) {
    case OpKind::Add:
      return add(x, y, r);
    case OpKind::Sub:
      return sub(x, y, r);
    case OpKind::Mul:
      return mul(x, y, r);
    case OpKind::Div:
      return div(x, y, r);
    default:
      throw ContractError("rounded_op: unary operation given two operands");
  }
}

inline BigScalar rounded_op(OpKind kind, const BigScalar& x, Rounding r) {
  switch (kind) {
    case OpKind::Square:
      return square(x, r);
    case OpKind::Neg:
      return neg(x);
    case OpKind::Log:
      return log(x, r);
    case OpKind::Sqrt:
      return sqrt(x, r);
    default:
      throw ContractError("rounded_op: binary operation given one operand");
  }
}

inline const BigScalar& min(const BigScalar& x, const BigScalar& y) noexcept { return y < x ? y : x; }
inline const BigScalar& max(const BigScalar& x, const BigScalar& y) noexcept { return x < y ? y : x; }

inline BigScalar abs(const BigScalar& x) {
  BigScalar out(x.precision());
  mpfr_abs(out.get(), x.get(), MPFR_RNDN);
  return out;
}

}  // namespace qfam
