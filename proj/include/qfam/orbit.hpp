#pragma once

// Inductive enclosures of the critical orbit of f_a(x) = a - x^2 over a
// parameter interval omega = [a, b]. For each step n the state carries
// enclosures of c_n(a), c_n(b), the parameter derivative c_n', the phase
// derivative (f^n)' along the critical orbit and their ratio, plus outer and
// (when the endpoint enclosures are disjoint) inner enclosures of omega_n.

#include <mpfr.h>

#include <cstddef>
#include <optional>
#include <string_view>
#include <utility>

#include "qfam/big_scalar.hpp"
#include "qfam/config.hpp"
#include "qfam/error.hpp"
#include "qfam/interval.hpp"

namespace qfam {

struct ParamInterval {
  BigScalar a;
  BigScalar b;

  ParamInterval(BigScalar lower, BigScalar upper) : a(std::move(lower)), b(std::move(upper)) {
    if (b < a) throw ContractError("ParamInterval: a > b");
  }

  Precision precision() const noexcept { return a.precision(); }
  bool degenerate() const noexcept { return a == b; }
  RInterval as_interval() const { return RInterval(a, b); }

  friend bool operator==(const ParamInterval&, const ParamInterval&) = default;
};

// Open neighbourhood (-radius, radius) of the critical point.
class CriticalBand {
 public:
  explicit CriticalBand(const BigScalar& radius) : radius_(radius), neg_radius_(neg(radius)) {}

  const BigScalar& radius() const noexcept { return radius_; }
  const BigScalar& neg_radius() const noexcept { return neg_radius_; }

  // interior(x) meets (-radius, radius).
  bool interior_hit(const RInterval& x) const noexcept {
    const BigScalar& lo = max(x.lo, neg_radius_);
    const BigScalar& hi = min(x.hi, radius_);
    return lo < hi;
  }

  // x ends exactly on +-radius without its interior meeting the band.
  bool touches_boundary(const RInterval& x) const noexcept {
    return !interior_hit(x) && (x.lo == radius_ || x.hi == neg_radius_);
  }

 private:
  BigScalar radius_;
  BigScalar neg_radius_;
};

struct OrbitState {
  std::size_t n = 0;
  RInterval a_image;      // c_n(a)
  RInterval b_image;      // c_n(b)
  RInterval param_deriv;  // c_n' over omega
  RInterval phase_deriv;  // (f^n)'(c_0) over omega
  RInterval deriv_ratio;  // c_n' / (f^n)' over omega
  RInterval outer;        // convex hull of a_image and b_image
  RInterval inner;        // gap between a_image and b_image; meaningful only if has_inner
  bool has_inner = false;

  explicit OrbitState(Precision prec = kDefaultPrecision)
      : a_image(prec),
        b_image(prec),
        param_deriv(prec),
        phase_deriv(prec),
        deriv_ratio(prec),
        outer(prec),
        inner(prec) {}

  std::optional<RInterval> inner_enclosure() const {
    if (!has_inner) return std::nullopt;
    return inner;
  }

  // c_n is increasing on omega; requires param_deriv of definite sign.
  bool increasing() const noexcept { return param_deriv.lo.sign() > 0; }
};

namespace detail {

inline void set_point(RInterval& x, const BigScalar& v) {
  x.lo = v;
  x.hi = v;
}

inline void set_one(RInterval& x) {
  mpfr_set_ui(x.lo.get(), 1, MPFR_RNDN);
  mpfr_set_ui(x.hi.get(), 1, MPFR_RNDN);
}

// Hull and gap of two disjoint intervals.
inline void set_outer_inner(OrbitState& s) {
  if (s.a_image.hi < s.b_image.lo) {
    s.outer.lo = s.a_image.lo;
    s.outer.hi = s.b_image.hi;
    s.inner.lo = s.a_image.hi;
    s.inner.hi = s.b_image.lo;
  } else {
    s.outer.lo = s.b_image.lo;
    s.outer.hi = s.a_image.hi;
    s.inner.lo = s.b_image.hi;
    s.inner.hi = s.a_image.lo;
  }
  s.has_inner = true;
}

}  // namespace detail

// Resets `s` to the n = 0 state of omega.
inline void init_state(OrbitState& s, const ParamInterval& omega) {
  if (!(omega.a < omega.b)) throw ContractError("init_state: interval must satisfy a < b");
  s.n = 0;
  detail::set_point(s.a_image, omega.a);
  detail::set_point(s.b_image, omega.b);
  detail::set_one(s.param_deriv);
  detail::set_one(s.phase_deriv);
  detail::set_one(s.deriv_ratio);
  detail::set_outer_inner(s);
}

inline OrbitState init_state(const ParamInterval& omega) {
  OrbitState s(omega.precision());
  init_state(s, omega);
  return s;
}

enum class StepEvent { Continue, ProblemC, InnerEmpty, ProblemF, HitDelta };

constexpr std::string_view to_string(StepEvent e) noexcept {
  switch (e) {
    case StepEvent::Continue:
      return "continue";
    case StepEvent::ProblemC:
      return "problem-c";
    case StepEvent::InnerEmpty:
      return "inner-empty";
    case StepEvent::ProblemF:
      return "problem-f";
    case StepEvent::HitDelta:
      break;
  }
  return "hit-delta";
}

// Performs one inductive step with reusable scratch storage.
class OrbitStepper {
 public:
  explicit OrbitStepper(Precision prec = kDefaultPrecision) : scratch_(prec), recip_(prec) {}

  // Writes step n+1 of `cur` into `next`. `next` holds a complete state only
  // when the result is Continue or HitDelta; the checks run in the order
  // c' sign, endpoint disjointness, f' sign.
  StepEvent advance(const OrbitState& cur, const ParamInterval& omega, const CriticalBand& band, OrbitState& next) {
    if (cur.outer.contains_zero() || band.interior_hit(cur.outer)) {
      throw ContractError("advance: outer enclosure must have definite sign and avoid the critical band");
    }
    touched_boundary_ = false;

    // c_{n+1} = 1 + g(c_n, outer_n)
    g_lower(next.param_deriv.lo, scratch_, cur.param_deriv, cur.outer);
    mpfr_add_ui(next.param_deriv.lo.get(), next.param_deriv.lo.get(), 1, MPFR_RNDD);
    g_upper(next.param_deriv.hi, scratch_, cur.param_deriv, cur.outer);
    mpfr_add_ui(next.param_deriv.hi.get(), next.param_deriv.hi.get(), 1, MPFR_RNDU);
    next.param_deriv.lo.check_finite("param_deriv");
    next.param_deriv.hi.check_finite("param_deriv");
    if (next.param_deriv.contains_zero()) return StepEvent::ProblemC;

    // f is increasing on the negative half-line and decreasing on the positive one.
    if (cur.a_image.hi.sign() < 0) {
      f_eval(next.a_image.lo, omega.a, cur.a_image.lo, Rounding::Down);
      f_eval(next.a_image.hi, omega.a, cur.a_image.hi, Rounding::Up);
      f_eval(next.b_image.lo, omega.b, cur.b_image.lo, Rounding::Down);
      f_eval(next.b_image.hi, omega.b, cur.b_image.hi, Rounding::Up);
    } else {
      f_eval(next.a_image.lo, omega.a, cur.a_image.hi, Rounding::Down);
      f_eval(next.a_image.hi, omega.a, cur.a_image.lo, Rounding::Up);
      f_eval(next.b_image.lo, omega.b, cur.b_image.hi, Rounding::Down);
      f_eval(next.b_image.hi, omega.b, cur.b_image.lo, Rounding::Up);
    }
    if (next.a_image.intersects(next.b_image)) return StepEvent::InnerEmpty;
    detail::set_outer_inner(next);

    g_lower(next.phase_deriv.lo, scratch_, cur.phase_deriv, cur.outer);
    g_upper(next.phase_deriv.hi, scratch_, cur.phase_deriv, cur.outer);
    if (next.phase_deriv.contains_zero()) return StepEvent::ProblemF;

    // d_{n+1} = d_n + 1 / f_{n+1}
    mpfr_ui_div(recip_.get(), 1, next.phase_deriv.hi.get(), MPFR_RNDD);
    add(next.deriv_ratio.lo, cur.deriv_ratio.lo, recip_, Rounding::Down);
    mpfr_ui_div(recip_.get(), 1, next.phase_deriv.lo.get(), MPFR_RNDU);
    add(next.deriv_ratio.hi, cur.deriv_ratio.hi, recip_, Rounding::Up);

    next.n = cur.n + 1;
    if (band.interior_hit(next.outer)) return StepEvent::HitDelta;
    touched_boundary_ = band.touches_boundary(next.outer);
    return StepEvent::Continue;
  }

  // The last Continue step produced an outer enclosure ending exactly on +-delta.
  bool touched_boundary() const noexcept { return touched_boundary_; }

 private:
  BigScalar scratch_;
  BigScalar recip_;
  bool touched_boundary_ = false;
};

struct StepResult {
  StepEvent event;
  std::optional<OrbitState> state;  // present for Continue and HitDelta
};

inline StepResult step_state(const OrbitState& state, const ParamInterval& omega, const BigScalar& delta) {
  OrbitStepper stepper(state.outer.precision());
  OrbitState next(state.outer.precision());
  const StepEvent ev = stepper.advance(state, omega, CriticalBand(delta), next);
  if (ev == StepEvent::Continue || ev == StepEvent::HitDelta) return {ev, std::move(next)};
  return {ev, std::nullopt};
}

enum class Termination { ProblemC, InnerEmpty, ProblemF, HitDelta, MaxIterations };

constexpr std::string_view to_string(Termination t) noexcept {
  switch (t) {
    case Termination::ProblemC:
      return "problem-c";
    case Termination::InnerEmpty:
      return "inner-empty";
    case Termination::ProblemF:
      return "problem-f";
    case Termination::HitDelta:
      return "hit-delta";
    case Termination::MaxIterations:
      break;
  }
  return "max-iterations";
}

struct IterationResult {
  Termination kind = Termination::MaxIterations;
  // Step index of `state`. For ProblemC/InnerEmpty/ProblemF this is the last
  // good step; the failure happened computing step n + 1.
  std::size_t n = 0;
  OrbitState state;
  std::size_t boundary_touches = 0;

  explicit IterationResult(Precision prec = kDefaultPrecision) : state(prec) {}
};

struct NoNotify {
  void operator()(const OrbitState&) const noexcept {}
};

// Runs the per-interval loop with buffers reused across calls.
class OrbitIterator {
 public:
  explicit OrbitIterator(Precision prec = kDefaultPrecision) : stepper_(prec), cur_(prec), next_(prec), result_(prec) {}

  // `notify` sees every state from n = 0 on. A step reaching n = max_iterations
  // ends with MaxIterations even if it also hit the band.
  template <class Notify = NoNotify>
  const IterationResult& run(const ParamInterval& omega, const CriticalBand& band, unsigned max_iterations,
                             Notify&& notify = {}) {
    if (!(omega.a >= 1L)) throw ContractError("iterate: parameter interval must lie in [1, inf)");
    init_state(cur_, omega);
    notify(static_cast<const OrbitState&>(cur_));
    std::size_t touches = 0;
    while (true) {
      if (cur_.n >= max_iterations) return finish(Termination::MaxIterations, touches);
      const StepEvent ev = stepper_.advance(cur_, omega, band, next_);
      switch (ev) {
        case StepEvent::ProblemC:
          return finish(Termination::ProblemC, touches);
        case StepEvent::InnerEmpty:
          return finish(Termination::InnerEmpty, touches);
        case StepEvent::ProblemF:
          return finish(Termination::ProblemF, touches);
        case StepEvent::Continue:
        case StepEvent::HitDelta:
          break;
      }
      std::swap(cur_, next_);
      if (stepper_.touched_boundary()) ++touches;
      notify(static_cast<const OrbitState&>(cur_));
      if (cur_.n >= max_iterations) return finish(Termination::MaxIterations, touches);
      if (ev == StepEvent::HitDelta) return finish(Termination::HitDelta, touches);
    }
  }

 private:
  const IterationResult& finish(Termination kind, std::size_t touches) {
    result_.kind = kind;
    result_.n = cur_.n;
    std::swap(result_.state, cur_);
    result_.boundary_touches = touches;
    return result_;
  }

  OrbitStepper stepper_;
  OrbitState cur_;
  OrbitState next_;
  IterationResult result_;
};

template <class Notify = NoNotify>
IterationResult iterate_interval(const ParamInterval& omega, const Config& config, Notify&& notify = {}) {
  if (!(config.delta > 0L) || !(config.delta < 1L)) throw ConfigError("delta must satisfy 0 < delta < 1");
  OrbitIterator it(omega.precision());
  return it.run(omega, CriticalBand(config.delta), config.max_iterations, std::forward<Notify>(notify));
}

}  // namespace qfam
