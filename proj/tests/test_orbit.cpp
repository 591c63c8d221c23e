#include <gtest/gtest.h>

#include <cmath>
#include <random>
#include <vector>

#include "oracle.hpp"
#include "qfam/orbit.hpp"
#include "reference_trace.hpp"

using namespace qfam;

namespace {

constexpr Precision kP = 250;

ParamInterval interval(const char* a, const char* b, Precision p = kP) {
  return ParamInterval(parse_decimal(a, p), parse_decimal(b, p));
}

// Five significant digits, rounded in direction r, as iterate-one prints them.
double printed(const BigScalar& x, Rounding r) { return std::stod(x.to_general(5, r)); }

ParamInterval reference_interval() { return ParamInterval(parse_hex(reftrace::kExactLo), parse_hex(reftrace::kExactHi)); }

std::vector<OrbitState> trace(const ParamInterval& omega, const Config& c, Termination* kind = nullptr) {
  std::vector<OrbitState> states;
  const IterationResult r = iterate_interval(omega, c, [&](const OrbitState& s) { states.push_back(s); });
  if (kind != nullptr) *kind = r.kind;
  return states;
}

}  // namespace

TEST(Orbit, InitialStateIsTheParameterInterval) {
  const ParamInterval omega = interval("1.5", "1.6");
  const OrbitState s = init_state(omega);
  EXPECT_EQ(s.n, 0u);
  EXPECT_EQ(s.outer.lo, omega.a);
  EXPECT_EQ(s.outer.hi, omega.b);
  EXPECT_EQ(s.inner, s.outer);
  EXPECT_EQ(s.param_deriv.lo, BigScalar(1, kP));
  EXPECT_EQ(s.phase_deriv.hi, BigScalar(1, kP));
  EXPECT_EQ(s.deriv_ratio.lo, BigScalar(1, kP));
  EXPECT_THROW(init_state(interval("1.5", "1.5")), ContractError);
}

TEST(Orbit, ReproducesReferenceTraceExactly) {
  const Config c = Config::defaults();
  Termination kind{};
  const auto states = trace(reference_interval(), c, &kind);
  ASSERT_EQ(states.size(), reftrace::kRows.size());
  EXPECT_EQ(kind, Termination::HitDelta);
  for (const auto& row : reftrace::kRows) {
    const OrbitState& s = states[row.n];
    ASSERT_EQ(s.n, static_cast<std::size_t>(row.n));
    EXPECT_LE(reftrace::units_off(s.outer.lo.to_double(), row.lo), 1.0) << "n=" << row.n;
    EXPECT_LE(reftrace::units_off(s.outer.hi.to_double(), row.hi), 1.0) << "n=" << row.n;
    EXPECT_LE(reftrace::units_off(width(s.inner, Rounding::Down).to_double(), row.width), 1.0) << "n=" << row.n;
    // The printed values are the outward 5-digit roundings.
    EXPECT_EQ(s.outer.lo.to_general(5, Rounding::Down), BigScalar::from_double(row.lo, kP).to_general(5));
  }
  EXPECT_GE(width(states.back().inner, Rounding::Down), parse_decimal("3.50"));
}

TEST(Orbit, PrintedBoxDiffersOnlyWhereTheTraceIsSensitive) {
  // The 11-digit box is wider than the interval itself; at n = 25 its upper
  // bound moves by several fifth-digit units.
  const auto states = trace(interval(reftrace::kBoxLo, reftrace::kBoxHi), Config::defaults());
  ASSERT_EQ(states.size(), 27u);
  int far = 0;
  for (const auto& row : reftrace::kRows) {
    const OrbitState& s = states[row.n];
    far += reftrace::units_off(printed(s.outer.lo, Rounding::Down), row.lo) > 1.0;
    far += reftrace::units_off(printed(s.outer.hi, Rounding::Up), row.hi) > 1.0;
    far += reftrace::units_off(printed(width(s.inner, Rounding::Down), Rounding::Down), row.width) > 1.0;
  }
  EXPECT_EQ(far, 1);
  EXPECT_EQ(states[25].outer.hi.to_general(5, Rounding::Up), "-0.08541");
  EXPECT_TRUE(reference_interval().as_interval().subset_of(interval(reftrace::kBoxLo, reftrace::kBoxHi).as_interval()));
}

TEST(Orbit, HitAtMaximumIterationIsMaxIterations) {
  Config c = Config::defaults();
  c.max_iterations = 26;
  Termination kind{};
  auto states = trace(reference_interval(), c, &kind);
  EXPECT_EQ(kind, Termination::MaxIterations);
  EXPECT_EQ(states.back().n, 26u);
  c.max_iterations = 27;
  states = trace(reference_interval(), c, &kind);
  EXPECT_EQ(kind, Termination::HitDelta);
  EXPECT_EQ(states.back().n, 26u);
}

TEST(Orbit, DeepPeriodicWindowRunsToMaxIterations) {
  const IterationResult r = iterate_interval(interval("1.76", "1.7600001"), Config::defaults());
  EXPECT_EQ(r.kind, Termination::MaxIterations);
  EXPECT_EQ(r.n, 200u);
}

TEST(Orbit, OneUlpIntervalLosesItsInnerEnclosure) {
  Config c = Config::defaults(53);
  const BigScalar a = parse_decimal("1.9", 53);
  BigScalar b = a;
  mpfr_nextabove(b.get());
  const IterationResult r = iterate_interval(ParamInterval(a, b), c);
  EXPECT_EQ(r.kind, Termination::InnerEmpty);
  // The endpoint images first overlap when computing step 3.
  EXPECT_EQ(r.n, 2u);
}

TEST(Orbit, SignProblemOnParentOfReferenceInterval) {
  // Queue item 2504 of the default run: the two halves of this interval are
  // items 2564 and 2565.
  const BigScalar b = parse_hex(reftrace::kExactHi);
  const BigScalar mid = parse_hex(reftrace::kExactLo);
  BigScalar a = sub(mid, sub(b, mid, Rounding::Nearest), Rounding::Nearest);
  const IterationResult r = iterate_interval(ParamInterval(a, b), Config::defaults());
  EXPECT_EQ(r.kind, Termination::ProblemC);
  EXPECT_EQ(r.n, 7u);
  EXPECT_TRUE(r.state.outer.definite_sign());
}

TEST(Orbit, PhaseDerivativeStraddlingZeroIsProblemF) {
  const ParamInterval omega = interval("1.5", "1.5000001");
  OrbitState s = init_state(omega);
  s.phase_deriv = RInterval(BigScalar(-1, kP), BigScalar(1, kP));
  const StepResult r = step_state(s, omega, parse_decimal("1e-3"));
  EXPECT_EQ(r.event, StepEvent::ProblemF);
  EXPECT_FALSE(r.state.has_value());
}

TEST(Orbit, ContractsAndConfiguration) {
  Config c = Config::defaults();
  EXPECT_THROW(iterate_interval(interval("0.5", "0.6"), c), ContractError);
  c.delta = BigScalar(0, kP);
  EXPECT_THROW(iterate_interval(interval("1.5", "1.6"), c), ConfigError);
  c.delta = BigScalar(1, kP);
  EXPECT_THROW(iterate_interval(interval("1.5", "1.6"), c), ConfigError);

  // Stepping past a hit is a caller error.
  const ParamInterval omega = interval("1.4", "2");
  OrbitState s = init_state(omega);
  const StepResult first = step_state(s, omega, parse_decimal("1e-3"));
  ASSERT_EQ(first.event, StepEvent::Continue);
  const StepResult second = step_state(*first.state, omega, parse_decimal("1e-3"));
  ASSERT_EQ(second.event, StepEvent::HitDelta);
  EXPECT_THROW(step_state(*second.state, omega, parse_decimal("1e-3")), ContractError);
}

TEST(Orbit, CriticalBandUsesOpenInterior) {
  const BigScalar d = parse_decimal("1e-3");
  const CriticalBand band(d);
  EXPECT_FALSE(band.interior_hit(RInterval(d, BigScalar(1, kP))));
  EXPECT_TRUE(band.touches_boundary(RInterval(d, BigScalar(1, kP))));
  EXPECT_FALSE(band.interior_hit(RInterval(BigScalar(-1, kP), neg(d))));
  EXPECT_TRUE(band.touches_boundary(RInterval(BigScalar(-1, kP), neg(d))));
  EXPECT_TRUE(band.interior_hit(RInterval(parse_decimal("-1e-9"), parse_decimal("1e-9"))));
  // A degenerate interval has no interior.
  EXPECT_FALSE(band.interior_hit(RInterval::point(BigScalar(0, kP))));
  BigScalar just_inside = d;
  mpfr_nextbelow(just_inside.get());
  EXPECT_TRUE(band.interior_hit(RInterval(just_inside, BigScalar(1, kP))));
}

// Every enclosure contains the exact orbit and derivative values of every
// parameter in the interval, at every step.
TEST(Orbit, EnclosuresContainHighPrecisionOrbit) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> start(1.4, 1.999);
  std::uniform_int_distribution<int> scale(-12, -4);
  const Config c = Config::defaults();
  int checked = 0;
  for (int trial = 0; trial < 40; ++trial) {
    const BigScalar a = BigScalar::from_double(start(rng), kP);
    BigScalar w(kP);
    mpfr_set_d(w.get(), std::pow(10.0, scale(rng)), MPFR_RNDN);
    const ParamInterval omega(a, add(a, w, Rounding::Nearest));
    const auto states = trace(omega, c);
    std::vector<BigScalar> params{omega.a, omega.b};
    for (int k = 1; k < 4; ++k) {
      BigScalar t(kP);
      mpfr_set_d(t.get(), k / 4.0, MPFR_RNDN);
      params.push_back(add(omega.a, mul(w, t, Rounding::Nearest), Rounding::Nearest));
    }
    for (std::size_t p = 0; p < params.size(); ++p) {
      const auto orbit = oracle::orbit(params[p], states.back().n);
      for (const OrbitState& s : states) {
        const auto& o = orbit[s.n];
        ASSERT_TRUE(oracle::within(s.outer.lo, o.c, s.outer.hi)) << trial << " n=" << s.n;
        ASSERT_TRUE(oracle::within(s.param_deriv.lo, o.c_prime, s.param_deriv.hi)) << trial << " n=" << s.n;
        ASSERT_TRUE(oracle::within(s.phase_deriv.lo, o.f_prime, s.phase_deriv.hi)) << trial << " n=" << s.n;
        ASSERT_TRUE(oracle::within(s.deriv_ratio.lo, o.d_ratio, s.deriv_ratio.hi)) << trial << " n=" << s.n;
        if (p == 0) {
          ASSERT_TRUE(oracle::within(s.a_image.lo, o.c, s.a_image.hi));
        }
        if (p == 1) {
          ASSERT_TRUE(oracle::within(s.b_image.lo, o.c, s.b_image.hi));
        }
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 1000);
}

// The inner enclosure lies between the endpoint images, so by continuity it is
// covered by omega_n.
TEST(Orbit, InnerEnclosureLiesBetweenEndpointImages) {
  const auto states = trace(reference_interval(), Config::defaults());
  for (const OrbitState& s : states) {
    ASSERT_TRUE(s.has_inner);
    const auto ao = oracle::orbit(reference_interval().a, s.n)[s.n].c;
    const auto bo = oracle::orbit(reference_interval().b, s.n)[s.n].c;
    const bool a_low = mpfr_cmp(ao.get(), bo.get()) < 0;
    const oracle::Real& low = a_low ? ao : bo;
    const oracle::Real& high = a_low ? bo : ao;
    EXPECT_GE(oracle::cmp(s.inner.lo, low), 0);
    EXPECT_LE(oracle::cmp(s.inner.hi, high), 0);
    EXPECT_TRUE(s.inner.subset_of(s.outer));
  }
}
