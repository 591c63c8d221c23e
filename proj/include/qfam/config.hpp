#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "qfam/big_scalar.hpp"
#include "qfam/error.hpp"

namespace qfam {

// Run parameters. All scalars are held at `precision` bits.
struct Config {
  Precision precision = kDefaultPrecision;
  BigScalar delta{precision};               // radius of the critical neighbourhood (-delta, delta)
  unsigned min_escape_time = 25;            // N0
  unsigned max_iterations = 200;            // N_max
  BigScalar min_relative_width{precision};  // w, as a fraction of the seed measure
  BigScalar escape_width{precision};        // lower bound required on |omega_N|
  unsigned bisection_steps = 40;
  std::optional<std::uint64_t> max_intervals;  // i_max, counted in dequeues
  std::optional<std::uint64_t> max_queue;      // q_max
  std::optional<double> max_seconds;           // t_max
  unsigned workers = 1;

  // delta = 1e-3, N0 = 25, N_max = 200, w = 1e-10, escape width 0.0317, s = 40.
  static Config defaults(Precision prec = kDefaultPrecision) {
    Config c;
    c.precision = prec;
    c.delta = parse_decimal("1e-3", prec);
    c.min_relative_width = parse_decimal("1e-10", prec);
    c.escape_width = parse_decimal("0.0317", prec);
    return c;
  }

  void validate() const {
    if (!(delta > 0L) || !(delta < 1L)) throw ConfigError("delta must satisfy 0 < delta < 1");
    // escape_width > sqrt(delta), certified through a Down-rounded square.
    if (escape_width.sign() <= 0 || !(square(escape_width, Rounding::Down) > delta)) {
      throw ConfigError("escape width must exceed sqrt(delta)");
    }
    if (min_escape_time < 1) throw ConfigError("N0 must be >= 1");
    if (max_iterations < 1) throw ConfigError("N_max must be >= 1");
    if (min_relative_width.sign() < 0) throw ConfigError("minimum relative width must be >= 0");
    if (bisection_steps < 1) throw ConfigError("bisection steps must be >= 1");
    if (max_intervals && *max_intervals == 0) throw ConfigError("max intervals must be > 0");
    if (max_queue && *max_queue == 0) throw ConfigError("max queue size must be > 0");
    if (max_seconds && !(*max_seconds > 0.0)) throw ConfigError("max time must be > 0");
    if (workers < 1) throw ConfigError("workers must be >= 1");
  }
};

}  // namespace qfam
