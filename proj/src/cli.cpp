#include "qfam/cli.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdint>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "qfam/qfam.hpp"

namespace qfam {
namespace {

namespace fs = std::filesystem;

constexpr const char* kOutEnv = "QFAM_OUT_DIR";
constexpr const char* kDefaultOut = "qfam-out";

enum class LogLevel { Error, Warn, Info, Debug };

struct Options {
  std::vector<std::string> intervals{"1.4:2"};
  std::string delta = "1e-3";
  unsigned n0 = 25;
  unsigned nmax = 200;
  std::string minwidth = "1e-10";
  long precision = kDefaultPrecision;
  unsigned bisections = 40;
  std::string escape_width = "0.0317";
  std::optional<std::uint64_t> max_intervals;
  std::optional<std::uint64_t> max_queue;
  std::optional<double> max_time;
  std::string out;
  std::string log_level = "info";
  unsigned workers = 1;
  int digits = kDefaultDecimalDigits;
  std::string trace_log;
  std::string csv;
};

class Logger {
 public:
  Logger(std::ostream& err, LogLevel level) : err_(err), level_(level) {}
  void operator()(LogLevel at, const std::string& msg) const {
    if (at > level_) return;
    static constexpr const char* names[] = {"error", "warn", "info", "debug"};
    err_ << "[" << names[static_cast<int>(at)] << "] " << msg << '\n';
  }

 private:
  std::ostream& err_;
  LogLevel level_;
};

LogLevel parse_level(const std::string& s) {
  if (s == "error") return LogLevel::Error;
  if (s == "warn") return LogLevel::Warn;
  if (s == "info") return LogLevel::Info;
  if (s == "debug") return LogLevel::Debug;
  throw ConfigError("unknown log level '" + s + "'");
}

Precision checked_precision(long p) {
  if (p < MPFR_PREC_MIN || p > 1L << 20) throw ConfigError("precision out of range");
  return static_cast<Precision>(p);
}

// Decimal, or an exact hex float as written in the CSV hex columns.
BigScalar parse_endpoint(const std::string& text, Precision prec) {
  if (text.rfind("0x", 0) == 0 || text.rfind("-0x", 0) == 0) return parse_hex(text, prec);
  return parse_decimal(text, prec);
}

ParamInterval parse_interval(const std::string& text, Precision prec) {
  const auto colon = text.find(':');
  if (colon == std::string::npos) throw ConfigError("interval must be a:b, got '" + text + "'");
  try {
    BigScalar a = parse_endpoint(text.substr(0, colon), prec);
    BigScalar b = parse_endpoint(text.substr(colon + 1), prec);
    if (!(a < b)) throw ConfigError("interval must satisfy a < b: '" + text + "'");
    if (!(a >= 1L)) throw ConfigError("interval must lie in [1, inf): '" + text + "'");
    return ParamInterval(std::move(a), std::move(b));
  } catch (const ParseError& e) {
    throw ConfigError(std::string("interval '") + text + "': " + e.what());
  }
}

BigScalar parse_scalar(const std::string& name, const std::string& text, Precision prec) {
  try {
    return parse_decimal(text, prec);
  } catch (const ParseError& e) {
    throw ConfigError("--" + name + ": " + e.what());
  }
}

Config build_config(const Options& o) {
  const Precision prec = checked_precision(o.precision);
  Config c = Config::defaults(prec);
  c.delta = parse_scalar("delta", o.delta, prec);
  c.min_escape_time = o.n0;
  c.max_iterations = o.nmax;
  c.min_relative_width = parse_scalar("minwidth", o.minwidth, prec);
  c.escape_width = parse_scalar("escape-width", o.escape_width, prec);
  c.bisection_steps = o.bisections;
  c.max_intervals = o.max_intervals;
  c.max_queue = o.max_queue;
  c.max_seconds = o.max_time;
  c.workers = o.workers;
  c.validate();
  return c;
}

std::vector<ParamInterval> build_seeds(const Options& o, Precision prec) {
  std::vector<ParamInterval> seeds;
  for (const auto& s : o.intervals) seeds.push_back(parse_interval(s, prec));
  std::vector<const ParamInterval*> sorted;
  for (const auto& s : seeds) sorted.push_back(&s);
  std::sort(sorted.begin(), sorted.end(), [](auto* x, auto* y) { return x->a < y->a; });
  for (std::size_t i = 1; i < sorted.size(); ++i) {
    if (sorted[i]->a < sorted[i - 1]->b) throw ConfigError("seed intervals overlap");
  }
  return seeds;
}

fs::path output_dir(const Options& o) {
  if (!o.out.empty()) return o.out;
  if (const char* env = std::getenv(kOutEnv); env != nullptr && *env != '\0') return env;
  return kDefaultOut;
}

void make_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw IoError(dir.string(), "cannot create directory: " + ec.message());
}

// Streams records to the CSV and the summary, progress lines to the log.
class FileSink final : public PartitionSink {
 public:
  FileSink(const fs::path& dir, Precision prec, int digits, std::vector<ParamInterval> domain)
      : csv_(dir / "partition.csv", prec, digits), summary_(prec), progress_path_(dir / "progress.log") {
    summary_.set_domain(std::move(domain));
    progress_.open(progress_path_, std::ios::binary | std::ios::trunc);
    if (!progress_) throw IoError(progress_path_.string(), "cannot open for writing");
    progress_ << "# index seq parent provenance iter_count event n\n";
  }

  void on_record(const ClassifiedInterval& c) override {
    PartitionRecord r = make_record(c);
    csv_.write(r);
    summary_.add(r);
  }

  void on_progress(const ProgressEntry& p) override {
    progress_ << p.index << ' ' << p.seq << ' ' << p.parent_seq << ' ' << to_string(p.provenance) << ' '
              << p.iter_count << ' ' << to_string(p.event) << ' ' << p.n << std::endl;
    if (!progress_) throw IoError(progress_path_.string(), "write failed");
  }

  PartitionSummary finish() {
    csv_.close();
    progress_.close();
    return summary_.finish();
  }

 private:
  PartitionCsvWriter csv_;
  SummaryBuilder summary_;
  fs::path progress_path_;
  std::ofstream progress_;
};

nlohmann::ordered_json config_json(const Config& c, const std::vector<ParamInterval>& seeds) {
  nlohmann::ordered_json j;
  j["intervals"] = nlohmann::ordered_json::array();
  for (const auto& s : seeds) j["intervals"].push_back({s.a.to_hex(), s.b.to_hex()});
  j["delta"] = c.delta.to_hex();
  j["n0"] = c.min_escape_time;
  j["nmax"] = c.max_iterations;
  j["minwidth"] = c.min_relative_width.to_hex();
  j["escape_width"] = c.escape_width.to_hex();
  j["precision"] = c.precision;
  j["bisections"] = c.bisection_steps;
  j["max_intervals"] = c.max_intervals ? nlohmann::ordered_json(*c.max_intervals) : nullptr;
  j["max_queue"] = c.max_queue ? nlohmann::ordered_json(*c.max_queue) : nullptr;
  j["max_time"] = c.max_seconds ? nlohmann::ordered_json(*c.max_seconds) : nullptr;
  j["workers"] = c.workers;
  return j;
}

void print_summary(std::ostream& out, const PartitionSummary& s) {
  out << "records " << s.count_total << " (stochastic " << s.count_stochastic << ", regular " << s.count_regular
      << ")\n";
  out << "measure_stochastic_lower " << s.measure_stochastic_lower.to_decimal(12, Rounding::Down) << '\n';
  out << "measure_regular_upper " << s.measure_regular_upper.to_decimal(12, Rounding::Up) << '\n';
  for (const auto& [reason, count] : s.count_by_reason) out << "  " << reason << ' ' << count << '\n';
  for (std::size_t i = 0; i < s.components.size() && i < 3; ++i) {
    const auto& c = s.components[i];
    out << "component " << i + 1 << " [" << c.lo.to_general(12, Rounding::Down) << ", "
        << c.hi.to_general(12, Rounding::Up) << "] width " << c.width() << '\n';
  }
}

int cmd_run(const Options& o, std::ostream& out, const Logger& log) {
  const Config config = build_config(o);
  const std::vector<ParamInterval> seeds = build_seeds(o, config.precision);
  if (o.digits < 1 || o.digits > 10000) throw ConfigError("--digits must be in [1, 10000]");
  const fs::path dir = output_dir(o);
  make_dir(dir);
  log(LogLevel::Info, "writing to " + dir.string());

  FileSink sink(dir, config.precision, o.digits, seeds);
  const RunMetadata meta = process_all(seeds, config, sink);
  const PartitionSummary summary = sink.finish();

  nlohmann::ordered_json j = summary_to_json(summary, config.precision);
  j["config"] = config_json(config, seeds);
  j["run"] = {{"processed", meta.processed},
              {"enqueued", meta.enqueued},
              {"flushed", meta.flushed},
              {"peak_queue", meta.peak_queue},
              {"boundary_touches", meta.boundary_touches},
              {"stop", to_string(meta.stop)},
              {"elapsed_seconds", meta.elapsed_seconds}};
  write_summary_json(dir / "summary.json", j);
  write_histogram_csvs(dir, summary);

  if (meta.boundary_touches > 0) {
    log(LogLevel::Warn, std::to_string(meta.boundary_touches) + " enclosures ended exactly on +-delta");
  }
  log(LogLevel::Info, "processed " + std::to_string(meta.processed) + " intervals in " +
                          std::to_string(meta.elapsed_seconds) + " s, stop: " + std::string(to_string(meta.stop)));
  print_summary(out, summary);
  return kExitOk;
}

nlohmann::ordered_json interval_json(const RInterval& x) { return {x.lo.to_hex(), x.hi.to_hex()}; }

int cmd_iterate_one(const Options& o, std::ostream& out, const Logger& log) {
  const Config config = build_config(o);
  if (o.intervals.size() != 1) throw ConfigError("iterate-one takes exactly one --interval");
  const ParamInterval omega = parse_interval(o.intervals.front(), config.precision);

  std::ofstream trace;
  if (!o.trace_log.empty()) {
    trace.open(o.trace_log, std::ios::binary | std::ios::trunc);
    if (!trace) throw IoError(o.trace_log, "cannot open for writing");
  }

  out << "n outer_lo outer_hi width_lower\n";
  BigScalar w(config.precision);
  auto notify = [&](const OrbitState& s) {
    width(w, s.inner, Rounding::Down);
    out << s.n << ' ' << s.outer.lo.to_general(5, Rounding::Down) << ' ' << s.outer.hi.to_general(5, Rounding::Up)
        << ' ' << w.to_general(5, Rounding::Down) << '\n';
    if (trace.is_open()) {
      nlohmann::ordered_json j{{"n", s.n},
                               {"a_image", interval_json(s.a_image)},
                               {"b_image", interval_json(s.b_image)},
                               {"param_deriv", interval_json(s.param_deriv)},
                               {"phase_deriv", interval_json(s.phase_deriv)},
                               {"deriv_ratio", interval_json(s.deriv_ratio)},
                               {"outer", interval_json(s.outer)},
                               {"inner", interval_json(s.inner)}};
      trace << j.dump() << '\n';
    }
  };
  const IterationResult r = iterate_interval(omega, config, notify);
  if (trace.is_open()) {
    trace.flush();
    if (!trace) throw IoError(o.trace_log, "write failed");
  }

  out << "event " << to_string(r.kind) << " n " << r.n << '\n';
  if (r.kind == Termination::HitDelta) {
    const bool escapes = r.n >= config.min_escape_time && width(r.state.inner, Rounding::Down) >= config.escape_width;
    out << "inner_width_lower " << width(r.state.inner, Rounding::Down).to_general(12, Rounding::Down) << '\n';
    out << "classification " << (escapes ? "stochastic" : "chop") << '\n';
  }
  log(LogLevel::Debug, "boundary touches: " + std::to_string(r.boundary_touches));
  return kExitOk;
}

int cmd_summarize(const Options& o, std::ostream& out, const Logger& log) {
  if (o.csv.empty()) throw ConfigError("summarize requires --csv");
  // The builder needs the precision recorded in the file header.
  std::optional<SummaryBuilder> builder;
  const CsvHeaderInfo info = read_partition_csv(o.csv, [&](PartitionRecord&& r) {
    if (!builder) builder.emplace(r.lo.precision());
    builder->add(r);
  });
  if (!builder) builder.emplace(info.precision);
  const Precision prec = info.precision;
  const PartitionSummary summary = builder->finish();

  const fs::path dir = output_dir(o);
  make_dir(dir);
  write_summary_json(dir / "summary.json", summary_to_json(summary, prec));
  write_histogram_csvs(dir, summary);
  log(LogLevel::Info, "summary written to " + (dir / "summary.json").string());
  print_summary(out, summary);
  return kExitOk;
}

void add_config_options(CLI::App* app, Options& o, bool with_safeguards) {
  app->add_option("--interval", o.intervals, "Parameter interval a:b, decimal or exact hex endpoints (repeatable)")->capture_default_str();
  app->add_option("--delta", o.delta, "Critical neighbourhood radius")->capture_default_str();
  app->add_option("--n0", o.n0, "Minimum escape time")->capture_default_str();
  app->add_option("--nmax", o.nmax, "Maximum iterations without a hit")->capture_default_str();
  app->add_option("--minwidth", o.minwidth, "Minimum relative width of queued pieces")->capture_default_str();
  app->add_option("--precision", o.precision, "Working precision in bits")->capture_default_str();
  app->add_option("--bisections", o.bisections, "Bisection steps when chopping")->capture_default_str();
  app->add_option("--escape-width", o.escape_width, "Minimum certified |omega_N| at escape")->capture_default_str();
  if (!with_safeguards) return;
  app->add_option("--max-intervals", o.max_intervals, "Stop after this many processed intervals (default: unlimited)");
  app->add_option("--max-queue", o.max_queue, "Stop when the queue reaches this size (default: unlimited)");
  app->add_option("--max-time", o.max_time, "Wall-clock budget in seconds (default: unlimited)");
  app->add_option("--workers", o.workers, "Worker threads")->capture_default_str();
  app->add_option("--digits", o.digits, "Significant digits of decimal endpoints in the CSV")->capture_default_str();
}

}  // namespace

int run_cli(int argc, const char* const* argv, std::ostream& out, std::ostream& err) {
  Options o;
  CLI::App app{"Rigorous stochastic / regular partition of the quadratic family a - x^2", "qfam"};
  app.require_subcommand(1);
  // Global options may also follow the subcommand.
  app.fallthrough();
  app.add_option("--log-level", o.log_level, "error | warn | info | debug")->capture_default_str();
  std::string out_help = std::string("Output directory (default: $") + kOutEnv + " or " + kDefaultOut + ")";

  CLI::App* run = app.add_subcommand("run", "Partition the parameter intervals and write CSV / JSON outputs");
  add_config_options(run, o, true);
  run->add_option("--out", o.out, out_help);

  CLI::App* one = app.add_subcommand("iterate-one", "Print the step-by-step enclosures of one interval");
  add_config_options(one, o, false);
  one->add_option("--log", o.trace_log, "Write every state at full precision as JSON lines");

  CLI::App* summ = app.add_subcommand("summarize", "Recompute the summary of an existing partition CSV");
  summ->add_option("--csv", o.csv, "Partition CSV to read")->required();
  summ->add_option("--out", o.out, out_help);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    const Logger log(err, parse_level(o.log_level));
    try {
      if (run->parsed()) return cmd_run(o, out, log);
      if (one->parsed()) return cmd_iterate_one(o, out, log);
      return cmd_summarize(o, out, log);
    } catch (const ConfigError& e) {
      log(LogLevel::Error, e.what());
      return kExitConfig;
    } catch (const std::exception& e) {
      log(LogLevel::Error, e.what());
      return kExitRuntime;
    }
  } catch (const ConfigError& e) {
    err << "[error] " << e.what() << '\n';
    return kExitConfig;
  }
}

}  // namespace qfam
