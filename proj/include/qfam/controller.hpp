#pragma once

// Priority queue of parameter intervals and the policy that turns iteration
// outcomes into stochastic / regular records or new queue entries.

#include <algorithm>
#include <chrono>
#include <compare>
#include <condition_variable>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <mutex>
#include <optional>
#include <span>
#include <string_view>
#include <thread>
#include <utility>
#include <variant>
#include <vector>

#include "qfam/big_scalar.hpp"
#include "qfam/chop.hpp"
#include "qfam/config.hpp"
#include "qfam/error.hpp"
#include "qfam/interval.hpp"
#include "qfam/orbit.hpp"
#include "qfam/point_orbit.hpp"
#include "qfam/rates.hpp"

namespace qfam {

enum class Provenance { Initial, Chopped, Halved };

constexpr std::string_view to_string(Provenance p) noexcept {
  switch (p) {
    case Provenance::Initial:
      return "initial";
    case Provenance::Chopped:
      return "chopped";
    case Provenance::Halved:
      break;
  }
  return "halved";
}

struct QueueItem {
  ParamInterval interval;
  std::size_t iter_count = 0;
  double width_upper = 0.0;  // rounded up to double; equal doubles tie
  Provenance reason = Provenance::Initial;
  std::uint64_t seq = 0;
  std::uint64_t parent_seq = 0;  // 0 for seeds

  QueueItem(ParamInterval omega, std::size_t n, Provenance why, std::uint64_t number, std::uint64_t parent)
      : interval(std::move(omega)),
        iter_count(n),
        width_upper(width(interval.as_interval(), Rounding::Up).to_double(Rounding::Up)),
        reason(why),
        seq(number),
        parent_seq(parent) {}
};

// less means extracted first.
inline std::strong_ordering queue_order(const QueueItem& x, const QueueItem& y) {
  if (auto c = x.iter_count <=> y.iter_count; c != 0) return c;
  if (x.width_upper != y.width_upper) {
    return x.width_upper > y.width_upper ? std::strong_ordering::less : std::strong_ordering::greater;
  }
  if (auto c = static_cast<int>(x.reason) <=> static_cast<int>(y.reason); c != 0) return c;
  return x.seq <=> y.seq;
}

// Max-heap of extraction priority.
class IntervalQueue {
 public:
  void push(QueueItem item) {
    heap_.push_back(std::move(item));
    std::push_heap(heap_.begin(), heap_.end(), later);
  }

  QueueItem pop() {
    if (heap_.empty()) throw ContractError("IntervalQueue::pop on empty queue");
    std::pop_heap(heap_.begin(), heap_.end(), later);
    QueueItem out = std::move(heap_.back());
    heap_.pop_back();
    return out;
  }

  bool empty() const noexcept { return heap_.empty(); }
  std::size_t size() const noexcept { return heap_.size(); }

 private:
  static bool later(const QueueItem& x, const QueueItem& y) { return queue_order(x, y) > 0; }

  std::vector<QueueItem> heap_;
};

enum class RegularReason { ExcludedAtDelta, TooSmallAfterChop, TooSmallAfterHalve, InnerEmpty, MaxIterations, QueueFlushed };

constexpr std::string_view to_string(RegularReason r) noexcept {
  switch (r) {
    case RegularReason::ExcludedAtDelta:
      return "excluded-at-delta";
    case RegularReason::TooSmallAfterChop:
      return "too-small-after-chop";
    case RegularReason::TooSmallAfterHalve:
      return "too-small-after-halve";
    case RegularReason::InnerEmpty:
      return "inner-empty";
    case RegularReason::MaxIterations:
      return "max-iterations";
    case RegularReason::QueueFlushed:
      break;
  }
  return "queue-flushed";
}

struct StochasticDetail {
  unsigned escape_time = 0;
  RInterval inner;
  RInterval outer;
  RInterval c_prime;
  RInterval f_prime;
  RInterval d_ratio;
  BigScalar rate_f_lower;
  BigScalar rate_c_lower;
  std::optional<BigScalar> distortion_upper;

  friend bool operator==(const StochasticDetail&, const StochasticDetail&) = default;
};

inline StochasticDetail make_stochastic_detail(const OrbitState& s) {
  const auto n = static_cast<unsigned>(s.n);
  RateBounds r = compute_rates(n, s.phase_deriv, s.param_deriv, s.deriv_ratio);
  return StochasticDetail{n,
                          s.inner,
                          s.outer,
                          s.param_deriv,
                          s.phase_deriv,
                          s.deriv_ratio,
                          std::move(r.rate_f_lower),
                          std::move(r.rate_c_lower),
                          std::move(r.distortion_upper)};
}

using Classification = std::variant<StochasticDetail, RegularReason>;

struct ClassifiedInterval {
  std::uint64_t id = 0;          // 1-based emission order
  std::uint64_t source_seq = 0;  // queue number of the interval it came from
  ParamInterval interval;
  Classification cls;

  bool stochastic() const noexcept { return std::holds_alternative<StochasticDetail>(cls); }
  const StochasticDetail* detail() const noexcept { return std::get_if<StochasticDetail>(&cls); }
  std::optional<RegularReason> reason() const noexcept {
    if (auto* r = std::get_if<RegularReason>(&cls)) return *r;
    return std::nullopt;
  }
};

// Outcome of handling one terminal event.
struct Disposition {
  struct Piece {
    ParamInterval interval;
    Provenance reason;
  };
  std::vector<std::pair<ParamInterval, Classification>> records;
  std::vector<Piece> enqueue;  // all with iter_count = the terminal step
  std::size_t boundary_touches = 0;
};

namespace detail {

inline void keep_or_drop(Disposition& out, ParamInterval piece, const BigScalar& min_width, Provenance why,
                         RegularReason too_small) {
  if (width(piece.as_interval(), Rounding::Nearest) >= min_width && piece.a < piece.b) {
    out.enqueue.push_back({std::move(piece), why});
  } else {
    out.records.emplace_back(std::move(piece), too_small);
  }
}

}  // namespace detail

// HitDelta at step state.n. `min_width` is w * |Omega|.
inline Disposition on_hit_delta(const ParamInterval& omega, const OrbitState& state, const Config& config,
                                const BigScalar& min_width, PointOrbitEvaluator& eval) {
  Disposition out;
  if (state.n >= config.min_escape_time && width(state.inner, Rounding::Down) >= config.escape_width) {
    out.records.emplace_back(omega, make_stochastic_detail(state));
    return out;
  }
  ChopResult chop =
      chop_at_delta(omega, state.n, state.inner, state.increasing(), config.delta, config.bisection_steps, eval);
  if (chop.boundary_touch) out.boundary_touches = 1;
  if (chop.left) {
    detail::keep_or_drop(out, std::move(*chop.left), min_width, Provenance::Chopped, RegularReason::TooSmallAfterChop);
  }
  out.records.emplace_back(std::move(chop.excluded), RegularReason::ExcludedAtDelta);
  if (chop.right) {
    detail::keep_or_drop(out, std::move(*chop.right), min_width, Provenance::Chopped,
                         RegularReason::TooSmallAfterChop);
  }
  return out;
}

inline Disposition on_hit_delta(const ParamInterval& omega, const OrbitState& state, const Config& config,
                                const BigScalar& min_width) {
  PointOrbitEvaluator eval(omega.precision());
  return on_hit_delta(omega, state, config, min_width, eval);
}

// ProblemC / ProblemF: halve at the nearest-rounded midpoint.
inline Disposition on_problem(const ParamInterval& omega, const BigScalar& min_width) {
  Disposition out;
  BigScalar m = midpoint(omega.a, omega.b);
  if (m == omega.a || m == omega.b) {
    out.records.emplace_back(omega, RegularReason::TooSmallAfterHalve);
    return out;
  }
  detail::keep_or_drop(out, ParamInterval(omega.a, m), min_width, Provenance::Halved,
                       RegularReason::TooSmallAfterHalve);
  detail::keep_or_drop(out, ParamInterval(std::move(m), omega.b), min_width, Provenance::Halved,
                       RegularReason::TooSmallAfterHalve);
  return out;
}

enum class StopReason { QueueEmpty, MaxIntervals, MaxQueue, MaxTime };

constexpr std::string_view to_string(StopReason s) noexcept {
  switch (s) {
    case StopReason::QueueEmpty:
      return "queue-empty";
    case StopReason::MaxIntervals:
      return "max-intervals";
    case StopReason::MaxQueue:
      return "max-queue";
    case StopReason::MaxTime:
      break;
  }
  return "max-time";
}

struct ProgressEntry {
  std::uint64_t index = 0;  // 1-based dequeue count
  std::uint64_t seq = 0;
  std::uint64_t parent_seq = 0;
  Provenance provenance = Provenance::Initial;
  std::size_t iter_count = 0;
  Termination event = Termination::MaxIterations;
  std::size_t n = 0;
};

struct RunMetadata {
  std::uint64_t processed = 0;
  std::uint64_t enqueued = 0;
  std::uint64_t records = 0;
  std::uint64_t flushed = 0;
  std::uint64_t boundary_touches = 0;
  std::size_t peak_queue = 0;
  StopReason stop = StopReason::QueueEmpty;
  double elapsed_seconds = 0.0;
};

class PartitionSink {
 public:
  virtual ~PartitionSink() = default;
  virtual void on_record(const ClassifiedInterval& record) = 0;
  virtual void on_progress(const ProgressEntry&) {}
};

class VectorSink final : public PartitionSink {
 public:
  void on_record(const ClassifiedInterval& record) override { records.push_back(record); }
  std::vector<ClassifiedInterval> records;
};

struct Partition {
  std::vector<ClassifiedInterval> records;
  RunMetadata meta;
};

namespace detail {

class RunState {
 public:
  RunState(std::span<const ParamInterval> seeds, const Config& config, PartitionSink& sink)
      : config_(config), sink_(sink), min_width_(config.precision), start_(std::chrono::steady_clock::now()) {
    config_.validate();
    if (seeds.empty()) throw ContractError("process_all: no seed intervals");
    BigScalar total(config.precision);
    for (const auto& s : seeds) {
      if (!(s.a < s.b)) throw ContractError("process_all: seed interval must satisfy a < b");
      if (!(s.a >= 1L)) throw ContractError("process_all: seed interval must lie in [1, inf)");
      add(total, total, width(s.as_interval(), Rounding::Nearest), Rounding::Nearest);
    }
    std::vector<const ParamInterval*> sorted;
    for (const auto& s : seeds) sorted.push_back(&s);
    std::sort(sorted.begin(), sorted.end(), [](auto* x, auto* y) { return x->a < y->a; });
    for (std::size_t i = 1; i < sorted.size(); ++i) {
      if (sorted[i]->a < sorted[i - 1]->b) throw ContractError("process_all: seed intervals overlap");
    }
    mul(min_width_, config.min_relative_width, total, Rounding::Nearest);
    for (const auto& s : seeds) enqueue(ParamInterval(s), 0, Provenance::Initial, 0);
  }

  const Config& config() const noexcept { return config_; }
  const BigScalar& min_width() const noexcept { return min_width_; }

  // Next item, or nullopt once a safeguard fired or the queue ran dry. Caller holds the lock.
  std::optional<QueueItem> next() {
    if (stopped_) return std::nullopt;
    if (queue_.empty()) {
      if (in_flight_ == 0) stopped_ = true;
      return std::nullopt;
    }
    if (config_.max_intervals && meta_.processed >= *config_.max_intervals) return stop(StopReason::MaxIntervals);
    if (config_.max_queue && queue_.size() >= *config_.max_queue) return stop(StopReason::MaxQueue);
    if (config_.max_seconds && elapsed() >= *config_.max_seconds) return stop(StopReason::MaxTime);
    ++meta_.processed;
    ++in_flight_;
    return queue_.pop();
  }

  // Caller holds the lock.
  void apply(const QueueItem& item, const IterationResult& result, Disposition d) {
    --in_flight_;
    meta_.boundary_touches += result.boundary_touches + d.boundary_touches;
    sink_.on_progress(ProgressEntry{++completed_, item.seq, item.parent_seq, item.reason,
                                    item.iter_count, result.kind, result.n});
    for (auto& [omega, cls] : d.records) emit(item.seq, std::move(omega), std::move(cls));
    for (auto& piece : d.enqueue) enqueue(std::move(piece.interval), result.n, piece.reason, item.seq);
  }

  void abort() {
    stopped_ = true;
    --in_flight_;
  }

  bool finished() const noexcept { return stopped_ && in_flight_ == 0; }

  RunMetadata finish() {
    while (!queue_.empty()) {
      QueueItem item = queue_.pop();
      ++meta_.flushed;
      emit(item.seq, std::move(item.interval), RegularReason::QueueFlushed);
    }
    meta_.elapsed_seconds = elapsed();
    return meta_;
  }

 private:
  std::nullopt_t stop(StopReason why) {
    meta_.stop = why;
    stopped_ = true;
    return std::nullopt;
  }

  double elapsed() const {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
  }

  void enqueue(ParamInterval omega, std::size_t n, Provenance why, std::uint64_t parent) {
    queue_.push(QueueItem(std::move(omega), n, why, ++meta_.enqueued, parent));
    meta_.peak_queue = std::max(meta_.peak_queue, queue_.size());
  }

  void emit(std::uint64_t source, ParamInterval omega, Classification cls) {
    ClassifiedInterval rec{++meta_.records, source, std::move(omega), std::move(cls)};
    sink_.on_record(rec);
  }

  Config config_;
  PartitionSink& sink_;
  BigScalar min_width_;
  IntervalQueue queue_;
  RunMetadata meta_;
  std::size_t in_flight_ = 0;
  std::uint64_t completed_ = 0;
  bool stopped_ = false;
  std::chrono::steady_clock::time_point start_;
};

// Per-thread buffers.
struct Worker {
  explicit Worker(const Config& c) : iterator(c.precision), eval(c.precision), band(c.delta) {}

  Disposition handle(const QueueItem& item, const IterationResult& r, const Config& c, const BigScalar& min_width) {
    switch (r.kind) {
      case Termination::HitDelta:
        return on_hit_delta(item.interval, r.state, c, min_width, eval);
      case Termination::ProblemC:
      case Termination::ProblemF:
        return on_problem(item.interval, min_width);
      case Termination::InnerEmpty: {
        Disposition d;
        d.records.emplace_back(item.interval, RegularReason::InnerEmpty);
        return d;
      }
      case Termination::MaxIterations:
        break;
    }
    Disposition d;
    d.records.emplace_back(item.interval, RegularReason::MaxIterations);
    return d;
  }

  OrbitIterator iterator;
  PointOrbitEvaluator eval;
  CriticalBand band;
};

}  // namespace detail

// Processes seeds to completion or until a safeguard fires; every record is
// handed to `sink` as it is produced. Records tile the seeds.
inline RunMetadata process_all(std::span<const ParamInterval> seeds, const Config& config, PartitionSink& sink) {
  detail::RunState run(seeds, config, sink);
  const Config& c = run.config();

  if (c.workers <= 1) {
    detail::Worker w(c);
    while (auto item = run.next()) {
      const IterationResult& r = w.iterator.run(item->interval, w.band, c.max_iterations);
      run.apply(*item, r, w.handle(*item, r, c, run.min_width()));
    }
    return run.finish();
  }

  std::mutex mu;
  std::condition_variable cv;
  std::exception_ptr failure;
  auto body = [&] {
    detail::Worker w(c);
    std::unique_lock lock(mu);
    while (true) {
      std::optional<QueueItem> item = run.next();
      if (!item) {
        if (run.finished()) break;
        cv.wait(lock);
        continue;
      }
      lock.unlock();
      try {
        const IterationResult& r = w.iterator.run(item->interval, w.band, c.max_iterations);
        Disposition d = w.handle(*item, r, c, run.min_width());
        lock.lock();
        run.apply(*item, r, std::move(d));
      } catch (...) {
        if (!lock.owns_lock()) lock.lock();
        if (!failure) failure = std::current_exception();
        run.abort();
      }
      cv.notify_all();
    }
    cv.notify_all();
  };
  std::vector<std::thread> threads;
  for (unsigned i = 0; i < c.workers; ++i) threads.emplace_back(body);
  for (auto& t : threads) t.join();
  if (failure) std::rethrow_exception(failure);
  return run.finish();
}

inline Partition process_all(std::span<const ParamInterval> seeds, const Config& config) {
  VectorSink sink;
  Partition out;
  out.meta = process_all(seeds, config, sink);
  out.records = std::move(sink.records);
  return out;
}

}  // namespace qfam
