#pragma once

// Partition records as written to disk, the streaming summary (directed
// measure sums, regular components, histograms) and CSV / JSON emitters.

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <system_error>
#include <utility>
#include <vector>

#include <json.hpp>

#include "qfam/big_scalar.hpp"
#include "qfam/controller.hpp"
#include "qfam/error.hpp"
#include "qfam/interval.hpp"
#include "qfam/orbit.hpp"

namespace qfam {

inline constexpr std::string_view kPartitionSchema = "qfam-partition/1";
inline constexpr std::string_view kSummarySchema = "qfam-summary/1";
inline constexpr int kDerivedDigits = 20;

// Columns after the endpoints, in file order. Empty for regular rows.
enum Derived : std::size_t {
  kInnerLo,
  kInnerHi,
  kOuterLo,
  kOuterHi,
  kCPrimeLo,
  kCPrimeHi,
  kFPrimeLo,
  kFPrimeHi,
  kDRatioLo,
  kDRatioHi,
  kOmegaWidthLower,
  kRateFLower,
  kRateCLower,
  kDistortionUpper,
  kDerivedCount
};

inline constexpr std::array<std::string_view, kDerivedCount> kDerivedNames = {
    "inner_lo",  "inner_hi",  "outer_lo",           "outer_hi",     "cprime_lo",    "cprime_hi",
    "fprime_lo", "fprime_hi", "dratio_lo",          "dratio_hi",    "omegaN_width_lower",
    "rate_f_lower", "rate_c_lower", "distortion_upper"};

// One CSV row. Endpoints are exact; derived bounds are decimal strings rounded
// outward (inner bounds inward) to kDerivedDigits significant digits.
struct PartitionRecord {
  std::uint64_t id = 0;
  std::uint64_t parent_id = 0;
  bool stochastic = false;
  std::optional<RegularReason> reason;
  unsigned n = 0;  // escape time; 0 for regular rows
  BigScalar lo;
  BigScalar hi;
  std::array<std::string, kDerivedCount> derived;

  friend bool operator==(const PartitionRecord&, const PartitionRecord&) = default;
};

inline std::optional<RegularReason> parse_regular_reason(std::string_view s) {
  for (auto r : {RegularReason::ExcludedAtDelta, RegularReason::TooSmallAfterChop, RegularReason::TooSmallAfterHalve,
                 RegularReason::InnerEmpty, RegularReason::MaxIterations, RegularReason::QueueFlushed}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

inline PartitionRecord make_record(const ClassifiedInterval& c) {
  PartitionRecord r{c.id, c.source_seq, c.stochastic(), c.reason(), 0, c.interval.a, c.interval.b, {}};
  const StochasticDetail* d = c.detail();
  if (d == nullptr) return r;
  constexpr int k = kDerivedDigits;
  r.n = d->escape_time;
  auto& v = r.derived;
  v[kInnerLo] = d->inner.lo.to_decimal(k, Rounding::Up);
  v[kInnerHi] = d->inner.hi.to_decimal(k, Rounding::Down);
  v[kOuterLo] = d->outer.lo.to_decimal(k, Rounding::Down);
  v[kOuterHi] = d->outer.hi.to_decimal(k, Rounding::Up);
  v[kCPrimeLo] = d->c_prime.lo.to_decimal(k, Rounding::Down);
  v[kCPrimeHi] = d->c_prime.hi.to_decimal(k, Rounding::Up);
  v[kFPrimeLo] = d->f_prime.lo.to_decimal(k, Rounding::Down);
  v[kFPrimeHi] = d->f_prime.hi.to_decimal(k, Rounding::Up);
  v[kDRatioLo] = d->d_ratio.lo.to_decimal(k, Rounding::Down);
  v[kDRatioHi] = d->d_ratio.hi.to_decimal(k, Rounding::Up);
  v[kOmegaWidthLower] = width(d->inner, Rounding::Down).to_decimal(k, Rounding::Down);
  v[kRateFLower] = d->rate_f_lower.to_decimal(k, Rounding::Down);
  v[kRateCLower] = d->rate_c_lower.to_decimal(k, Rounding::Down);
  v[kDistortionUpper] = d->distortion_upper ? d->distortion_upper->to_decimal(k, Rounding::Up) : "inf";
  return r;
}

// ---------------------------------------------------------------------------
// Histograms

// Buckets [edges[i], edges[i+1]); values below edges.front() go to `below`,
// values at or above edges.back() (and NaN / inf) to `above`.
struct Histogram {
  std::string name;
  std::vector<double> edges;
  std::vector<std::uint64_t> counts;
  std::uint64_t below = 0;
  std::uint64_t above = 0;

  Histogram() = default;
  Histogram(std::string label, std::vector<double> bucket_edges) : name(std::move(label)), edges(std::move(bucket_edges)) {
    if (edges.size() < 2 || !std::is_sorted(edges.begin(), edges.end()) ||
        std::adjacent_find(edges.begin(), edges.end()) != edges.end()) {
      throw ConfigError("histogram " + name + ": edges must be strictly increasing, at least two");
    }
    counts.assign(edges.size() - 1, 0);
  }

  void add(double v) {
    if (v < edges.front()) {
      ++below;
    } else if (!(v < edges.back())) {
      ++above;
    } else {
      auto it = std::upper_bound(edges.begin(), edges.end(), v);
      ++counts[static_cast<std::size_t>(it - edges.begin()) - 1];
    }
  }

  std::uint64_t total() const noexcept {
    std::uint64_t t = below + above;
    for (auto c : counts) t += c;
    return t;
  }

  friend bool operator==(const Histogram&, const Histogram&) = default;
};

struct BucketSpec {
  std::vector<double> interval_size{1e-10, 1e-9, 1e-8, 1e-7, 1e-6, 1e-5, 1e-4, 1e-3};
  std::vector<double> escape_time{25, 26, 27, 28, 29, 30, 31, 32, 33};
  std::vector<double> omega_width{0.0317, 0.5, 1, 2, 3, 4};
  std::vector<double> rate;
  std::vector<double> distortion{1, 1.5, 2, 5, 10, 100, 1000};

  BucketSpec() {
    for (int i = 0; i <= 16; ++i) rate.push_back(0.05 * i);
  }
};

struct Component {
  BigScalar lo;
  BigScalar hi;
  std::uint64_t records = 0;

  double width() const { return sub(hi, lo, Rounding::Nearest).to_double(); }
  friend bool operator==(const Component&, const Component&) = default;
};

struct PartitionSummary {
  std::uint64_t count_total = 0;
  std::uint64_t count_stochastic = 0;
  std::uint64_t count_regular = 0;
  std::map<std::string, std::uint64_t> count_by_reason;
  BigScalar measure_stochastic_lower;
  BigScalar measure_regular_upper;
  std::map<unsigned, std::uint64_t> escape_time_counts;
  std::map<unsigned, double> escape_time_measure;
  std::vector<Histogram> histograms;  // interval_size, escape_time, omega_width, rate_f, rate_c, distortion
  std::vector<Component> components;  // regular, widest first
  std::uint64_t component_count = 0;
  double rate_f_max = -std::numeric_limits<double>::infinity();
  double rate_c_max = -std::numeric_limits<double>::infinity();
  double distortion_max = 0.0;  // finite values only
  std::uint64_t distortion_unbounded = 0;

  const Histogram& histogram(std::string_view name) const {
    for (const auto& h : histograms) {
      if (h.name == name) return h;
    }
    throw ContractError("no histogram named " + std::string(name));
  }

  friend bool operator==(const PartitionSummary&, const PartitionSummary&) = default;
};

namespace detail {

inline double to_double_checked(const std::string& s) {
  if (s == "inf") return std::numeric_limits<double>::infinity();
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec == std::errc::result_out_of_range) return v;
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError("not a number: '" + s + "'");
  return v;
}

struct Span {
  BigScalar lo;
  BigScalar hi;
  std::uint64_t id;
  bool regular;
};

}  // namespace detail

// Accumulates a summary one record at a time; endpoints are retained for the
// tiling check and component merge.
class SummaryBuilder {
 public:
  explicit SummaryBuilder(Precision prec = kDefaultPrecision, BucketSpec buckets = {}, std::size_t top_components = 100)
      : prec_(prec), top_(top_components), scratch_(prec) {
    s_.measure_stochastic_lower = BigScalar(prec);
    s_.measure_regular_upper = BigScalar(prec);
    s_.histograms.emplace_back("interval_size", std::move(buckets.interval_size));
    s_.histograms.emplace_back("escape_time", std::move(buckets.escape_time));
    s_.histograms.emplace_back("omega_width", std::move(buckets.omega_width));
    s_.histograms.emplace_back("rate_f", buckets.rate);
    s_.histograms.emplace_back("rate_c", std::move(buckets.rate));
    s_.histograms.emplace_back("distortion", std::move(buckets.distortion));
  }

  // Seeds the run covered; when set, finish() also rejects gaps.
  void set_domain(std::vector<ParamInterval> domain) { domain_ = std::move(domain); }

  void add(const PartitionRecord& r) {
    if (r.hi < r.lo) throw IntegrityError("record " + std::to_string(r.id) + " has lo > hi");
    ++s_.count_total;
    sub(scratch_, r.hi, r.lo, r.stochastic ? Rounding::Down : Rounding::Up);
    if (r.stochastic) {
      ++s_.count_stochastic;
      add_to(s_.measure_stochastic_lower, Rounding::Down);
      ++s_.escape_time_counts[r.n];
      s_.escape_time_measure[r.n] += scratch_.to_double();
      s_.histograms[0].add(sub(r.hi, r.lo, Rounding::Nearest).to_double());
      s_.histograms[1].add(static_cast<double>(r.n));
      s_.histograms[2].add(detail::to_double_checked(r.derived[kOmegaWidthLower]));
      const double rf = detail::to_double_checked(r.derived[kRateFLower]);
      const double rc = detail::to_double_checked(r.derived[kRateCLower]);
      const double dist = detail::to_double_checked(r.derived[kDistortionUpper]);
      s_.histograms[3].add(rf);
      s_.histograms[4].add(rc);
      s_.histograms[5].add(dist);
      s_.rate_f_max = std::max(s_.rate_f_max, rf);
      s_.rate_c_max = std::max(s_.rate_c_max, rc);
      if (std::isfinite(dist)) {
        s_.distortion_max = std::max(s_.distortion_max, dist);
      } else {
        ++s_.distortion_unbounded;
      }
    } else {
      if (!r.reason) throw IntegrityError("regular record " + std::to_string(r.id) + " has no reason");
      ++s_.count_regular;
      add_to(s_.measure_regular_upper, Rounding::Up);
      ++s_.count_by_reason[std::string(to_string(*r.reason))];
    }
    spans_.push_back({r.lo, r.hi, r.id, !r.stochastic});
  }

  void add(const ClassifiedInterval& c) { add(make_record(c)); }

  PartitionSummary finish() {
    std::sort(spans_.begin(), spans_.end(), [](const detail::Span& x, const detail::Span& y) {
      if (auto c = x.lo <=> y.lo; c != 0) return c < 0;
      if (auto c = x.hi <=> y.hi; c != 0) return c < 0;
      return x.id < y.id;
    });
    check_tiling();
    merge_components();
    spans_.clear();
    spans_.shrink_to_fit();
    return std::move(s_);
  }

 private:
  void add_to(BigScalar& sum, Rounding r) { qfam::add(sum, sum, scratch_, r); }

  void check_tiling() const {
    std::vector<std::pair<const BigScalar*, const BigScalar*>> runs;
    for (const auto& s : spans_) {
      if (!runs.empty() && s.lo < *runs.back().second) {
        throw IntegrityError("records overlap at id " + std::to_string(s.id));
      }
      if (!runs.empty() && s.lo == *runs.back().second) {
        runs.back().second = &s.hi;
      } else {
        runs.emplace_back(&s.lo, &s.hi);
      }
    }
    if (!domain_) return;
    std::vector<ParamInterval> seeds = *domain_;
    std::sort(seeds.begin(), seeds.end(), [](const auto& x, const auto& y) { return x.a < y.a; });
    std::vector<std::pair<const BigScalar*, const BigScalar*>> want;
    for (const auto& s : seeds) {
      if (!want.empty() && s.a == *want.back().second) {
        want.back().second = &s.b;
      } else {
        want.emplace_back(&s.a, &s.b);
      }
    }
    bool same = runs.size() == want.size();
    for (std::size_t i = 0; same && i < runs.size(); ++i) {
      same = *runs[i].first == *want[i].first && *runs[i].second == *want[i].second;
    }
    if (!same) throw IntegrityError("records do not tile the domain exactly");
  }

  void merge_components() {
    std::vector<Component> all;
    for (const auto& s : spans_) {
      if (!s.regular) continue;
      if (!all.empty() && all.back().hi == s.lo) {
        all.back().hi = s.hi;
        ++all.back().records;
      } else {
        all.push_back({s.lo, s.hi, 1});
      }
    }
    s_.component_count = all.size();
    std::vector<std::pair<double, std::size_t>> order;
    order.reserve(all.size());
    for (std::size_t i = 0; i < all.size(); ++i) order.emplace_back(all[i].width(), i);
    std::stable_sort(order.begin(), order.end(), [](auto& x, auto& y) { return x.first > y.first; });
    for (std::size_t i = 0; i < order.size() && i < top_; ++i) s_.components.push_back(std::move(all[order[i].second]));
  }

  Precision prec_;
  std::size_t top_;
  BigScalar scratch_;
  PartitionSummary s_;
  std::vector<detail::Span> spans_;
  std::optional<std::vector<ParamInterval>> domain_;
};

inline PartitionSummary summarize(std::span<const PartitionRecord> records, const BucketSpec& buckets = {},
                                  std::optional<std::vector<ParamInterval>> domain = std::nullopt,
                                  Precision prec = kDefaultPrecision) {
  SummaryBuilder b(prec, buckets);
  if (domain) b.set_domain(std::move(*domain));
  for (const auto& r : records) b.add(r);
  return b.finish();
}

inline PartitionSummary summarize(std::span<const ClassifiedInterval> records, const BucketSpec& buckets = {},
                                  std::optional<std::vector<ParamInterval>> domain = std::nullopt,
                                  Precision prec = kDefaultPrecision) {
  SummaryBuilder b(prec, buckets);
  if (domain) b.set_domain(std::move(*domain));
  for (const auto& r : records) b.add(r);
  return b.finish();
}

// ---------------------------------------------------------------------------
// CSV

inline std::string partition_csv_header() {
  std::string h = "id,parent_id,class,reason,n,lo,hi,lo_hex,hi_hex";
  for (auto name : kDerivedNames) {
    h += ',';
    h += name;
  }
  return h;
}

class PartitionCsvWriter {
 public:
  PartitionCsvWriter(const std::filesystem::path& path, Precision prec, int digits = kDefaultDecimalDigits)
      : path_(path), out_(path, std::ios::binary | std::ios::trunc), digits_(digits) {
    if (!out_) throw IoError(path_.string(), "cannot open for writing");
    out_ << "#schema=" << kPartitionSchema << ",precision=" << prec << '\n' << partition_csv_header() << '\n';
    check();
  }

  void write(const PartitionRecord& r) {
    out_ << r.id << ',' << r.parent_id << ',' << (r.stochastic ? "stochastic" : "regular") << ',';
    if (r.reason) out_ << to_string(*r.reason);
    out_ << ',';
    if (r.stochastic) out_ << r.n;
    out_ << ',' << r.lo.to_decimal(digits_, Rounding::Nearest) << ',' << r.hi.to_decimal(digits_, Rounding::Nearest)
         << ',' << r.lo.to_hex() << ',' << r.hi.to_hex();
    for (const auto& v : r.derived) out_ << ',' << v;
    out_ << '\n';
    if (!out_) check();
  }

  void close() {
    out_.flush();
    check();
    out_.close();
  }

 private:
  void check() const {
    if (!out_) throw IoError(path_.string(), "write failed");
  }

  std::filesystem::path path_;
  std::ofstream out_;
  int digits_;
};

namespace detail {

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

template <class T>
T parse_uint(std::string_view s, const char* what) {
  T v{};
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size()) throw ParseError(std::string("bad ") + what + ": '" + std::string(s) + "'");
  return v;
}

}  // namespace detail

struct CsvHeaderInfo {
  Precision precision = kDefaultPrecision;
};

// Streams rows of a partition CSV to `on_row`. Endpoints come from the hex
// columns and must be exact at the recorded precision.
inline CsvHeaderInfo read_partition_csv(const std::filesystem::path& path,
                                        const std::function<void(PartitionRecord&&)>& on_row) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError(path.string(), "cannot open for reading");
  std::string line;
  CsvHeaderInfo info;
  if (!std::getline(in, line)) throw ParseError(path.string() + ": empty file");
  const std::string prefix = "#schema=" + std::string(kPartitionSchema) + ",precision=";
  if (line.rfind("#schema=", 0) != 0) throw ParseError(path.string() + ": missing schema line");
  if (line.rfind(prefix, 0) != 0) {
    throw ParseError(path.string() + ": schema mismatch, found '" + line.substr(8) + "', expected '" +
                     std::string(kPartitionSchema) + "'");
  }
  info.precision = detail::parse_uint<Precision>(std::string_view(line).substr(prefix.size()), "precision");
  if (!std::getline(in, line) || line != partition_csv_header()) throw ParseError(path.string() + ": bad header row");
  std::size_t lineno = 2;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    auto f = detail::split_commas(line);
    if (f.size() != 9 + kDerivedCount) {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": expected " + std::to_string(9 + kDerivedCount) +
                       " fields");
    }
    PartitionRecord r{detail::parse_uint<std::uint64_t>(f[0], "id"),
                      detail::parse_uint<std::uint64_t>(f[1], "parent_id"),
                      false,
                      std::nullopt,
                      0,
                      parse_hex(f[7], info.precision),
                      parse_hex(f[8], info.precision),
                      {}};
    if (f[2] == "stochastic") {
      r.stochastic = true;
      r.n = detail::parse_uint<unsigned>(f[4], "n");
    } else if (f[2] == "regular") {
      r.reason = parse_regular_reason(f[3]);
      if (!r.reason) throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown reason");
    } else {
      throw ParseError(path.string() + ":" + std::to_string(lineno) + ": unknown class");
    }
    for (std::size_t i = 0; i < kDerivedCount; ++i) r.derived[i] = std::string(f[9 + i]);
    on_row(std::move(r));
  }
  if (in.bad()) throw IoError(path.string(), "read failed");
  return info;
}

inline std::vector<PartitionRecord> read_partition_csv(const std::filesystem::path& path) {
  std::vector<PartitionRecord> out;
  read_partition_csv(path, [&](PartitionRecord&& r) { out.push_back(std::move(r)); });
  return out;
}

// ---------------------------------------------------------------------------
// JSON summary and histogram CSVs

inline nlohmann::ordered_json summary_to_json(const PartitionSummary& s, Precision prec) {
  using nlohmann::ordered_json;
  ordered_json j;
  j["schema"] = kSummarySchema;
  j["precision"] = prec;
  j["count_total"] = s.count_total;
  j["count_stochastic"] = s.count_stochastic;
  j["count_regular"] = s.count_regular;
  j["count_by_reason"] = ordered_json::object();
  for (const auto& [k, v] : s.count_by_reason) j["count_by_reason"][k] = v;
  j["measure_stochastic_lower"] = s.measure_stochastic_lower.to_decimal(kDerivedDigits, Rounding::Down);
  j["measure_regular_upper"] = s.measure_regular_upper.to_decimal(kDerivedDigits, Rounding::Up);
  ordered_json et = ordered_json::object();
  for (const auto& [n, c] : s.escape_time_counts) {
    et[std::to_string(n)] = {{"count", c}, {"measure", s.escape_time_measure.at(n)}};
  }
  j["escape_times"] = std::move(et);
  j["rate_f_max"] = s.rate_f_max;
  j["rate_c_max"] = s.rate_c_max;
  j["distortion_max"] = s.distortion_max;
  j["distortion_unbounded"] = s.distortion_unbounded;
  ordered_json hs = ordered_json::array();
  for (const auto& h : s.histograms) {
    hs.push_back({{"name", h.name}, {"edges", h.edges}, {"counts", h.counts}, {"below", h.below}, {"above", h.above}});
  }
  j["histograms"] = std::move(hs);
  j["component_count"] = s.component_count;
  ordered_json cs = ordered_json::array();
  for (const auto& c : s.components) {
    cs.push_back({{"lo", c.lo.to_decimal(kDerivedDigits, Rounding::Down)},
                  {"hi", c.hi.to_decimal(kDerivedDigits, Rounding::Up)},
                  {"width", c.width()},
                  {"records", c.records}});
  }
  j["components_regular"] = std::move(cs);
  return j;
}

inline void write_text_file(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError(path.string(), "cannot open for writing");
  out << text;
  out.flush();
  if (!out) throw IoError(path.string(), "write failed");
}

inline void write_summary_json(const std::filesystem::path& path, const nlohmann::ordered_json& j) {
  write_text_file(path, j.dump(2) + "\n");
}

namespace detail {

inline std::string shortest(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

}  // namespace detail

// hist_<name>.csv: bucket_lo,bucket_hi,count with open-ended outer buckets.
inline void write_histogram_csvs(const std::filesystem::path& dir, const PartitionSummary& s) {
  for (const auto& h : s.histograms) {
    std::string text = "bucket_lo,bucket_hi,count\n";
    text += "-inf," + detail::shortest(h.edges.front()) + "," + std::to_string(h.below) + "\n";
    for (std::size_t i = 0; i < h.counts.size(); ++i) {
      text += detail::shortest(h.edges[i]) + "," + detail::shortest(h.edges[i + 1]) + "," + std::to_string(h.counts[i]) +
              "\n";
    }
    text += detail::shortest(h.edges.back()) + ",inf," + std::to_string(h.above) + "\n";
    write_text_file(dir / ("hist_" + h.name + ".csv"), text);
  }
}

}  // namespace qfam
