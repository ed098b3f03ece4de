#include "cdfest/evaluation.hpp"

#include <algorithm>
#include <bit>
#include <chrono>
#include <cinttypes>
#include <cmath>
#include <cstdio>
#include <limits>
#include <ostream>
#include <set>

#include "cdfest/checksum.hpp"
#include "cdfest/error.hpp"
#include "cdfest/estimator.hpp"
#include "cdfest/instrumentation.hpp"
#include "cdfest/qerror.hpp"
#include "cdfest/query_compile.hpp"
#include "json.hpp"
#include "random_util.hpp"

namespace cdfest {

using nlohmann::ordered_json;

QErrorSummary summarize_qerrors(std::span<const double> qerrors) {
  QErrorSummary s;
  s.count = qerrors.size();
  if (qerrors.empty()) {
    s.p50 = s.p95 = s.p99 = s.max = std::numeric_limits<double>::quiet_NaN();
    return s;
  }
  std::vector<double> v(qerrors.begin(), qerrors.end());
  s.p50 = nearest_rank(v, 50);
  s.p95 = nearest_rank(v, 95);
  s.p99 = nearest_rank(v, 99);
  s.max = *std::max_element(v.begin(), v.end());
  return s;
}

namespace {

using Clock = std::chrono::steady_clock;

LatencyStats stats_of(std::vector<double> samples) {
  LatencyStats s;
  s.samples = samples.size();
  if (samples.empty()) return s;
  double sum = 0.0;
  for (double x : samples) sum += x;
  s.mean_ns = sum / static_cast<double>(samples.size());
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  s.median_ns = n % 2 ? samples[n / 2] : 0.5 * (samples[n / 2 - 1] + samples[n / 2]);
  return s;
}

template <typename Fn>
std::vector<double> time_each(std::span<const QueryBox> boxes, std::size_t repetitions, Fn&& fn) {
  std::vector<double> samples;
  samples.reserve(boxes.size() * repetitions);
  volatile double sink = 0.0;
  for (std::size_t rep = 0; rep < repetitions; ++rep) {
    for (const QueryBox& b : boxes) {
      const auto t0 = Clock::now();
      const double p = fn(b);
      const auto t1 = Clock::now();
      sink = sink + p;
      samples.push_back(static_cast<double>(std::chrono::duration_cast<std::chrono::nanoseconds>(t1 - t0).count()));
    }
  }
  return samples;
}

}  // namespace

LatencyReport bench_latency(const MixtureCdf& model, std::span<const QueryBox> boxes,
                            const BenchOptions& options) {
  if (boxes.empty()) throw InvalidInput("bench_latency: no boxes");
  LatencyReport r;
  r.warmup = options.warmup;
  volatile double sink = 0.0;
  for (std::size_t w = 0; w < options.warmup; ++w) sink = sink + model.box_probability(boxes[w % boxes.size()]);

  instrumentation::reset();
  model.box_probability(boxes.front());
  r.phi_calls_per_query = instrumentation::counters().phi_calls;

  r.merged = stats_of(time_each(boxes, std::max<std::size_t>(options.repetitions, 1),
                                [&](const QueryBox& b) { return model.box_probability(b); }));
  if (model.dims() <= options.naive_max_dims && model.dims() <= MixtureCdf::kNaiveMaxDims) {
    const auto subset = boxes.first(std::clamp<std::size_t>(options.naive_max_queries, 1, boxes.size()));
    const std::size_t warm = std::min<std::size_t>(options.warmup, subset.size());
    for (std::size_t w = 0; w < warm; ++w) sink = sink + model.box_probability_naive(subset[w]);
    r.naive = stats_of(time_each(subset, std::max<std::size_t>(options.naive_repetitions, 1),
                                 [&](const QueryBox& b) { return model.box_probability_naive(b); }));
    r.speedup = r.naive->mean_ns / r.merged.mean_ns;
  } else {
    r.speedup = std::numeric_limits<double>::quiet_NaN();
  }
  r.estimates.reserve(boxes.size());
  for (const QueryBox& b : boxes) r.estimates.push_back(model.box_probability(b));
  return r;
}

EvalReport evaluate(const MixtureCdf& model, const Workload& workload, std::uint64_t row_count) {
  const Estimator est(model, row_count);
  EvalReport report;
  std::vector<double> q;
  for (std::size_t i = 0; i < workload.queries.size(); ++i) {
    const LabeledQuery& lq = workload.queries[i];
    const CardinalityEstimate c = est.cardinality(lq.predicates);
    QueryResult r;
    r.id = i;
    r.estimate = c.floored;
    r.truth = lq.card;
    r.qerror = qerror(c.floored, static_cast<double>(lq.card));
    q.push_back(r.qerror);
    report.queries.push_back(r);
  }
  report.qerror = summarize_qerrors(q);
  return report;
}

void attach_latency(EvalReport& report, const MixtureCdf& model, const Workload& workload,
                    const BenchOptions& options) {
  std::vector<QueryBox> boxes;
  for (const LabeledQuery& lq : workload.queries) {
    for (const CompiledQuery& b : compile_union(lq.predicates, model.columns())) {
      if (!b.empty) boxes.push_back(b.box);
    }
  }
  report.latency = bench_latency(model, boxes, options);
}

namespace {

std::string number(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

ordered_json finite_or_null(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

}  // namespace

void write_query_results(const std::vector<QueryResult>& results, std::ostream& out) {
  out << "id,estimate,true,qerror\n";
  for (const QueryResult& r : results) {
    out << r.id << ',' << number(r.estimate) << ',' << r.truth << ',' << number(r.qerror) << '\n';
  }
}

std::string report_to_json(const EvalReport& report) {
  ordered_json j;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : report.config) config[k] = v;
  j["config"] = config;
  j["queries"] = report.qerror.count;
  j["qerror"] = {{"p50", finite_or_null(report.qerror.p50)},
                 {"p95", finite_or_null(report.qerror.p95)},
                 {"p99", finite_or_null(report.qerror.p99)},
                 {"max", finite_or_null(report.qerror.max)}};
  if (report.latency) {
    const LatencyReport& l = *report.latency;
    ordered_json lat = {{"warmup", l.warmup},
                        {"merged", {{"samples", l.merged.samples},
                                    {"mean_ns", l.merged.mean_ns},
                                    {"median_ns", l.merged.median_ns}}},
                        {"phi_calls_per_query", l.phi_calls_per_query}};
    if (l.naive) {
      lat["naive"] = {{"samples", l.naive->samples}, {"mean_ns", l.naive->mean_ns}, {"median_ns", l.naive->median_ns}};
      lat["speedup"] = finite_or_null(l.speedup);
    }
    j["latency"] = lat;
  }
  if (!report.suites.empty()) {
    ordered_json suites = ordered_json::array();
    for (const SuiteVerdict& s : report.suites) {
      suites.push_back({{"name", s.name},
                        {"cases", s.cases},
                        {"violations", s.violations},
                        {"worst", s.worst},
                        {"passed", s.passed()},
                        {"counterexamples", s.counterexamples}});
    }
    j["property_suites"] = suites;
  }
  return j.dump(2) + "\n";
}

std::uint64_t suite_case_seed(std::uint64_t seed, const std::string& suite, std::size_t index) {
  Fnv1a h;
  h.update(suite);
  return detail::splitmix64(seed ^ detail::splitmix64(h.digest() + index));
}

namespace {

constexpr double kRange = 3.0;
constexpr double kSentinelRate = 0.15;

double uniform(std::mt19937_64& rng, double lo, double hi) { return lo + (hi - lo) * detail::uniform01(rng); }

void append_example(SuiteVerdict& v, const std::string& text) {
  ++v.violations;
  if (v.counterexamples.size() < 5) v.counterexamples.push_back(text);
}

std::string seed_text(std::size_t index, std::uint64_t seed) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "case %zu (seed 0x%016" PRIx64 ")", index, seed);
  return buf;
}

}  // namespace

QueryBox random_suite_box(std::size_t dims, std::uint64_t case_seed) {
  std::mt19937_64 rng(case_seed);
  QueryBox box(dims);
  for (std::size_t j = 0; j < dims; ++j) {
    double a = uniform(rng, -kRange, kRange);
    double b = uniform(rng, -kRange, kRange);
    if (a > b) std::swap(a, b);
    box[j].lower = detail::uniform01(rng) < kSentinelRate ? Endpoint::neg_inf() : Endpoint::finite(a);
    box[j].upper = detail::uniform01(rng) < kSentinelRate ? Endpoint::pos_inf() : Endpoint::finite(b);
  }
  return box;
}

std::vector<SuiteVerdict> run_property_suites(const MixtureCdf& model, const PropertyOptions& options) {
  if (options.cases == 0) throw InvalidInput("property suites need at least one case");
  const std::size_t d = model.dims();
  std::vector<SuiteVerdict> out;

  {
    SuiteVerdict v;
    v.name = "monotonicity";
    v.cases = options.cases;
    for (std::size_t c = 0; c < options.cases; ++c) {
      const std::uint64_t s = suite_case_seed(options.seed, v.name, c);
      const QueryBox inner = random_suite_box(d, s);
      std::mt19937_64 rng(s ^ 0x9e3779b97f4a7c15ull);
      QueryBox outer = inner;
      for (std::size_t j = 0; j < d; ++j) {
        Interval& iv = outer[j];
        if (iv.lower.is_finite()) {
          iv.lower = detail::uniform01(rng) < 0.2 ? Endpoint::neg_inf()
                                                  : Endpoint::finite(iv.lower.as_double() - uniform(rng, 0, 2));
        }
        if (iv.upper.is_finite()) {
          iv.upper = detail::uniform01(rng) < 0.2 ? Endpoint::pos_inf()
                                                  : Endpoint::finite(iv.upper.as_double() + uniform(rng, 0, 2));
        }
      }
      const double p_in = model.box_probability(inner);
      const double p_out = model.box_probability(outer);
      if (!(p_out >= p_in)) {
        append_example(v, seed_text(c, s) + ": expanded box " + number(p_out) + " < " + number(p_in));
      }
    }
    out.push_back(std::move(v));
  }

  {
    SuiteVerdict v;
    v.name = "validity";
    v.cases = options.cases;
    for (std::size_t c = 0; c < options.cases; ++c) {
      const std::uint64_t s = suite_case_seed(options.seed, v.name, c);
      QueryBox box = random_suite_box(d, s);
      const double p = model.box_probability(box);
      if (!(p >= 0.0 && p <= 1.0)) append_example(v, seed_text(c, s) + ": probability " + number(p));
      std::mt19937_64 rng(s ^ 0x9e3779b97f4a7c15ull);
      const std::size_t j = detail::uniform_index(rng, d);
      double a = uniform(rng, -kRange, kRange);
      double b = uniform(rng, -kRange, kRange);
      if (a == b) b = std::nextafter(a, kRange + 1);
      if (a < b) std::swap(a, b);
      box[j] = {Endpoint::finite(a), Endpoint::finite(b)};
      const double z = model.box_probability(box);
      if (z != 0.0) {
        append_example(v, seed_text(c, s) + ": inverted column " + std::to_string(j) + " gives " + number(z));
      }
    }
    out.push_back(std::move(v));
  }

  {
    SuiteVerdict v;
    v.name = "consistency";
    v.cases = options.cases;
    for (std::size_t c = 0; c < options.cases; ++c) {
      const std::uint64_t s = suite_case_seed(options.seed, v.name, c);
      const QueryBox box = random_suite_box(d, s);
      std::mt19937_64 rng(s ^ 0x9e3779b97f4a7c15ull);
      const std::size_t j = detail::uniform_index(rng, d);
      const Interval& iv = box[j];
      const double lo = iv.lower.is_finite() ? iv.lower.as_double()
                                             : (iv.upper.is_finite() ? iv.upper.as_double() - kRange : -kRange);
      const double hi = iv.upper.is_finite() ? iv.upper.as_double() : lo + kRange;
      const double cut = hi > lo ? uniform(rng, lo, hi) : lo;
      QueryBox left = box, right = box;
      left[j].upper = Endpoint::finite(cut);
      right[j].lower = Endpoint::finite(cut);
      const double residual =
          std::abs(model.box_probability(box) - model.box_probability(left) - model.box_probability(right));
      v.worst = std::max(v.worst, residual);
      if (!(residual < options.consistency_tolerance)) {
        append_example(v, seed_text(c, s) + ": split of column " + std::to_string(j) + " at " + number(cut) +
                              " leaves residual " + number(residual));
      }
    }
    out.push_back(std::move(v));
  }

  {
    SuiteVerdict v;
    v.name = "stability";
    v.cases = 1;
    const std::uint64_t s = suite_case_seed(options.seed, v.name, 0);
    const QueryBox box = random_suite_box(d, s);
    std::set<std::uint64_t> distinct;
    for (std::size_t r = 0; r < options.stability_repeats; ++r) {
      distinct.insert(std::bit_cast<std::uint64_t>(model.box_probability(box)));
    }
    v.worst = static_cast<double>(distinct.size());
    if (distinct.size() != 1) {
      append_example(v, seed_text(0, s) + ": " + std::to_string(distinct.size()) + " distinct values over " +
                            std::to_string(options.stability_repeats) + " runs");
    }
    out.push_back(std::move(v));
  }
  return out;
}

RawTable synthetic_correlated_table(std::size_t rows, std::size_t columns, std::uint64_t seed, double rho) {
  if (columns == 0 || rows == 0) throw InvalidInput("synthetic table needs rows and columns");
  if (!(rho >= 0.0 && rho < 1.0)) throw InvalidInput("synthetic table: rho must lie in [0, 1)");
  std::mt19937_64 rng(detail::splitmix64(seed));
  RawTable t;
  t.columns.resize(columns);
  for (std::size_t j = 0; j < columns; ++j) {
    t.columns[j].name = "c" + std::to_string(j);
    t.columns[j].values.resize(rows);
  }
  const double noise = std::sqrt(1.0 - rho * rho);
  for (std::size_t r = 0; r < rows; ++r) {
    const double z = detail::standard_normal(rng);
    for (std::size_t j = 0; j < columns; ++j) {
      const double scale = 4.0 + 3.0 * static_cast<double>(j % 7);
      const double mean = 10.0 * static_cast<double>(j);
      t.columns[j].values[r] = std::round(mean + scale * (rho * z + noise * detail::standard_normal(rng)));
    }
  }
  Fnv1a h;
  h.update("synthetic");
  h.update_u64(rows);
  h.update_u64(columns);
  h.update_u64(seed);
  h.update_u64(std::bit_cast<std::uint64_t>(rho));
  t.source_checksum = to_hex(h.digest());
  return t;
}

}  // namespace cdfest
