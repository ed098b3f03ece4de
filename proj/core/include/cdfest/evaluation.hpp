#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdfest/mixture_cdf.hpp"
#include "cdfest/pipeline.hpp"
#include "cdfest/workload.hpp"

namespace cdfest {

struct QErrorSummary {
  std::size_t count = 0;
  double p50 = 0.0;
  double p95 = 0.0;
  double p99 = 0.0;
  double max = 0.0;
};

/// Nearest-rank percentiles; an empty sample gives count 0 and NaN elsewhere.
QErrorSummary summarize_qerrors(std::span<const double> qerrors);

struct QueryResult {
  std::size_t id = 0;
  double estimate = 0.0;  // rounded and floored at 1
  std::uint64_t truth = 0;
  double qerror = 1.0;
};

struct LatencyStats {
  std::size_t samples = 0;
  double mean_ns = 0.0;
  double median_ns = 0.0;
};

struct BenchOptions {
  std::size_t warmup = 50;
  std::size_t repetitions = 1;
  /// Naive inclusion-exclusion is timed only up to this many columns; its cost
  /// grows as 2^d.
  std::size_t naive_max_dims = 12;
  std::size_t naive_repetitions = 1;
  /// Naive timing uses only the first boxes.
  std::size_t naive_max_queries = 20;
};

struct LatencyReport {
  std::size_t warmup = 0;
  LatencyStats merged;
  std::optional<LatencyStats> naive;
  /// naive mean / merged mean; NaN when naive was not timed.
  double speedup = 0.0;
  /// phi evaluations requested by one merged query.
  std::uint64_t phi_calls_per_query = 0;
  /// Merged probability of each box (timing never changes these).
  std::vector<double> estimates;
};

/// Wall-clock (steady_clock) per box on the calling thread. The first `warmup`
/// evaluations, cycling through the boxes, are not timed.
LatencyReport bench_latency(const MixtureCdf& model, std::span<const QueryBox> boxes,
                            const BenchOptions& options = {});

// Predictability suites.

struct SuiteVerdict {
  std::string name;
  std::size_t cases = 0;
  std::size_t violations = 0;
  /// Largest observed residual (consistency) or distinct-value count (stability).
  double worst = 0.0;
  /// First few violations, each naming the case seed that reproduces it.
  std::vector<std::string> counterexamples;

  bool passed() const { return violations == 0; }
};

struct PropertyOptions {
  std::size_t cases = 1000;
  std::size_t stability_repeats = 2000;
  std::uint64_t seed = 0;
  double consistency_tolerance = 1e-10;
};

struct EvalReport {
  std::vector<QueryResult> queries;
  QErrorSummary qerror;
  std::optional<LatencyReport> latency;
  std::vector<SuiteVerdict> suites;
  std::map<std::string, std::string> config;
};

/// Estimates every workload query against `row_count` rows. Per-query results
/// and the summary depend only on the model and the workload.
EvalReport evaluate(const MixtureCdf& model, const Workload& workload, std::uint64_t row_count);

/// Adds merged/naive timing of the workload's compiled boxes to `report`.
void attach_latency(EvalReport& report, const MixtureCdf& model, const Workload& workload,
                    const BenchOptions& options = {});

/// id,estimate,true,qerror
void write_query_results(const std::vector<QueryResult>& results, std::ostream& out);
/// JSON object with config, qerror summary and, when present, latency and
/// property-suite verdicts.
std::string report_to_json(const EvalReport& report);

/// Monotonicity (box expansion never lowers the probability), validity (an
/// inverted interval gives exactly 0, others lie in [0, 1]), consistency (a
/// split of one column adds up) and stability (repeated evaluation of one box
/// yields one distinct value).
std::vector<SuiteVerdict> run_property_suites(const MixtureCdf& model, const PropertyOptions& options = {});

/// Seed of case `index` of suite `suite` under `seed`.
std::uint64_t suite_case_seed(std::uint64_t seed, const std::string& suite, std::size_t index);

/// Random normalized-space box used by the suites: each side a sentinel with
/// probability 0.15, otherwise finite in [-3, 3], lower <= upper.
QueryBox random_suite_box(std::size_t dims, std::uint64_t case_seed);

// Synthetic data.

/// Integer columns driven by one latent Gaussian: column j is
/// round(mean_j + scale_j * (rho * z + sqrt(1 - rho^2) * e_j)), so every pair of
/// columns has correlation close to rho^2.
RawTable synthetic_correlated_table(std::size_t rows, std::size_t columns, std::uint64_t seed,
                                    double rho = 0.9);

}  // namespace cdfest
