// Acceptance gate. Prints one PASS/FAIL line per criterion and exits non-zero
// if any criterion fails. `--only AC3,AC5` restricts the run.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "cdfest/estimator.hpp"
#include "cdfest/evaluation.hpp"
#include "cdfest/instrumentation.hpp"
#include "cdfest/mixture_cdf.hpp"
#include "cdfest/multi_table.hpp"
#include "cdfest/pipeline.hpp"
#include "cdfest/query_compile.hpp"
#include "cdfest/training.hpp"
#include "cdfest/workload.hpp"
#include "oracles.hpp"
#include "test_models.hpp"

namespace fs = std::filesystem;
using namespace cdfest;

namespace {

// Pinned thresholds.
constexpr double kMergedTolerance = 1e-10;         // AC1
constexpr std::size_t kMergedPairsPerDim = 1000;  // AC1
constexpr double kGradientRelTolerance = 1e-4;    // AC2
constexpr double kGradientStep = 1e-5;            // AC2, central differences on raw parameters
constexpr double kGradientFloor = 1e-6;           // AC2, relative-error denominator floor
constexpr std::size_t kSuiteCases = 1000;         // AC3
constexpr std::size_t kStabilityRepeats = 2000;   // AC3
constexpr double kMedianQErrorMax = 1.2;          // AC4
constexpr double kP95QErrorMax = 3.0;             // AC4
constexpr double kQueryModeP95Factor = 2.0;       // AC4
constexpr double kLatencyRatioMax = 2.0;          // AC5, d=20 over d=5
constexpr double kSpeedupMin = 5.0;               // AC5, naive over merged at d=10
constexpr double kJoinTolerance = 1e-9;           // AC6, relative, sums of 1/fanout weights
constexpr double kConditionalTolerance = 1e-8;    // AC7
constexpr std::size_t kConditionalInstances = 200;  // AC7

struct Verdict {
  bool pass = false;
  std::string detail;
};

struct Criterion {
  std::string id;
  std::string title;
  double limit_seconds;
  std::function<Verdict()> run;
};

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

double rel_err(double a, double b) {
  return std::fabs(a - b) / std::max({std::fabs(a), std::fabs(b), kGradientFloor});
}

// AC1 ------------------------------------------------------------------------

Verdict merged_equals_naive() {
  double worst = 0.0;
  std::size_t pairs = 0;
  for (std::size_t d = 1; d <= 8; ++d) {
    std::mt19937_64 rng(1000 + d);
    for (std::size_t n = 0; n < kMergedPairsPerDim; ++n) {
      const std::size_t m = 1 + rng() % 12;
      MixtureCdf model = testing::random_model(m, d, rng());
      testing::jitter(model, rng(), 0.8);
      const QueryBox box = testing::random_box(d, rng);
      worst = std::max(worst, std::fabs(model.box_probability(box) - model.box_probability_naive(box)));
      ++pairs;
    }
  }
  return {worst < kMergedTolerance, "max |merged - naive| " + fmt("%.3g", worst) + " over " +
                                        std::to_string(pairs) + " pairs, d = 1..8 (limit 1e-10)"};
}

// AC2 ------------------------------------------------------------------------

template <typename Loss>
double worst_gradient_error(MixtureCdf model, const GradientTape& tape, Loss&& loss, std::size_t& checked) {
  double worst = 0.0;
  auto probe = [&](std::span<double> params, std::span<const double> analytic) {
    for (std::size_t k = 0; k < params.size(); ++k) {
      const double saved = params[k];
      params[k] = saved + kGradientStep;
      model.refresh();
      const double up = loss(model);
      params[k] = saved - kGradientStep;
      model.refresh();
      const double down = loss(model);
      params[k] = saved;
      model.refresh();
      worst = std::max(worst, rel_err(analytic[k], (up - down) / (2 * kGradientStep)));
      ++checked;
    }
  };
  probe(model.raw_logits(), tape.logits);
  probe(model.raw_parameters(), tape.params);
  return worst;
}

Verdict gradients_match_finite_differences() {
  double worst_nll = 0.0, worst_q = 0.0;
  std::size_t checked = 0;
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    std::mt19937_64 rng(77 + seed);
    MixtureCdf model = testing::random_model(3, 2, 300 + seed);
    testing::jitter(model, 400 + seed, 0.4);

    std::normal_distribution<double> g;
    std::vector<double> rows(2 * 64);
    for (double& v : rows) v = g(rng);
    GradientTape tape(model);
    nll_loss(model, rows, &tape);
    worst_nll = std::max(worst_nll, worst_gradient_error(
                                        model, tape, [&](const MixtureCdf& mm) { return nll_loss(mm, rows, nullptr); },
                                        checked));

    std::uniform_real_distribution<double> u(-1.5, 1.5), width(0.6, 2.5), sel(0.02, 0.4);
    std::vector<QuerySample> queries;
    for (int q = 0; q < 24; ++q) {
      QueryBox box(2);
      for (std::size_t j = 0; j < 2; ++j) {
        const double a = u(rng);
        box[j].lower = rng() % 4 == 0 ? Endpoint::neg_inf() : Endpoint::finite(a);
        box[j].upper = rng() % 4 == 0 ? Endpoint::pos_inf() : Endpoint::finite(a + width(rng));
      }
      queries.push_back({box, sel(rng)});
    }
    constexpr std::uint64_t rows_in_table = 100000;
    qerror_loss(model, queries, rows_in_table, 1e8, &tape);
    worst_q = std::max(worst_q, worst_gradient_error(
                                    model, tape,
                                    [&](const MixtureCdf& mm) {
                                      return qerror_loss(mm, queries, rows_in_table, 1e8, nullptr).loss;
                                    },
                                    checked));
  }
  const double worst = std::max(worst_nll, worst_q);
  return {worst < kGradientRelTolerance, "max relative error NLL " + fmt("%.3g", worst_nll) + ", log(Q+1) " +
                                             fmt("%.3g", worst_q) + " over " + std::to_string(checked) +
                                             " partials, d=2 m=3 (limit 1e-4)"};
}

// AC3 ------------------------------------------------------------------------

Verdict suites_hold() {
  PropertyOptions opts;
  opts.cases = kSuiteCases;
  opts.stability_repeats = kStabilityRepeats;

  std::vector<std::pair<std::string, MixtureCdf>> models;
  models.emplace_back("untrained d=5 m=64", testing::random_model(64, 5, 9));
  {
    const RawTable raw = synthetic_correlated_table(2000, 5, 3);
    const PreparedTable p = prepare(raw, 0);
    TrainConfig cfg;
    cfg.components = 64;
    cfg.epochs = 40;
    cfg.batch_size = 512;
    MixtureCdf trained = initialize_model(p.columns, cfg);
    train_on_data(trained, p, cfg);
    models.emplace_back("trained d=5 m=64", std::move(trained));
  }
  bool pass = true;
  std::string detail;
  for (const auto& [label, model] : models) {
    std::size_t violations = 0;
    std::size_t distinct = 0;
    for (const SuiteVerdict& v : run_property_suites(model, opts)) {
      violations += v.violations;
      if (v.name == "stability") distinct = static_cast<std::size_t>(v.worst);
      pass = pass && v.passed();
    }
    if (!detail.empty()) detail += "; ";
    detail += label + ": " + std::to_string(violations) + " violations, " + std::to_string(distinct) +
              " distinct value(s) in " + std::to_string(kStabilityRepeats) + " repeats";
  }
  return {pass, detail + " (1000 cases per suite)"};
}

// AC4 ------------------------------------------------------------------------

std::vector<QuerySample> samples(const Workload& w, const MixtureCdf& model, std::uint64_t rows) {
  std::vector<QuerySample> out;
  for (const LabeledQuery& q : w.queries) {
    const CompiledQuery c = compile(q.predicates, model.columns());
    if (c.empty) continue;
    out.push_back({c.box, static_cast<double>(q.card) / static_cast<double>(rows)});
  }
  return out;
}

Verdict accuracy_on_correlated_table() {
  const RawTable raw = synthetic_correlated_table(10000, 5, 0);
  const PreparedTable p = prepare(raw, 0);
  const Workload test = gen_workload(raw, 500, 1);
  const Workload train_queries = gen_workload(raw, 2000, 2);

  TrainConfig data_cfg;
  data_cfg.components = 256;
  data_cfg.epochs = 300;
  MixtureCdf data_model = initialize_model(p.columns, data_cfg);
  train_on_data(data_model, p, data_cfg);
  const QErrorSummary d = evaluate(data_model, test, p.row_count).qerror;

  TrainConfig q_cfg = data_cfg;
  q_cfg.mode = TrainMode::kQuery;
  MixtureCdf query_model = initialize_model(p.columns, q_cfg);
  train_on_queries(query_model, samples(train_queries, query_model, p.row_count), p.row_count, q_cfg);
  const QErrorSummary q = evaluate(query_model, test, p.row_count).qerror;

  const bool pass = d.p50 <= kMedianQErrorMax && d.p95 <= kP95QErrorMax && q.p95 <= kQueryModeP95Factor * d.p95;
  return {pass, "data-trained 50th " + fmt("%.4f", d.p50) + " (<= 1.2), 95th " + fmt("%.4f", d.p95) +
                    " (<= 3.0), max " + fmt("%.3f", d.max) + "; query-trained 95th " + fmt("%.4f", q.p95) +
                    " (<= 2 x " + fmt("%.4f", d.p95) + "), 50th " + fmt("%.4f", q.p50) +
                    "; 10000 x 5 table, m=256, 300 epochs, 500 test queries"};
}

// AC5 ------------------------------------------------------------------------

Verdict latency_shape() {
  constexpr std::size_t kComponents = 1000;
  constexpr std::size_t kQueries = 100;
  const RawTable table = synthetic_correlated_table(10000, 20, 0);
  BenchOptions bench;
  bench.repetitions = 5;
  bench.naive_max_queries = 10;
  double merged5 = 0.0, merged20 = 0.0, speedup10 = 0.0;
  bool counts_ok = true;
  for (std::size_t d : {5u, 10u, 20u}) {
    RawTable prefix;
    prefix.columns.assign(table.columns.begin(), table.columns.begin() + static_cast<std::ptrdiff_t>(d));
    const PreparedTable p = prepare(prefix, 0);
    TrainConfig cfg;
    cfg.components = kComponents;
    const MixtureCdf model = initialize_model(p.columns, cfg);
    const Workload w = gen_workload(prefix, kQueries, 0);
    std::vector<QueryBox> boxes;
    for (const auto& q : w.queries) boxes.push_back(compile(q.predicates, model.columns()).box);

    for (const QueryBox& b : boxes) {
      instrumentation::reset();
      model.box_probability(b);
      counts_ok = counts_ok && instrumentation::counters().phi_calls == 2 * kComponents * d;
    }
    bench.naive_max_dims = d == 10 ? 10 : 0;
    const LatencyReport r = bench_latency(model, boxes, bench);
    if (d == 5) merged5 = r.merged.mean_ns;
    if (d == 20) merged20 = r.merged.mean_ns;
    if (d == 10) speedup10 = r.speedup;
  }
  const double ratio = merged20 / merged5;
  const bool pass = ratio <= kLatencyRatioMax && speedup10 >= kSpeedupMin && counts_ok;
  return {pass, "merged mean d=5 " + fmt("%.3f", merged5 / 1e6) + " ms, d=20 " + fmt("%.3f", merged20 / 1e6) +
                    " ms, ratio " + fmt("%.2f", ratio) + " (<= 2); naive/merged at d=10 " + fmt("%.1f", speedup10) +
                    "x (>= 5); phi calls per query == 2md: " + (counts_ok ? "yes" : "no") + "; m=1000"};
}

// AC6 ------------------------------------------------------------------------

Predicate pred(std::string col, CompareOp op, double v) { return {std::move(col), op, Literal::of(v), {}}; }

Verdict join_algebra() {
  const SchemaGraph two_table = SchemaGraph::parse(R"({
    "tables": [
      {"name": "A", "csv": "a.csv", "pk": "pk", "columns": {"pk": "numeric", "x": "numeric"}},
      {"name": "E", "csv": "e.csv", "columns": {"fk": "numeric", "x": "numeric"}}],
    "edges": [{"child": "E", "fk": "fk", "parent": "A"}]})");
  const std::vector<RawTable> two_table_rows{
      testing::numeric_table({{"pk", {1, 2, 3}}, {"x", {0.7, 0.3, 0.5}}}),
      testing::numeric_table({{"fk", {2, 2, 3}}, {"x", {10, 40, 20}}})};
  const FlatTable ff = flatten(two_table, two_table_rows);
  const double join_ne = empirical_join_count(ff, {{"A", "E"}, {pred("E.x", CompareOp::kNe, 40)}});
  const double base_lt = empirical_join_count(ff, {{"A"}, {pred("A.x", CompareOp::kLt, 0.6)}});

  const testing::ToySchema s = testing::toy_schema(31, false);
  const FlatTable f = flatten(s.schema, s.tables);
  const std::vector<std::vector<std::size_t>> subsets{{0}, {1}, {2}, {0, 1}, {1, 2}, {0, 1, 2}};
  const std::vector<std::pair<std::string, int>> attrs{{"x", 5}, {"y", 9}, {"z", 4}};
  const CompareOp ops[] = {CompareOp::kEq, CompareOp::kNe, CompareOp::kLt,
                           CompareOp::kLe, CompareOp::kGt, CompareOp::kGe};
  std::mt19937_64 rng(8);
  std::size_t checked = 0, mismatches = 0;
  for (const auto& q : subsets) {
    for (int trial = 0; trial < 40; ++trial) {
      JoinQuery jq;
      std::vector<testing::RawPredicate> raw;
      for (std::size_t t : q) jq.tables.push_back(s.schema.tables[t].name);
      const int npred = trial == 0 ? 0 : static_cast<int>(rng() % 3);
      for (int k = 0; k < npred; ++k) {
        const std::size_t t = q[rng() % q.size()];
        const auto& [col, hi] = attrs[t];
        const CompareOp op = ops[rng() % 6];
        const double v = static_cast<double>(rng() % static_cast<unsigned>(hi + 2));
        raw.push_back({t, col, op, v});
        jq.predicates.push_back(pred(s.schema.tables[t].name + "." + col, op, v));
      }
      const double expected = testing::brute_force_join(s, q, raw);
      const double got = empirical_join_count(f, jq);
      if (std::fabs(got - expected) > kJoinTolerance * std::max(1.0, expected)) ++mismatches;
      ++checked;
    }
  }
  const bool pass = join_ne == 2.0 && base_lt == 2.0 && mismatches == 0;
  return {pass, "E.x != 40 over A,E = " + fmt("%.17g", join_ne) + ", A.x < 0.6 over A = " + fmt("%.17g", base_lt) +
                    "; 3-table schema " + std::to_string(checked - mismatches) + "/" + std::to_string(checked) +
                    " queries equal the nested-loop join"};
}

// AC7 ------------------------------------------------------------------------

Verdict conditional_expectation_matches_stepwise() {
  double worst = 0.0;
  for (std::uint64_t n = 0; n < kConditionalInstances; ++n) {
    const std::size_t d = 2 + n % 4;
    const std::size_t k = 1 + (n / 4) % (d - 1);
    const auto inst = testing::toy_instance(7000 + n, d, k);
    const double got = conditional_expectation(inst.model, inst.domain, inst.weights, inst.box);
    worst = std::max(worst, std::fabs(got - testing::stepwise_oracle(inst)));
  }
  return {worst < kConditionalTolerance, "max |difference| " + fmt("%.3g", worst) + " over " +
                                             std::to_string(kConditionalInstances) +
                                             " instances, d = 2..5 (limit 1e-8)"};
}

// AC8 ------------------------------------------------------------------------

std::string slurp(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(f), {}};
}

int sh(const std::string& cmd) { return std::system((cmd + " > /dev/null 2>&1").c_str()); }

Verdict artifacts_reproducible() {
  const fs::path dir = fs::temp_directory_path() / "cdfest_acceptance_determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  {
    std::ofstream csv(dir / "t.csv");
    write_csv(synthetic_correlated_table(3000, 4, 5), csv);
    std::ofstream(dir / "t.ini") << "[columns]\nc0 = numeric\nc1 = numeric\nc2 = numeric\nc3 = numeric\n";
  }
  const std::string tool = CDFEST_TOOL_PATH;
  const std::string data = " --csv " + (dir / "t.csv").string() + " --schema " + (dir / "t.ini").string();
  const std::vector<std::string> artifacts{"w.jsonl", "m.json", "loss.csv", "mq.json", "r.json", "q.csv"};
  for (const std::string run : {"1", "2"}) {
    const fs::path out = dir / run;
    fs::create_directories(out);
    auto at = [&](const std::string& name) { return (out / name).string(); };
    const int rc = sh(tool + " gen-workload" + data + " --n 200 --seed 4 --out " + at("w.jsonl")) |
                   sh(tool + " train" + data + " --epochs 5 --components 32 --seed 7 --dequant-seed 3 --out " +
                      at("m.json") + " --loss-curve " + at("loss.csv")) |
                   sh(tool + " train" + data + " --mode query --workload " + at("w.jsonl") +
                      " --epochs 5 --components 16 --seed 7 --out " + at("mq.json")) |
                   sh(tool + " eval --model " + at("m.json") + " --workload " + at("w.jsonl") + " --out " +
                      at("r.json") + " --per-query " + at("q.csv") + " --suites --cases 200");
    if (rc != 0) return {false, "a pipeline command failed in run " + run};
  }
  std::size_t identical = 0;
  std::string differing;
  for (const auto& a : artifacts) {
    const std::string one = slurp(dir / "1" / a);
    if (!one.empty() && one == slurp(dir / "2" / a)) {
      ++identical;
    } else {
      differing += " " + a;
    }
  }
  fs::remove_all(dir);
  return {identical == artifacts.size(), std::to_string(identical) + "/" + std::to_string(artifacts.size()) +
                                             " artifacts bitwise identical across two process runs" +
                                             (differing.empty() ? "" : "; differ:" + differing)};
}

}  // namespace

int main(int argc, char** argv) {
  std::set<std::string> only;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--only" && i + 1 < argc) {
      std::stringstream ss(argv[++i]);
      std::string id;
      while (std::getline(ss, id, ',')) only.insert(id);
    } else {
      std::fprintf(stderr, "usage: %s [--only AC1,AC2,...]\n", argv[0]);
      return 2;
    }
  }
  const std::vector<Criterion> criteria{
      {"AC1", "merged inference equals inclusion-exclusion", 60, merged_equals_naive},
      {"AC2", "analytic gradients match finite differences", 60, gradients_match_finite_differences},
      {"AC3", "predictability suites", 300, suites_hold},
      {"AC4", "accuracy on a correlated synthetic table", 1800, accuracy_on_correlated_table},
      {"AC5", "latency scaling and evaluation count", 600, latency_shape},
      {"AC6", "join algebra on exact statistics", 60, join_algebra},
      {"AC7", "conditional expectation vs stepwise conditional CDF", 120,
       conditional_expectation_matches_stepwise},
      {"AC8", "bitwise-reproducible artifacts", 600, artifacts_reproducible},
  };
  int failed = 0;
  for (const Criterion& c : criteria) {
    if (!only.empty() && !only.count(c.id)) continue;
    const auto start = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = c.run();
    } catch (const std::exception& e) {
      v = {false, std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    const bool in_time = secs < c.limit_seconds;
    const bool pass = v.pass && in_time;
    failed += pass ? 0 : 1;
    std::printf("%s %s  %s: %s [%.1f s, limit %.0f s]\n", c.id.c_str(), pass ? "PASS" : "FAIL", c.title.c_str(),
                v.detail.c_str(), secs, c.limit_seconds);
    std::fflush(stdout);
  }
  return failed == 0 ? 0 : 1;
}
