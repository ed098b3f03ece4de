#include "commands.hpp"

#include <CLI11.hpp>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <map>
#include <memory>
#include <optional>
#include <sstream>

#include "cdfest/error.hpp"
#include "cdfest/estimator.hpp"
#include "cdfest/evaluation.hpp"
#include "cdfest/model_io.hpp"
#include "cdfest/multi_table.hpp"
#include "cdfest/pipeline.hpp"
#include "cdfest/query_compile.hpp"
#include "cdfest/schema_config.hpp"
#include "cdfest/training.hpp"
#include "cdfest/workload.hpp"
#include "json.hpp"
#include "settings.hpp"

namespace cdfest::cli {

namespace {

using nlohmann::ordered_json;

/// Command-line flags that override a settings key.
class Bindings {
 public:
  void bind(CLI::App* app, const std::string& flag, const std::string& key, const std::string& help) {
    auto value = std::make_shared<std::string>();
    CLI::Option* opt = app->add_option(flag, *value, help + " [" + key + "]");
    entries_.push_back({opt, key, std::move(value)});
  }
  void add_config(CLI::App* app) { app->add_option("--config", config_, "INI config file"); }

  Settings resolve() const {
    Settings s;
    if (!config_.empty()) s.load_file(config_);
    for (const auto& e : entries_) {
      if (e.opt->count() > 0) s.set(e.key, *e.value);
    }
    return s;
  }

 private:
  struct Entry {
    CLI::Option* opt;
    std::string key;
    std::shared_ptr<std::string> value;
  };
  std::vector<Entry> entries_;
  std::string config_;
};

std::string num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

std::string fixed(double v, int digits = 4) {
  if (!std::isfinite(v)) return "-";
  char buf[48];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

void write_file(const std::string& path, const std::string& content) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw Error("cannot write '" + path + "'");
  f << content;
  if (!f) throw Error("write to '" + path + "' failed");
}

RawTable load_table(const std::string& csv, const std::string& schema) {
  if (csv.empty() || schema.empty()) throw UsageError("--csv and --schema are required");
  return ingest_csv(csv, SchemaConfig::load(schema));
}

std::map<std::string, std::string> echo(const Settings& s, const std::string& command) {
  auto m = s.values();
  m["command"] = command;
  return m;
}

std::vector<QuerySample> query_samples(const Workload& w, const MixtureCdf& model, std::uint64_t rows) {
  std::vector<QuerySample> out;
  for (const LabeledQuery& q : w.queries) {
    const auto branches = compile_union(q.predicates, model.columns());
    if (branches.size() != 1) {
      throw InvalidInput("query-trained models accept conjunctions without != only: " +
                         query_to_json(q.predicates));
    }
    if (branches.front().empty) continue;
    out.push_back({branches.front().box, static_cast<double>(q.card) / static_cast<double>(rows)});
  }
  if (out.empty()) throw InvalidInput("workload holds no usable queries");
  return out;
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

// ingest

struct IngestArgs {
  std::string csv, schema, out;
};

int ingest(const IngestArgs& a, const Settings& s, std::ostream& out) {
  const RawTable raw = load_table(a.csv, a.schema);
  const PreparedTable p = prepare(raw, s.integer("pipeline.seed"));
  ordered_json j;
  ordered_json config = ordered_json::object();
  for (const auto& [k, v] : echo(s, "ingest")) config[k] = v;
  j["config"] = config;
  j["rows"] = p.row_count;
  j["source_checksum"] = p.source_checksum;
  j["columns"] = ordered_json::array();
  for (const ColumnMeta& c : p.columns) {
    j["columns"].push_back({{"name", c.name},
                            {"kind", to_string(c.kind)},
                            {"precision", c.precision},
                            {"mean", c.mean},
                            {"stddev", c.stddev},
                            {"raw_min", c.raw_min},
                            {"raw_max", c.raw_max},
                            {"categories", c.dictionary.size()}});
  }
  const std::string text = j.dump(2) + "\n";
  if (a.out.empty()) {
    out << text;
  } else {
    write_file(a.out, text);
    out << "ingested " << p.row_count << " rows x " << p.dims() << " columns -> " << a.out << "\n";
  }
  return kOk;
}

// train

struct TrainArgs {
  std::string csv, schema, join_schema, workload, holdout, out, loss_curve;
};

int train(const TrainArgs& a, const Settings& s, std::ostream& out, std::ostream& err) {
  if (a.out.empty()) throw UsageError("train: --out is required");
  const TrainConfig cfg = s.training();
  const std::uint64_t seed = s.integer("pipeline.seed");
  PreparedTable prepared;
  ModelFile file;
  if (!a.join_schema.empty()) {
    if (cfg.mode == TrainMode::kQuery) throw UsageError("train: join schemas are trained in data mode");
    const FlatTable flat = flatten(SchemaGraph::load(a.join_schema));
    prepared = prepare_flat(flat, seed);
    file.join = flat.stats;
  } else {
    prepared = prepare(load_table(a.csv, a.schema), seed);
  }
  file.row_count = prepared.row_count;
  file.source_checksum = prepared.source_checksum;
  file.model = initialize_model(prepared.columns, cfg);
  file.config = echo(s, "train");

  std::optional<Holdout> holdout;
  if (!a.holdout.empty()) {
    holdout = Holdout{query_samples(load_workload(a.holdout), file.model, file.row_count), file.row_count};
  }
  const std::size_t every = std::max<std::size_t>(1, cfg.epochs / 10);
  auto progress = [&](const LossRecord& r) {
    if (r.epoch % every == 0 || r.epoch == cfg.epochs) {
      err << "epoch " << r.epoch << "/" << cfg.epochs << " loss " << fixed(r.loss, 6);
      if (holdout) err << " holdout median qerror " << fixed(r.holdout_qerror_median);
      err << "\n";
    }
  };
  TrainResult result;
  if (cfg.mode == TrainMode::kData) {
    result = train_on_data(file.model, prepared, cfg, holdout ? &*holdout : nullptr, progress);
  } else {
    if (a.workload.empty()) throw UsageError("train: query mode needs --workload");
    const auto samples = query_samples(load_workload(a.workload), file.model, file.row_count);
    result = train_on_queries(file.model, samples, file.row_count, cfg, holdout ? &*holdout : nullptr, progress);
  }
  save_model(file, a.out);
  if (!a.loss_curve.empty()) {
    std::ostringstream curve;
    write_loss_curve(result.curve, curve);
    write_file(a.loss_curve, curve.str());
  }
  out << "trained " << to_string(cfg.mode) << " model m=" << file.model.components() << " d=" << file.model.dims()
      << " rows=" << file.row_count;
  if (!result.curve.empty()) out << " final_loss=" << fixed(result.curve.back().loss, 6);
  out << " -> " << a.out << "\n";
  return kOk;
}

// estimate

struct EstimateArgs {
  std::string model, query_file, tables;
  std::vector<std::string> queries;
};

int estimate(const EstimateArgs& a, std::ostream& out, std::ostream& err) {
  if (a.model.empty()) throw UsageError("estimate: --model is required");
  std::vector<std::string> texts = a.queries;
  if (!a.query_file.empty()) {
    std::ifstream f(a.query_file);
    if (!f) throw Error("cannot open query file '" + a.query_file + "'");
    std::string line;
    while (std::getline(f, line)) {
      if (line.find_first_not_of(" \t\r") != std::string::npos) texts.push_back(line);
    }
  }
  if (texts.empty()) throw UsageError("estimate: give --query or --query-file");
  const ModelFile file = load_model(a.model);
  const auto tables = split_list(a.tables);
  std::optional<JoinEstimator> join;
  if (file.join) {
    if (tables.empty()) throw UsageError("estimate: join models need --tables");
    join.emplace(file.model, *file.join);
  } else if (!tables.empty()) {
    throw UsageError("estimate: --tables applies to join models only");
  }
  const Estimator single(file.model, file.row_count);
  for (const std::string& text : texts) {
    const auto preds = parse_query(text);
    const CardinalityEstimate c = join ? join->cardinality({tables, preds}) : single.cardinality(preds);
    for (const auto& w : c.warnings) err << "warning: " << w << "\n";
    ordered_json j{{"query", text},
                   {"selectivity", c.selectivity},
                   {"estimate", c.raw},
                   {"cardinality", c.floored}};
    out << j.dump() << "\n";
  }
  return kOk;
}

// gen-workload

struct GenArgs {
  std::string csv, schema, out;
};

int gen(const GenArgs& a, const Settings& s, std::ostream& out) {
  if (a.out.empty()) throw UsageError("gen-workload: --out is required");
  const RawTable raw = load_table(a.csv, a.schema);
  const std::size_t n = s.integer("eval.queries");
  if (n == 0) throw UsageError("gen-workload: eval.queries must be at least 1");
  const Workload w = gen_workload(raw, n, s.integer("eval.workload_seed"));
  save_workload(w, a.out);
  out << "generated " << w.queries.size() << " queries -> " << a.out << "\n";
  return kOk;
}

// flatten

struct FlattenArgs {
  std::string join_schema, out;
};

int flatten_cmd(const FlattenArgs& a, std::ostream& out) {
  if (a.join_schema.empty() || a.out.empty()) throw UsageError("flatten: --join-schema and --out are required");
  const FlatTable flat = flatten(SchemaGraph::load(a.join_schema));
  std::ostringstream csv;
  write_csv(flat.table, csv);
  write_file(a.out, csv.str());
  out << "flattened " << flat.stats.tables.size() << " tables into " << flat.rows() << " rows x "
      << flat.table.dims() << " columns (" << flat.model_columns.size() << " model columns, "
      << flat.stats.domain.size() << " join-key tuples) -> " << a.out << "\n";
  return kOk;
}

// eval

struct EvalArgs {
  std::string model, workload, out, per_query;
  bool bench = false;
  bool suites = false;
};

void print_summary(const EvalReport& r, std::ostream& out) {
  char line[256];
  std::snprintf(line, sizeof line, "%-8s %10s %10s %10s %10s\n", "queries", "50th", "95th", "99th", "max");
  out << line;
  std::snprintf(line, sizeof line, "%-8zu %10s %10s %10s %10s\n", r.qerror.count, fixed(r.qerror.p50).c_str(),
                fixed(r.qerror.p95).c_str(), fixed(r.qerror.p99).c_str(), fixed(r.qerror.max).c_str());
  out << line;
  if (r.latency) {
    const LatencyReport& l = *r.latency;
    out << "latency merged mean " << fixed(l.merged.mean_ns / 1e6) << " ms, median "
        << fixed(l.merged.median_ns / 1e6) << " ms (" << l.warmup << " warm-up)";
    if (l.naive) out << "; naive mean " << fixed(l.naive->mean_ns / 1e6) << " ms, speedup " << fixed(l.speedup, 1) << "x";
    out << "\n";
  }
}

void print_suites(const std::vector<SuiteVerdict>& suites, std::ostream& out, std::ostream& err) {
  for (const SuiteVerdict& v : suites) {
    char line[160];
    std::snprintf(line, sizeof line, "%-13s cases %-6zu violations %-6zu %s\n", v.name.c_str(), v.cases,
                  v.violations, v.passed() ? "PASS" : "FAIL");
    out << line;
    for (const auto& c : v.counterexamples) err << v.name << ": " << c << "\n";
  }
}

int eval(const EvalArgs& a, const Settings& s, std::ostream& out, std::ostream& err) {
  if (a.model.empty() || a.workload.empty()) throw UsageError("eval: --model and --workload are required");
  const ModelFile file = load_model(a.model);
  if (file.join) throw InvalidInput("eval runs single-table workloads; this model was trained on a join schema");
  const Workload w = load_workload(a.workload);
  EvalReport r = evaluate(file.model, w, file.row_count);
  r.config = echo(s, "eval");
  r.config["model.source_checksum"] = file.source_checksum;
  r.config["workload.source_checksum"] = w.source_checksum;
  r.config["workload.seed"] = std::to_string(w.seed);
  if (a.bench) attach_latency(r, file.model, w, s.bench());
  if (a.suites) r.suites = run_property_suites(file.model, s.properties());
  if (!a.out.empty()) write_file(a.out, report_to_json(r));
  if (!a.per_query.empty()) {
    std::ostringstream csv;
    write_query_results(r.queries, csv);
    write_file(a.per_query, csv.str());
  }
  print_summary(r, out);
  if (a.suites) print_suites(r.suites, out, err);
  return kOk;
}

// bench-dim

struct BenchArgs {
  std::string csv, schema, out;
  std::vector<std::size_t> dims;
};

int bench_dim(const BenchArgs& a, const Settings& s, std::ostream& out, std::ostream& err) {
  if (a.dims.empty()) throw UsageError("bench-dim: --dims is required");
  const std::size_t max_d = *std::max_element(a.dims.begin(), a.dims.end());
  const RawTable table = a.csv.empty() ? synthetic_correlated_table(s.integer("eval.bench_rows"), max_d,
                                                                      s.integer("pipeline.seed"))
                                       : load_table(a.csv, a.schema);
  if (max_d > table.dims() || *std::min_element(a.dims.begin(), a.dims.end()) == 0) {
    throw UsageError("bench-dim: dimensions must lie in [1, " + std::to_string(table.dims()) + "]");
  }
  const TrainConfig cfg = s.training();
  const std::size_t epochs = s.integer("eval.bench_epochs");
  const BenchOptions bench = s.bench();
  const std::size_t n = std::max<std::uint64_t>(1, s.integer("eval.bench_queries"));

  char line[256];
  std::snprintf(line, sizeof line, "%-6s %-11s %15s %17s %14s %9s %10s\n", "dims", "components", "merged_mean_ms",
                "merged_median_ms", "naive_mean_ms", "speedup", "phi_calls");
  out << line;
  ordered_json rows = ordered_json::array();
  for (std::size_t d : a.dims) {
    RawTable prefix;
    prefix.source_checksum = table.source_checksum;
    prefix.columns.assign(table.columns.begin(), table.columns.begin() + static_cast<std::ptrdiff_t>(d));
    const PreparedTable p = prepare(prefix, s.integer("pipeline.seed"));
    MixtureCdf model = initialize_model(p.columns, cfg);
    if (epochs > 0) {
      TrainConfig run = cfg;
      run.epochs = epochs;
      err << "training d=" << d << " for " << epochs << " epochs\n";
      train_on_data(model, p, run);
    }
    const Workload w = gen_workload(prefix, n, s.integer("eval.workload_seed"));
    std::vector<QueryBox> boxes;
    for (const auto& q : w.queries) boxes.push_back(compile(q.predicates, model.columns()).box);
    const LatencyReport l = bench_latency(model, boxes, bench);
    std::snprintf(line, sizeof line, "%-6zu %-11zu %15s %17s %14s %9s %10llu\n", d, model.components(),
                  fixed(l.merged.mean_ns / 1e6).c_str(), fixed(l.merged.median_ns / 1e6).c_str(),
                  l.naive ? fixed(l.naive->mean_ns / 1e6).c_str() : "-", fixed(l.speedup, 1).c_str(),
                  static_cast<unsigned long long>(l.phi_calls_per_query));
    out << line;
    ordered_json row{{"dims", d},
                     {"components", model.components()},
                     {"merged_mean_ns", l.merged.mean_ns},
                     {"merged_median_ns", l.merged.median_ns},
                     {"phi_calls_per_query", l.phi_calls_per_query}};
    if (l.naive) {
      row["naive_mean_ns"] = l.naive->mean_ns;
      row["speedup"] = l.speedup;
    }
    rows.push_back(row);
  }
  if (!a.out.empty()) {
    ordered_json config = ordered_json::object();
    for (const auto& [k, v] : echo(s, "bench-dim")) config[k] = v;
    write_file(a.out, ordered_json{{"config", config}, {"rows", rows}}.dump(2) + "\n");
  }
  return kOk;
}

// check

struct CheckArgs {
  std::string model, out;
  std::size_t dims = 5;
};

int check(const CheckArgs& a, const Settings& s, std::ostream& out, std::ostream& err) {
  MixtureCdf model;
  if (!a.model.empty()) {
    model = load_model(a.model).model;
  } else {
    if (a.dims == 0) throw UsageError("check: --dims must be at least 1");
    std::vector<ColumnMeta> cols(a.dims);
    for (std::size_t j = 0; j < a.dims; ++j) cols[j].name = "c" + std::to_string(j);
    model = initialize_model(cols, s.training());
  }
  EvalReport r;
  r.config = echo(s, "check");
  r.suites = run_property_suites(model, s.properties());
  print_suites(r.suites, out, err);
  if (!a.out.empty()) write_file(a.out, report_to_json(r));
  for (const auto& v : r.suites) {
    if (!v.passed()) return kPropertyFailure;
  }
  return kOk;
}

}  // namespace

int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Learned cardinality estimation with mixtures of monotone CDF networks", "cdfest"};
  app.require_subcommand(1);

  IngestArgs ingest_args;
  Bindings ingest_b;
  auto* ingest_cmd = app.add_subcommand("ingest", "Parse a CSV and report column statistics");
  ingest_cmd->add_option("--csv", ingest_args.csv, "Input CSV");
  ingest_cmd->add_option("--schema", ingest_args.schema, "Column declarations (INI)");
  ingest_cmd->add_option("--out", ingest_args.out, "Write the JSON summary here instead of standard output");
  ingest_b.bind(ingest_cmd, "--seed", "pipeline.seed", "Dequantization seed");
  ingest_b.add_config(ingest_cmd);

  TrainArgs train_args;
  Bindings train_b;
  auto* train_cmd = app.add_subcommand("train", "Train a model on a table, a join schema or labeled queries");
  train_cmd->add_option("--csv", train_args.csv, "Input CSV");
  train_cmd->add_option("--schema", train_args.schema, "Column declarations (INI)");
  train_cmd->add_option("--join-schema", train_args.join_schema, "Join schema (JSON); trains on its full outer join");
  train_cmd->add_option("--workload", train_args.workload, "Labeled queries for query mode");
  train_cmd->add_option("--holdout", train_args.holdout, "Labeled queries tracked per epoch");
  train_cmd->add_option("--out", train_args.out, "Model file");
  train_cmd->add_option("--loss-curve", train_args.loss_curve, "Per-epoch loss CSV");
  train_b.bind(train_cmd, "--mode", "training.mode", "data or query");
  train_b.bind(train_cmd, "--epochs", "training.epochs", "Epochs");
  train_b.bind(train_cmd, "--lr", "training.learning_rate", "Adam learning rate");
  train_b.bind(train_cmd, "--components", "training.components", "Mixture components");
  train_b.bind(train_cmd, "--depth", "training.depth", "Hidden layers per network");
  train_b.bind(train_cmd, "--width", "training.width", "Units per hidden layer");
  train_b.bind(train_cmd, "--batch-size", "training.batch_size", "Minibatch size (0 = mode default)");
  train_b.bind(train_cmd, "--seed", "training.seed", "Initialization and shuffle seed");
  train_b.bind(train_cmd, "--dequant-seed", "pipeline.seed", "Dequantization seed");
  train_b.add_config(train_cmd);

  EstimateArgs est_args;
  auto* est_cmd = app.add_subcommand("estimate", "Estimate query cardinalities with a trained model");
  est_cmd->add_option("--model", est_args.model, "Model file");
  est_cmd->add_option("--query,-q", est_args.queries, "Query text (a <= 3 AND b = 'x') or JSON; repeatable");
  est_cmd->add_option("--query-file", est_args.query_file, "One query per line");
  est_cmd->add_option("--tables", est_args.tables, "Comma-separated tables joined by the query (join models)");

  GenArgs gen_args;
  Bindings gen_b;
  auto* gen_cmd = app.add_subcommand("gen-workload", "Generate a labeled random workload");
  gen_cmd->add_option("--csv", gen_args.csv, "Input CSV");
  gen_cmd->add_option("--schema", gen_args.schema, "Column declarations (INI)");
  gen_cmd->add_option("--out", gen_args.out, "Workload file (JSON lines)");
  gen_b.bind(gen_cmd, "--n", "eval.queries", "Number of queries");
  gen_b.bind(gen_cmd, "--seed", "eval.workload_seed", "Generator seed");
  gen_b.add_config(gen_cmd);

  FlattenArgs flat_args;
  auto* flat_cmd = app.add_subcommand("flatten", "Write the full outer join of a schema as CSV");
  flat_cmd->add_option("--join-schema", flat_args.join_schema, "Join schema (JSON)");
  flat_cmd->add_option("--out", flat_args.out, "Output CSV");

  EvalArgs eval_args;
  Bindings eval_b;
  auto* eval_cmd = app.add_subcommand("eval", "Q-error report of a model on a labeled workload");
  eval_cmd->add_option("--model", eval_args.model, "Model file");
  eval_cmd->add_option("--workload", eval_args.workload, "Workload file");
  eval_cmd->add_option("--out", eval_args.out, "JSON report");
  eval_cmd->add_option("--per-query", eval_args.per_query, "Per-query CSV (id,estimate,true,qerror)");
  eval_cmd->add_flag("--bench", eval_args.bench, "Also time merged and naive inference (report only)");
  eval_cmd->add_flag("--suites", eval_args.suites, "Also run the property suites");
  eval_b.bind(eval_cmd, "--warmup", "eval.warmup", "Untimed warm-up evaluations");
  eval_b.bind(eval_cmd, "--repetitions", "eval.repetitions", "Timed passes over the workload");
  eval_b.bind(eval_cmd, "--naive-max-dims", "eval.naive_max_dims", "Largest d timed with the naive path");
  eval_b.bind(eval_cmd, "--cases", "eval.cases", "Cases per property suite");
  eval_b.bind(eval_cmd, "--suite-seed", "eval.suite_seed", "Property suite seed");
  eval_b.add_config(eval_cmd);

  BenchArgs bench_args;
  Bindings bench_b;
  auto* bench_cmd = app.add_subcommand("bench-dim", "Inference latency of column-prefix models by dimension");
  bench_cmd->add_option("--dims", bench_args.dims, "Comma-separated dimensions, e.g. 5,10,20")->delimiter(',');
  bench_cmd->add_option("--csv", bench_args.csv, "Input CSV (default: synthetic correlated table)");
  bench_cmd->add_option("--schema", bench_args.schema, "Column declarations (INI)");
  bench_cmd->add_option("--out", bench_args.out, "JSON report");
  bench_b.bind(bench_cmd, "--components", "training.components", "Mixture components");
  bench_b.bind(bench_cmd, "--epochs", "eval.bench_epochs", "Training epochs per prefix model");
  bench_b.bind(bench_cmd, "--rows", "eval.bench_rows", "Rows of the synthetic table");
  bench_b.bind(bench_cmd, "--queries", "eval.bench_queries", "Queries per dimension");
  bench_b.bind(bench_cmd, "--warmup", "eval.warmup", "Untimed warm-up evaluations");
  bench_b.bind(bench_cmd, "--repetitions", "eval.repetitions", "Timed passes over the queries");
  bench_b.bind(bench_cmd, "--naive-max-dims", "eval.naive_max_dims", "Largest d timed with the naive path");
  bench_b.bind(bench_cmd, "--seed", "training.seed", "Model seed");
  bench_b.add_config(bench_cmd);

  CheckArgs check_args;
  Bindings check_b;
  auto* check_cmd = app.add_subcommand("check", "Run the monotonicity, validity, consistency and stability suites");
  check_cmd->add_option("--model", check_args.model, "Model file (default: freshly initialized model)");
  check_cmd->add_option("--dims", check_args.dims, "Columns of the fresh model");
  check_cmd->add_option("--out", check_args.out, "JSON verdicts");
  check_b.bind(check_cmd, "--components", "training.components", "Components of the fresh model");
  check_b.bind(check_cmd, "--seed", "training.seed", "Seed of the fresh model");
  check_b.bind(check_cmd, "--cases", "eval.cases", "Cases per suite");
  check_b.bind(check_cmd, "--repeats", "eval.stability_repeats", "Stability repetitions");
  check_b.bind(check_cmd, "--suite-seed", "eval.suite_seed", "Suite seed");
  check_b.add_config(check_cmd);

  std::vector<std::string> storage{"cdfest"};
  storage.insert(storage.end(), args.begin(), args.end());
  std::vector<char*> argv;
  for (auto& s : storage) argv.push_back(s.data());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kOk : kUsage;
  }

  try {
    if (ingest_cmd->parsed()) return ingest(ingest_args, ingest_b.resolve(), out);
    if (train_cmd->parsed()) return train(train_args, train_b.resolve(), out, err);
    if (est_cmd->parsed()) return estimate(est_args, out, err);
    if (gen_cmd->parsed()) return gen(gen_args, gen_b.resolve(), out);
    if (flat_cmd->parsed()) return flatten_cmd(flat_args, out);
    if (eval_cmd->parsed()) return eval(eval_args, eval_b.resolve(), out, err);
    if (bench_cmd->parsed()) return bench_dim(bench_args, bench_b.resolve(), out, err);
    if (check_cmd->parsed()) return check(check_args, check_b.resolve(), out, err);
  } catch (const UsageError& e) {
    err << "usage error: " << e.what() << "\n";
    return kUsage;
  } catch (const ParseError& e) {
    err << "error: " << e.what();
    if (e.row() > 0) err << " (row " << e.row() << ")";
    err << "\n";
    return kDataError;
  } catch (const TrainingError& e) {
    err << "error: " << e.what() << " (epoch " << e.epoch() << ", batch " << e.batch() << ")\n";
    return kDataError;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kDataError;
  }
  return kUsage;
}

}  // namespace cdfest::cli
