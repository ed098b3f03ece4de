#include <gtest/gtest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <functional>
#include <random>

#include "cdfest/error.hpp"
#include "cdfest/estimator.hpp"
#include "cdfest/multi_table.hpp"
#include "cdfest/training.hpp"
#include "oracles.hpp"

namespace cdfest {

using testing::brute_force_join;
using testing::numeric_table;
using testing::RawPredicate;
using testing::toy_schema;
using testing::ToySchema;

namespace {

Predicate pred(std::string col, CompareOp op, double v) { return {std::move(col), op, Literal::of(v), {}}; }

const char* kTwoTableSchema = R"({
  "tables": [
    {"name": "A", "csv": "a.csv", "pk": "pk", "columns": {"pk": "numeric", "x": "numeric"}},
    {"name": "E", "csv": "e.csv", "columns": {"fk": "numeric", "x": "numeric"}}
  ],
  "edges": [{"child": "E", "fk": "fk", "parent": "A"}]
})";

std::vector<RawTable> two_table_example() {
  return {numeric_table({{"pk", {1, 2, 3}}, {"x", {0.7, 0.3, 0.5}}}),
          numeric_table({{"fk", {2, 2, 3}}, {"x", {10, 40, 20}}})};
}

const RawColumn& column(const FlatTable& f, const std::string& name) {
  return f.table.columns[f.table.column_index(name)];
}

}  // namespace

TEST(FlattenTest, TwoTableExampleMatchesHandBuiltJoin) {
  const auto schema = SchemaGraph::parse(kTwoTableSchema);
  const auto tables = two_table_example();
  const FlatTable f = flatten(schema, tables);
  ASSERT_EQ(f.rows(), 4u);
  const auto& group = column(f, "E.fk");
  const auto& ex = column(f, "E.x");
  const auto& present = column(f, "E.__present");
  const auto& fanout = column(f, "E.fk.__fanout");
  EXPECT_EQ(group.values, (std::vector<double>{1, 2, 2, 3}));
  EXPECT_EQ(present.values, (std::vector<double>{0, 1, 1, 1}));
  EXPECT_EQ(fanout.values, (std::vector<double>{1, 2, 2, 1}));
  EXPECT_EQ(column(f, "A.pk.__fanout").values, (std::vector<double>{1, 1, 1, 1}));
  EXPECT_EQ(column(f, "A.x").values, (std::vector<double>{0.7, 0.3, 0.3, 0.5}));
  // Absent E cell: raw_min 10 minus twice the inferred step of 10.
  EXPECT_EQ(ex.values[0], -10.0);
  EXPECT_EQ(f.meta[f.table.column_index("E.x")].raw_min, 10.0);
  EXPECT_EQ(f.stats.fanouts[0].fanout(2.0), 2.0);
  EXPECT_EQ(f.stats.indicator_columns[0], "");
  EXPECT_EQ(f.stats.indicator_columns[1], "E.__present");
  EXPECT_EQ(f.model_columns, (std::vector<std::string>{"E.fk", "A.x", "E.x", "E.__present"}));

  std::uint64_t total = 0;
  for (auto c : f.stats.frequency) total += c;
  EXPECT_EQ(total, f.rows());
  EXPECT_EQ(f.stats.domain, (std::vector<std::vector<double>>{{1}, {2}, {3}}));
}

TEST(FlattenTest, InnerJoinWithInequalityCountsTwo) {
  const FlatTable f = flatten(SchemaGraph::parse(kTwoTableSchema), two_table_example());
  const JoinQuery q{{"A", "E"}, {pred("E.x", CompareOp::kNe, 40)}};
  EXPECT_DOUBLE_EQ(empirical_join_count(f, q), 2.0);
}

TEST(FlattenTest, SubsetQueryIsScaledDownByFanout) {
  const FlatTable f = flatten(SchemaGraph::parse(kTwoTableSchema), two_table_example());
  const JoinQuery q{{"A"}, {pred("A.x", CompareOp::kLt, 0.6)}};
  EXPECT_DOUBLE_EQ(empirical_join_count(f, q), 2.0);
  EXPECT_DOUBLE_EQ(empirical_join_count(f, {{"A"}, {}}), 3.0);
  EXPECT_DOUBLE_EQ(empirical_join_count(f, {{"E"}, {}}), 3.0);
  EXPECT_DOUBLE_EQ(empirical_join_count(f, {{"A", "E"}, {}}), 3.0);
}

TEST(FlattenTest, UnreferencedParentKeyHasFanoutOne) {
  const FlatTable f = flatten(SchemaGraph::parse(kTwoTableSchema), two_table_example());
  EXPECT_EQ(f.stats.fanouts[0].counts.count(1.0), 0u);
  EXPECT_EQ(f.stats.fanouts[0].fanout(1.0), 1.0);
  EXPECT_EQ(column(f, "E.fk.__fanout").values[0], 1.0);
}

TEST(FlattenTest, SingleTableIsItsOwnFlatTable) {
  const auto schema = SchemaGraph::parse(R"({"tables": [{"name": "T", "csv": "t.csv",
      "columns": {"a": "numeric", "b": "numeric"}}]})");
  const std::vector<RawTable> tables{numeric_table({{"a", {1, 2, 3, 4}}, {"b", {5, 5, 6, 7}}})};
  const FlatTable f = flatten(schema, tables);
  EXPECT_EQ(f.rows(), 4u);
  EXPECT_EQ(column(f, "T.a").values, tables[0].columns[0].values);
  EXPECT_EQ(column(f, "T.__present").values, (std::vector<double>{1, 1, 1, 1}));
  EXPECT_EQ(f.model_columns, (std::vector<std::string>{"T.a", "T.b"}));
  EXPECT_TRUE(f.stats.fanouts.empty());
  ASSERT_EQ(f.stats.frequency.size(), 1u);
  EXPECT_EQ(f.stats.frequency[0], 4u);
  EXPECT_DOUBLE_EQ(empirical_join_count(f, {{"T"}, {pred("T.b", CompareOp::kLe, 5)}}), 2.0);
}

TEST(FlattenTest, LoadsSchemaAndCsvFiles) {
  const auto dir = std::filesystem::temp_directory_path() / "cdfest_flatten_files";
  std::filesystem::create_directories(dir);
  std::ofstream(dir / "schema.json") << kTwoTableSchema;
  std::ofstream(dir / "a.csv") << "pk,x\n1,0.7\n2,0.3\n3,0.5\n";
  std::ofstream(dir / "e.csv") << "fk,x\n2,10\n2,40\n3,20\n";
  const FlatTable f = flatten(SchemaGraph::load(dir / "schema.json"));
  EXPECT_EQ(f.rows(), 4u);
  EXPECT_DOUBLE_EQ(empirical_join_count(f, {{"A", "E"}, {pred("E.x", CompareOp::kNe, 40)}}), 2.0);
  std::filesystem::remove_all(dir);
}

TEST(SchemaGraphTest, RejectsInvalidSchemas) {
  const std::string tables = R"("tables": [
      {"name": "A", "csv": "a", "pk": "id", "columns": {"id": "numeric", "r": "numeric"}},
      {"name": "B", "csv": "b", "pk": "id", "columns": {"id": "numeric", "a": "numeric"}},
      {"name": "C", "csv": "c", "pk": "id", "columns": {"id": "numeric", "b": "numeric"}}])";
  auto parse = [&](const std::string& edges) { return SchemaGraph::parse("{" + tables + ", " + edges + "}"); };
  EXPECT_NO_THROW(parse(R"("edges": [{"child": "B", "fk": "a", "parent": "A"},
                                     {"child": "C", "fk": "b", "parent": "B"}])"));
  EXPECT_THROW(parse(R"("edges": [{"child": "B", "fk": "a", "parent": "A"},
                                  {"child": "C", "fk": "b", "parent": "B"},
                                  {"child": "A", "fk": "r", "parent": "C"}])"),
               InvalidInput);
  EXPECT_THROW(parse(R"("edges": [{"child": "B", "fk": "a", "parent": "A"}])"), InvalidInput);
  EXPECT_THROW(parse(R"("edges": [{"child": "B", "fk": "missing", "parent": "A"},
                                  {"child": "C", "fk": "b", "parent": "B"}])"),
               UnknownColumn);
  EXPECT_THROW(parse(R"("edges": [{"child": "B", "fk": "a", "parent": "Z"}])"), FormatError);
  EXPECT_THROW(SchemaGraph::parse("{\"tables\": 3}"), FormatError);
}

TEST(FlattenTest, RejectsDuplicatePrimaryKeys) {
  const auto schema = SchemaGraph::parse(kTwoTableSchema);
  std::vector<RawTable> tables = two_table_example();
  tables[0].columns[0].values = {1, 2, 2};
  EXPECT_THROW(flatten(schema, tables), InvalidInput);
}

TEST(JoinQueryTest, RejectsBadQueries) {
  const FlatTable f = flatten(SchemaGraph::parse(kTwoTableSchema), two_table_example());
  EXPECT_THROW(empirical_join_count(f, {{}, {}}), InvalidInput);
  EXPECT_THROW(empirical_join_count(f, {{"Z"}, {}}), InvalidInput);
  EXPECT_THROW(empirical_join_count(f, {{"A"}, {pred("E.x", CompareOp::kEq, 10)}}), InvalidInput);
  EXPECT_THROW(empirical_join_count(f, {{"A", "E"}, {pred("E.fk", CompareOp::kEq, 2)}}), InvalidInput);
}

TEST(JoinQueryTest, EmpiricalExpectationReproducesBruteForceJoins) {
  const ToySchema s = toy_schema(11);
  const FlatTable f = flatten(s.schema, s.tables);
  const std::vector<std::vector<std::size_t>> subsets{{0}, {1}, {2}, {3}, {0, 1}, {1, 2}, {0, 3},
                                                      {0, 1, 2}, {0, 1, 3}, {1, 0, 3}, {0, 1, 2, 3}};
  const std::vector<std::pair<std::string, int>> attrs{{"x", 5}, {"y", 9}, {"z", 4}, {"u", 3}};
  const CompareOp ops[] = {CompareOp::kEq, CompareOp::kNe, CompareOp::kLt,
                           CompareOp::kLe, CompareOp::kGt, CompareOp::kGe};
  std::mt19937_64 rng(5);
  for (const auto& q : subsets) {
    for (int trial = 0; trial < 30; ++trial) {
      JoinQuery jq;
      std::vector<RawPredicate> raw;
      for (std::size_t t : q) jq.tables.push_back(s.schema.tables[t].name);
      const int npred = trial == 0 ? 0 : static_cast<int>(rng() % 3);
      for (int k = 0; k < npred; ++k) {
        const std::size_t t = q[rng() % q.size()];
        const auto& [col, hi] = attrs[t];
        const CompareOp op = ops[rng() % 6];
        const double v = static_cast<double>(rng() % static_cast<unsigned>(hi + 2)) - 0.0;
        raw.push_back({t, col, op, v});
        jq.predicates.push_back(pred(s.schema.tables[t].name + "." + col, op, v));
      }
      const double expected = brute_force_join(s, q, raw);
      const double got = empirical_join_count(f, jq);
      ASSERT_NEAR(got, expected, 1e-9 * std::max(1.0, expected))
          << "tables " << jq.tables.size() << " trial " << trial << " query " << query_to_json(jq.predicates);
    }
  }
}

TEST(JoinQueryTest, FullInnerJoinCountMatchesBruteForce) {
  const ToySchema s = toy_schema(23);
  const FlatTable f = flatten(s.schema, s.tables);
  const double expected = brute_force_join(s, {0, 1, 2, 3}, {});
  EXPECT_GT(expected, 0.0);
  EXPECT_NEAR(empirical_join_count(f, {{"A", "B", "C", "D"}, {}}), expected, 1e-9 * expected);
}

TEST(JoinQueryTest, DisconnectedTableSetIsRejected) {
  const ToySchema s = toy_schema(3);
  const FlatTable f = flatten(s.schema, s.tables);
  EXPECT_THROW(empirical_join_count(f, {{"C", "D"}, {}}), InvalidInput);
}

TEST(JoinEstimatorTest, SingleTableMatchesPlainEstimator) {
  const auto schema = SchemaGraph::parse(R"({"tables": [{"name": "T", "csv": "t.csv",
      "columns": {"a": "numeric", "b": "numeric"}}]})");
  std::vector<double> a(200), b(200);
  for (std::size_t i = 0; i < a.size(); ++i) {
    a[i] = static_cast<double>(i % 17);
    b[i] = static_cast<double>((i * 7) % 11);
  }
  const std::vector<RawTable> tables{numeric_table({{"a", a}, {"b", b}})};
  const FlatTable f = flatten(schema, tables);
  const PreparedTable p = prepare_flat(f, 1);
  TrainConfig cfg;
  cfg.components = 4;
  const MixtureCdf model = initialize_model(p.columns, cfg);
  const JoinEstimator join(model, f.stats);
  const Estimator single(model, f.rows());
  // Join queries clamp open lower ends to the valid domain; give every column one.
  const std::vector<Predicate> preds{Predicate{"T.a", CompareOp::kBetween, Literal::of(2), Literal::of(8)},
                                     pred("T.b", CompareOp::kGe, 0),
                                     pred("T.b", CompareOp::kNe, 3)};
  EXPECT_NEAR(join.estimate({{"T"}, preds}), single.selectivity(preds) * 200.0, 1e-9);
}

TEST(JoinEstimatorTest, TrainedModelTracksBaseTableCounts) {
  // A(pk 1..20, x) with children E(fk, y); fanouts range over 1..~30.
  const auto schema = SchemaGraph::parse(R"({"tables": [
      {"name": "A", "csv": "a", "pk": "pk", "columns": {"pk": "numeric", "x": "numeric"}},
      {"name": "E", "csv": "e", "columns": {"fk": "numeric", "y": "numeric"}}],
    "edges": [{"child": "E", "fk": "fk", "parent": "A"}]})");
  std::mt19937_64 rng(9);
  std::vector<double> pk, x, fk, y;
  for (int i = 1; i <= 20; ++i) {
    pk.push_back(i);
    x.push_back(i % 5);
    const int children = 1 + (i * i) % 29;
    for (int c = 0; c < children; ++c) {
      fk.push_back(i);
      y.push_back(static_cast<double>((i + c + rng() % 3) % 8));
    }
  }
  const std::vector<RawTable> tables{numeric_table({{"pk", pk}, {"x", x}}),
                                     numeric_table({{"fk", fk}, {"y", y}})};
  const FlatTable f = flatten(schema, tables);
  const PreparedTable p = prepare_flat(f, 2);
  TrainConfig cfg;
  cfg.components = 24;
  cfg.epochs = 300;
  cfg.learning_rate = 0.03;
  cfg.seed = 4;
  MixtureCdf model = initialize_model(p.columns, cfg);
  train_on_data(model, p, cfg);
  const JoinEstimator est(model, f.stats);

  for (int k = 0; k < 5; ++k) {
    const JoinQuery q{{"A"}, {pred("A.x", CompareOp::kLe, k)}};
    const double exact = empirical_join_count(f, q);
    EXPECT_NEAR(est.estimate(q), exact, 0.25 * exact + 1.0) << "A.x <= " << k;
  }
  const JoinQuery all{{"A"}, {}};
  EXPECT_NEAR(est.estimate(all), 20.0, 5.0);
  const JoinQuery inner{{"A", "E"}, {pred("E.y", CompareOp::kLt, 4)}};
  const double exact = empirical_join_count(f, inner);
  EXPECT_NEAR(est.estimate(inner), exact, 0.15 * exact);
}

}  // namespace cdfest
