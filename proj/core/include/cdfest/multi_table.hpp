#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdfest/column_meta.hpp"
#include "cdfest/estimator.hpp"
#include "cdfest/join_stats.hpp"
#include "cdfest/mixture_cdf.hpp"
#include "cdfest/pipeline.hpp"
#include "cdfest/predicate.hpp"
#include "cdfest/schema_config.hpp"

namespace cdfest {

struct TableSpec {
  std::string name;
  std::filesystem::path csv;
  std::string pk;  // empty when the table is never referenced
  SchemaConfig schema;
};

/// Tables and child.fk -> parent.pk edges. The undirected graph must be a tree,
/// which gives every pair of tables exactly one connecting path.
///
/// File format (JSON), csv / schema paths relative to the file:
///
///     {"tables": [{"name": "A", "csv": "a.csv", "pk": "pk",
///                  "columns": {"pk": "numeric", "x": "numeric"}},
///                 {"name": "E", "csv": "e.csv", "schema": "e.ini"}],
///      "edges": [{"child": "E", "fk": "fk", "parent": "A"}]}
struct SchemaGraph {
  std::vector<TableSpec> tables;
  std::vector<JoinEdge> edges;

  std::size_t table_index(const std::string& name) const;  // throws InvalidInput

  /// Throws InvalidInput for cycles, disconnected tables and duplicate edges,
  /// UnknownColumn for key columns absent from a table's declarations.
  void validate() const;

  /// Table indices visited breadth-first from `roots`, with the edge each was
  /// reached through (npos for the roots).
  std::vector<std::pair<std::size_t, std::size_t>> bfs(std::span<const std::size_t> roots) const;

  static SchemaGraph load(const std::filesystem::path& path);
  static SchemaGraph parse(const std::string& text, const std::filesystem::path& base_dir = {});
};

/// Full outer join of all schema tables. Columns:
///
///     T.col            every non-key column of table T (absent rows hold the fill value)
///     child.fk         one join-group column per edge
///     T.__present      1 iff the row has a matching T record
///     child.fk.__fanout, parent.pk.__fanout
///
/// The fill value of a column is raw_min - 2w, raw_min taken over present values.
struct FlatTable {
  RawTable table;
  /// Raw statistics per column of `table` (mean 0, stddev 1). raw_min is the
  /// minimum over present values.
  std::vector<ColumnMeta> meta;
  /// Columns the global model is trained on: group columns, attributes and
  /// indicators that are not constant.
  std::vector<std::string> model_columns;
  JoinGroupStats stats;

  std::size_t rows() const { return table.rows(); }
  RawTable model_table() const;
};

FlatTable flatten(const SchemaGraph& schema, std::span<const RawTable> tables);
/// Reads every table's CSV first.
FlatTable flatten(const SchemaGraph& schema);

/// prepare() over the model columns, with raw_min reset to the present-value
/// minimum so compiled ranges exclude fill values.
PreparedTable prepare_flat(const FlatTable& flat, std::uint64_t seed);

struct JoinQuery {
  std::vector<std::string> tables;
  std::vector<Predicate> predicates;  // columns named T.col with T in tables
};

/// Inner-join cardinality over the queried tables, computed from a model trained
/// on the flat table. Thread-safe.
class JoinEstimator {
 public:
  JoinEstimator(const MixtureCdf& model, JoinGroupStats stats);

  const JoinGroupStats& stats() const { return stats_; }

  /// Unrounded expected count. Throws InvalidInput for an empty or unknown table
  /// set and for predicates outside the queried tables.
  double estimate(const JoinQuery& query) const;
  CardinalityEstimate cardinality(const JoinQuery& query) const;

 private:
  const MixtureCdf& model_;
  JoinGroupStats stats_;
  std::vector<std::size_t> key_columns_;
};

/// The same expectation evaluated over the empirical distribution of the flat
/// table instead of a model.
double empirical_join_count(const FlatTable& flat, const JoinQuery& query);

}  // namespace cdfest
