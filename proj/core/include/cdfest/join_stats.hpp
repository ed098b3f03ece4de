#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

namespace cdfest {

/// child.fk -> parent.pk
struct JoinEdge {
  std::string child;
  std::string fk;
  std::string parent;
  std::string pk;
};

/// Occurrence count of each value in one table's key column.
struct FanoutMap {
  std::string table;
  std::string key;
  std::map<double, std::uint64_t> counts;

  /// Never-referenced (or null) keys have fanout 1.
  double fanout(double key_value) const {
    const auto it = counts.find(key_value);
    return (it == counts.end() || it->second == 0) ? 1.0 : static_cast<double>(it->second);
  }
};

/// Statistics gathered while building the full outer join, needed to answer
/// subset and inner-join queries against a global model. Join group g is the
/// equivalence class of the two key columns of edge g.
struct JoinGroupStats {
  std::vector<std::string> tables;
  std::vector<JoinEdge> edges;
  /// Flat-table column holding the value of each join group.
  std::vector<std::string> group_columns;
  /// Raw value stored in a group column when neither side of the edge is present.
  std::vector<double> null_keys;
  /// Observed group-value tuples (one entry per group) and their row counts.
  std::vector<std::vector<double>> domain;
  std::vector<std::uint64_t> frequency;
  /// fanouts[2 * g] is the child key (edge g fk), fanouts[2 * g + 1] the parent key.
  std::vector<FanoutMap> fanouts;
  /// Indicator column name per table; empty when the indicator was constant 1 and
  /// is therefore not a model column.
  std::vector<std::string> indicator_columns;
  std::uint64_t flat_rows = 0;

  std::size_t table_index(const std::string& name) const;
};

}  // namespace cdfest
