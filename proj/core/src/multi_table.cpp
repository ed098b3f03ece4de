#include "cdfest/multi_table.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <set>
#include <sstream>
#include <unordered_map>

#include "cdfest/checksum.hpp"
#include "cdfest/error.hpp"
#include "cdfest/query_compile.hpp"
#include "json.hpp"

namespace cdfest {

namespace {

constexpr std::size_t npos = static_cast<std::size_t>(-1);
constexpr const char* kPresentSuffix = ".__present";
constexpr const char* kFanoutSuffix = ".__fanout";

std::string qualified(const std::string& table, const std::string& column) {
  return table + "." + column;
}

/// Breadth-first order over an undirected edge list. Returns (table, edge used).
std::vector<std::pair<std::size_t, std::size_t>> tree_bfs(
    std::size_t n, const std::vector<std::pair<std::size_t, std::size_t>>& ends,
    std::span<const std::size_t> roots) {
  std::vector<bool> seen(n, false);
  std::deque<std::size_t> queue;
  std::vector<std::pair<std::size_t, std::size_t>> out;
  for (std::size_t r : roots) {
    if (seen[r]) continue;
    seen[r] = true;
    queue.push_back(r);
    out.emplace_back(r, npos);
  }
  while (!queue.empty()) {
    const std::size_t u = queue.front();
    queue.pop_front();
    for (std::size_t e = 0; e < ends.size(); ++e) {
      std::size_t v = npos;
      if (ends[e].first == u) v = ends[e].second;
      if (ends[e].second == u) v = ends[e].first;
      if (v == npos || seen[v]) continue;
      seen[v] = true;
      queue.push_back(v);
      out.emplace_back(v, e);
    }
  }
  return out;
}

std::size_t index_of(const std::vector<std::string>& names, const std::string& name) {
  for (std::size_t t = 0; t < names.size(); ++t) {
    if (names[t] == name) return t;
  }
  throw InvalidInput("table '" + name + "' is not part of the join schema");
}

}  // namespace

std::size_t SchemaGraph::table_index(const std::string& name) const {
  for (std::size_t t = 0; t < tables.size(); ++t) {
    if (tables[t].name == name) return t;
  }
  throw InvalidInput("table '" + name + "' is not part of the join schema");
}

void SchemaGraph::validate() const {
  if (tables.empty()) throw InvalidInput("join schema has no tables");
  std::set<std::string> names;
  for (const auto& t : tables) {
    if (t.name.empty()) throw InvalidInput("join schema: table without a name");
    if (!names.insert(t.name).second) throw InvalidInput("join schema: duplicate table '" + t.name + "'");
    if (!t.pk.empty() && !t.schema.kind_of(t.pk)) throw UnknownColumn(qualified(t.name, t.pk));
  }
  std::vector<std::size_t> parent(tables.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](std::size_t x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  std::set<std::pair<std::string, std::string>> fks;
  for (const auto& e : edges) {
    const std::size_t c = table_index(e.child);
    const std::size_t p = table_index(e.parent);
    if (c == p) throw InvalidInput("join schema: self-referencing edge on '" + e.child + "'");
    if (!tables[c].schema.kind_of(e.fk)) throw UnknownColumn(qualified(e.child, e.fk));
    if (tables[p].pk.empty()) {
      throw InvalidInput("join schema: parent table '" + e.parent + "' declares no pk");
    }
    if (e.pk != tables[p].pk) {
      throw InvalidInput("join schema: edge " + e.child + "." + e.fk + " must reference " +
                         e.parent + "." + tables[p].pk);
    }
    if (!fks.insert({e.child, e.fk}).second) {
      throw InvalidInput("join schema: " + qualified(e.child, e.fk) + " is used by two edges");
    }
    if (tables[c].schema.kind_of(e.fk) != ColumnKind::kNumeric) {
      throw InvalidInput("join key " + qualified(e.child, e.fk) + " must be numeric");
    }
    if (tables[p].schema.kind_of(e.pk) != ColumnKind::kNumeric) {
      throw InvalidInput("join key " + qualified(e.parent, e.pk) + " must be numeric");
    }
    const std::size_t a = find(c), b = find(p);
    if (a == b) {
      throw InvalidInput("join schema is cyclic: edge " + e.child + " -> " + e.parent +
                         " closes a second path");
    }
    parent[a] = b;
  }
  for (std::size_t t = 1; t < tables.size(); ++t) {
    if (find(t) != find(0)) {
      throw InvalidInput("join schema is disconnected: '" + tables[t].name + "' is unreachable from '" +
                         tables[0].name + "'");
    }
  }
}

std::vector<std::pair<std::size_t, std::size_t>> SchemaGraph::bfs(
    std::span<const std::size_t> roots) const {
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  for (const auto& e : edges) ends.emplace_back(table_index(e.child), table_index(e.parent));
  return tree_bfs(tables.size(), ends, roots);
}

SchemaGraph SchemaGraph::parse(const std::string& text, const std::filesystem::path& base_dir) {
  using nlohmann::ordered_json;
  ordered_json doc;
  try {
    doc = ordered_json::parse(text);
  } catch (const ordered_json::parse_error& e) {
    throw FormatError(std::string("join schema: ") + e.what());
  }
  SchemaGraph g;
  try {
    for (const auto& t : doc.at("tables")) {
      TableSpec spec;
      spec.name = t.at("name").get<std::string>();
      spec.csv = base_dir / t.at("csv").get<std::string>();
      if (t.contains("pk")) spec.pk = t.at("pk").get<std::string>();
      if (t.contains("schema")) {
        spec.schema = SchemaConfig::load(base_dir / t.at("schema").get<std::string>());
      } else if (t.contains("columns")) {
        for (const auto& [name, kind] : t.at("columns").items()) {
          spec.schema.columns.emplace_back(name, column_kind_from_string(kind.get<std::string>()));
        }
        if (t.contains("precision")) {
          for (const auto& [name, w] : t.at("precision").items()) {
            spec.schema.precision_overrides[name] = w.get<double>();
          }
        }
      } else {
        throw FormatError("join schema: table '" + spec.name + "' needs 'columns' or 'schema'");
      }
      g.tables.push_back(std::move(spec));
    }
    if (doc.contains("edges")) {
      for (const auto& e : doc.at("edges")) {
        JoinEdge edge;
        edge.child = e.at("child").get<std::string>();
        edge.fk = e.at("fk").get<std::string>();
        edge.parent = e.at("parent").get<std::string>();
        edge.pk = g.tables.at(g.table_index(edge.parent)).pk;
        g.edges.push_back(std::move(edge));
      }
    }
  } catch (const ordered_json::exception& e) {
    throw FormatError(std::string("join schema: ") + e.what());
  } catch (const InvalidInput& e) {
    throw FormatError(std::string("join schema: ") + e.what());
  }
  g.validate();
  return g;
}

SchemaGraph SchemaGraph::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open join schema '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str(), path.parent_path());
}

RawTable FlatTable::model_table() const {
  RawTable out;
  out.source_checksum = table.source_checksum;
  for (const auto& name : model_columns) out.columns.push_back(table.columns[table.column_index(name)]);
  return out;
}

namespace {

double min_of(const std::vector<double>& v) {
  double lo = std::numeric_limits<double>::infinity();
  for (double x : v) {
    if (!std::isnan(x)) lo = std::min(lo, x);
  }
  return lo;
}

ColumnMeta raw_meta(const RawColumn& col, double precision, double valid_min) {
  ColumnMeta m;
  m.name = col.name;
  m.kind = col.kind;
  m.dictionary = col.dictionary;
  m.precision = precision;
  m.dequant_bound = precision;
  m.raw_min = valid_min;
  m.raw_max = *std::max_element(col.values.begin(), col.values.end());
  m.rebuild_index();
  return m;
}

}  // namespace

FlatTable flatten(const SchemaGraph& schema, std::span<const RawTable> tables) {
  schema.validate();
  const std::size_t n = schema.tables.size();
  if (tables.size() != n) throw InvalidInput("flatten: one table per schema entry is required");

  std::vector<std::set<std::string>> key_names(n);
  for (const auto& e : schema.edges) {
    key_names[schema.table_index(e.child)].insert(e.fk);
    key_names[schema.table_index(e.parent)].insert(e.pk);
  }
  for (std::size_t t = 0; t < n; ++t) {
    if (tables[t].rows() == 0) throw InvalidInput("flatten: table '" + schema.tables[t].name + "' is empty");
    for (const auto& [name, kind] : schema.tables[t].schema.columns) tables[t].column_index(name);
  }
  auto key_values = [&](std::size_t t, const std::string& column) -> const std::vector<double>& {
    return tables[t].columns[tables[t].column_index(column)].values;
  };
  for (const auto& e : schema.edges) {
    const std::size_t p = schema.table_index(e.parent);
    std::set<double> seen;
    for (double v : key_values(p, e.pk)) {
      if (!seen.insert(v).second) {
        throw InvalidInput("flatten: duplicate primary key " + Literal::of(v).text + " in " +
                           qualified(e.parent, e.pk));
      }
    }
  }

  // Row tuples: one base-row index per table, -1 when absent.
  const auto order = schema.bfs(std::vector<std::size_t>{0});
  std::vector<std::int64_t> rows;
  for (std::size_t r = 0; r < tables[0].rows(); ++r) {
    const std::size_t at = rows.size();
    rows.resize(at + n, -1);
    rows[at] = static_cast<std::int64_t>(r);
  }
  for (std::size_t step = 1; step < order.size(); ++step) {
    const auto [t, e] = order[step];
    const JoinEdge& edge = schema.edges[e];
    const bool t_is_child = schema.table_index(edge.child) == t;
    const std::size_t u = t_is_child ? schema.table_index(edge.parent) : schema.table_index(edge.child);
    const auto& t_keys = key_values(t, t_is_child ? edge.fk : edge.pk);
    const auto& u_keys = key_values(u, t_is_child ? edge.pk : edge.fk);
    std::unordered_map<double, std::vector<std::int64_t>> index;
    for (std::size_t r = 0; r < t_keys.size(); ++r) index[t_keys[r]].push_back(static_cast<std::int64_t>(r));
    std::vector<bool> used(t_keys.size(), false);
    std::vector<std::int64_t> next;
    next.reserve(rows.size());
    for (std::size_t at = 0; at < rows.size(); at += n) {
      const std::int64_t ur = rows[at + u];
      const auto it = ur >= 0 ? index.find(u_keys[static_cast<std::size_t>(ur)]) : index.end();
      if (it == index.end()) {
        next.insert(next.end(), rows.begin() + at, rows.begin() + at + n);
        continue;
      }
      for (std::int64_t tr : it->second) {
        used[static_cast<std::size_t>(tr)] = true;
        const std::size_t o = next.size();
        next.insert(next.end(), rows.begin() + at, rows.begin() + at + n);
        next[o + t] = tr;
      }
    }
    for (std::size_t r = 0; r < used.size(); ++r) {
      if (used[r]) continue;
      const std::size_t o = next.size();
      next.resize(o + n, -1);
      next[o + t] = static_cast<std::int64_t>(r);
    }
    rows = std::move(next);
  }
  const std::size_t J = rows.size() / n;
  auto base_row = [&](std::size_t r, std::size_t t) { return rows[r * n + t]; };

  FlatTable flat;
  JoinGroupStats& stats = flat.stats;
  stats.edges = schema.edges;
  stats.flat_rows = J;
  for (const auto& t : schema.tables) stats.tables.push_back(t.name);

  auto add_column = [&](RawColumn col, double w, double valid_min) {
    col.precision_override = w;
    flat.meta.push_back(raw_meta(col, w, valid_min));
    flat.table.columns.push_back(std::move(col));
  };

  // Join-group columns.
  std::vector<std::vector<double>> groups;
  for (const auto& e : schema.edges) {
    const std::size_t c = schema.table_index(e.child), p = schema.table_index(e.parent);
    const auto& fk = key_values(c, e.fk);
    const auto& pk = key_values(p, e.pk);
    std::vector<double> v(J, std::numeric_limits<double>::quiet_NaN());
    for (std::size_t r = 0; r < J; ++r) {
      if (base_row(r, p) >= 0) {
        v[r] = pk[static_cast<std::size_t>(base_row(r, p))];
      } else if (base_row(r, c) >= 0) {
        v[r] = fk[static_cast<std::size_t>(base_row(r, c))];
      }
    }
    std::vector<double> present;
    for (double x : v) {
      if (!std::isnan(x)) present.push_back(x);
    }
    const double w = infer_precision(present);
    const double lo = min_of(v);
    const double null_key = lo - 2.0 * w;
    for (double& x : v) {
      if (std::isnan(x)) x = null_key;
    }
    RawColumn col;
    col.name = qualified(e.child, e.fk);
    col.values = v;
    stats.group_columns.push_back(col.name);
    stats.null_keys.push_back(null_key);
    flat.model_columns.push_back(col.name);
    groups.push_back(std::move(v));
    add_column(std::move(col), w, lo);
  }

  // Attribute columns.
  for (std::size_t t = 0; t < n; ++t) {
    const auto& spec = schema.tables[t];
    for (const auto& [name, kind] : spec.schema.columns) {
      if (key_names[t].contains(name)) continue;
      const RawColumn& base = tables[t].columns[tables[t].column_index(name)];
      const double w = base.kind == ColumnKind::kCategorical
                           ? 1.0
                           : base.precision_override.value_or(infer_precision(base.values));
      const double lo = min_of(base.values);
      RawColumn col;
      col.name = qualified(spec.name, name);
      col.kind = base.kind;
      col.dictionary = base.dictionary;
      col.values.resize(J);
      for (std::size_t r = 0; r < J; ++r) {
        const std::int64_t br = base_row(r, t);
        col.values[r] = br >= 0 ? base.values[static_cast<std::size_t>(br)] : lo - 2.0 * w;
      }
      flat.model_columns.push_back(col.name);
      add_column(std::move(col), w, lo);
    }
  }

  // Indicators.
  for (std::size_t t = 0; t < n; ++t) {
    RawColumn col;
    col.name = schema.tables[t].name + kPresentSuffix;
    col.values.resize(J);
    bool all = true;
    for (std::size_t r = 0; r < J; ++r) {
      col.values[r] = base_row(r, t) >= 0 ? 1.0 : 0.0;
      all = all && col.values[r] == 1.0;
    }
    stats.indicator_columns.push_back(all ? std::string() : col.name);
    if (!all) flat.model_columns.push_back(col.name);
    add_column(std::move(col), 1.0, all ? 1.0 : 0.0);
  }

  // Fanouts: per edge the child fk, then the parent pk.
  std::set<std::string> fanout_names;
  for (std::size_t g = 0; g < schema.edges.size(); ++g) {
    const auto& e = schema.edges[g];
    const std::pair<std::string, std::string> sides[2] = {{e.child, e.fk}, {e.parent, e.pk}};
    for (const auto& [table, key] : sides) {
      FanoutMap map;
      map.table = table;
      map.key = key;
      for (double v : key_values(schema.table_index(table), key)) ++map.counts[v];
      const std::string name = qualified(table, key) + kFanoutSuffix;
      if (fanout_names.insert(name).second) {
        RawColumn col;
        col.name = name;
        col.values.resize(J);
        for (std::size_t r = 0; r < J; ++r) col.values[r] = map.fanout(groups[g][r]);
        const double lo = min_of(col.values);
        add_column(std::move(col), 1.0, lo);
      }
      stats.fanouts.push_back(std::move(map));
    }
  }

  // Join-group domain and frequencies.
  std::map<std::vector<double>, std::uint64_t> freq;
  std::vector<double> tuple(groups.size());
  for (std::size_t r = 0; r < J; ++r) {
    for (std::size_t g = 0; g < groups.size(); ++g) tuple[g] = groups[g][r];
    ++freq[tuple];
  }
  for (const auto& [key, count] : freq) {
    stats.domain.push_back(key);
    stats.frequency.push_back(count);
  }

  Fnv1a h;
  for (std::size_t t = 0; t < n; ++t) {
    h.update(schema.tables[t].name);
    h.update(tables[t].source_checksum);
  }
  flat.table.source_checksum = to_hex(h.digest());
  return flat;
}

FlatTable flatten(const SchemaGraph& schema) {
  std::vector<RawTable> tables;
  for (const auto& t : schema.tables) tables.push_back(ingest_csv(t.csv, t.schema));
  return flatten(schema, tables);
}

PreparedTable prepare_flat(const FlatTable& flat, std::uint64_t seed) {
  PreparedTable p = prepare(flat.model_table(), seed);
  for (auto& c : p.columns) {
    c.raw_min = flat.meta[flat.table.column_index(c.name)].raw_min;
  }
  return p;
}

namespace {

struct JoinPlan {
  std::vector<Predicate> predicates;
  /// Per join group, the fanout map dividing the weight (null when none).
  std::vector<const FanoutMap*> divisors;

  double weight(std::span<const double> group_values) const {
    double f = 1.0;
    for (std::size_t g = 0; g < divisors.size(); ++g) {
      if (divisors[g]) f *= divisors[g]->fanout(group_values[g]);
    }
    return 1.0 / f;
  }
};

JoinPlan plan_query(const JoinGroupStats& stats, const JoinQuery& query) {
  if (query.tables.empty()) throw InvalidInput("join query names no tables");
  const std::size_t n = stats.tables.size();
  std::vector<bool> in_q(n, false);
  std::vector<std::size_t> q;
  for (const auto& name : query.tables) {
    const std::size_t t = index_of(stats.tables, name);
    if (!in_q[t]) q.push_back(t);
    in_q[t] = true;
  }
  std::vector<std::pair<std::size_t, std::size_t>> ends;
  for (const auto& e : stats.edges) {
    ends.emplace_back(index_of(stats.tables, e.child), index_of(stats.tables, e.parent));
  }
  {
    std::vector<std::pair<std::size_t, std::size_t>> inner;
    for (const auto& [a, b] : ends) {
      if (in_q[a] && in_q[b]) inner.emplace_back(a, b);
    }
    const std::size_t root = q.front();
    std::size_t reached = 0;
    for (const auto& [t, e] : tree_bfs(n, inner, std::span(&root, 1))) reached += in_q[t] ? 1 : 0;
    if (reached != q.size()) throw InvalidInput("queried tables are not connected by join edges");
  }

  JoinPlan plan;
  plan.divisors.assign(stats.edges.size(), nullptr);
  // Each table outside Q is reached through the first edge of its unique path to Q.
  for (const auto& [t, e] : tree_bfs(n, ends, q)) {
    if (e == npos) continue;
    const bool is_child = ends[e].first == t;
    plan.divisors[e] = &stats.fanouts[2 * e + (is_child ? 0 : 1)];
  }

  for (const auto& p : query.predicates) {
    bool owned = false;
    for (std::size_t t : q) {
      const std::string prefix = stats.tables[t] + ".";
      owned = owned || p.column.starts_with(prefix);
    }
    if (!owned) {
      throw InvalidInput("predicate column '" + p.column + "' does not belong to a queried table");
    }
    if (std::find(stats.group_columns.begin(), stats.group_columns.end(), p.column) !=
            stats.group_columns.end() ||
        p.column.ends_with(kPresentSuffix) || p.column.ends_with(kFanoutSuffix)) {
      throw InvalidInput("predicates on join keys, indicators or fanouts are not supported: '" +
                         p.column + "'");
    }
    plan.predicates.push_back(p);
  }
  for (std::size_t t : q) {
    if (stats.indicator_columns[t].empty()) continue;
    plan.predicates.push_back({stats.indicator_columns[t], CompareOp::kEq, Literal::of(1.0), {}});
  }
  return plan;
}

}  // namespace

JoinEstimator::JoinEstimator(const MixtureCdf& model, JoinGroupStats stats)
    : model_(model), stats_(std::move(stats)) {
  auto column = [&](const std::string& name) {
    for (std::size_t j = 0; j < model_.dims(); ++j) {
      if (model_.columns()[j].name == name) return j;
    }
    throw InvalidInput("model has no column '" + name + "' required by the join statistics");
  };
  for (const auto& g : stats_.group_columns) key_columns_.push_back(column(g));
  for (const auto& ind : stats_.indicator_columns) {
    if (!ind.empty()) column(ind);
  }
  if (stats_.flat_rows == 0) throw InvalidInput("join statistics describe an empty flat table");
}

double JoinEstimator::estimate(const JoinQuery& query) const {
  const JoinPlan plan = plan_query(stats_, query);
  const auto branches = compile_union(plan.predicates, model_.columns(), {.restrict_to_domain = true});
  const double J = static_cast<double>(stats_.flat_rows);
  double p = 0.0;
  if (key_columns_.empty()) {
    for (const auto& b : branches) {
      if (!b.empty) p += model_.box_probability(b.box);
    }
    return J * p;
  }
  KeyDomain domain;
  domain.columns = key_columns_;
  domain.tuples = stats_.domain;
  std::vector<double> weights;
  for (std::size_t t = 0; t < stats_.domain.size(); ++t) {
    domain.probabilities.push_back(static_cast<double>(stats_.frequency[t]) / J);
    weights.push_back(plan.weight(stats_.domain[t]));
  }
  const auto rest = complement_columns(model_.dims(), key_columns_);
  for (const auto& b : branches) {
    if (b.empty) continue;
    p += conditional_expectation(model_, domain, weights, project_box(b.box, rest));
  }
  return J * p;
}

CardinalityEstimate JoinEstimator::cardinality(const JoinQuery& query) const {
  const JoinPlan plan = plan_query(stats_, query);
  const auto branches = compile_union(plan.predicates, model_.columns(), {.restrict_to_domain = true});
  const double J = static_cast<double>(stats_.flat_rows);
  CardinalityEstimate out = scale_selectivity(estimate(query) / J, stats_.flat_rows);
  for (const auto& b : branches) {
    for (const auto& w : b.warnings) {
      if (std::find(out.warnings.begin(), out.warnings.end(), w) == out.warnings.end()) {
        out.warnings.push_back(w);
      }
    }
  }
  return out;
}

double empirical_join_count(const FlatTable& flat, const JoinQuery& query) {
  const JoinPlan plan = plan_query(flat.stats, query);
  const auto branches = compile_union(plan.predicates, flat.meta, {.restrict_to_domain = true});
  std::vector<std::size_t> group_index;
  for (const auto& g : flat.stats.group_columns) group_index.push_back(flat.table.column_index(g));
  std::vector<double> groups(group_index.size());
  double total = 0.0;
  for (std::size_t r = 0; r < flat.rows(); ++r) {
    bool hit = false;
    for (const auto& b : branches) {
      if (b.empty) continue;
      bool inside = true;
      for (std::size_t j = 0; j < b.raw.size() && inside; ++j) {
        inside = b.raw[j].contains(flat.table.columns[j].values[r]);
      }
      if (inside) {
        hit = true;
        break;
      }
    }
    if (!hit) continue;
    for (std::size_t g = 0; g < group_index.size(); ++g) {
      groups[g] = flat.table.columns[group_index[g]].values[r];
    }
    total += plan.weight(groups);
  }
  return total;
}

}  // namespace cdfest
