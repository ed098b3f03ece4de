#include "cdfest/model_io.hpp"

#include <cinttypes>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "cdfest/checksum.hpp"
#include "cdfest/error.hpp"
#include "json.hpp"

namespace cdfest {

using nlohmann::json;

std::string to_hex(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof(buf), "%016" PRIx64, v);
  return buf;
}

std::size_t JoinGroupStats::table_index(const std::string& name) const {
  for (std::size_t t = 0; t < tables.size(); ++t) {
    if (tables[t] == name) return t;
  }
  throw InvalidInput("table '" + name + "' is not part of the join schema");
}

std::uint64_t schema_hash(const MixtureCdf& model) {
  Fnv1a h;
  h.update_u64(model.components());
  h.update_u64(static_cast<std::uint64_t>(model.net_shape().depth));
  h.update_u64(static_cast<std::uint64_t>(model.net_shape().width));
  for (const auto& c : model.columns()) {
    h.update(c.name);
    h.update(std::string_view("\0", 1));
    h.update(to_string(c.kind));
    for (const auto& label : c.dictionary) {
      h.update(label);
      h.update(std::string_view("\x1f", 1));
    }
    h.update(std::string_view("\x1e", 1));
  }
  return h.digest();
}

namespace {

json column_to_json(const ColumnMeta& c) {
  return json{{"name", c.name},
              {"kind", to_string(c.kind)},
              {"mean", c.mean},
              {"stddev", c.stddev},
              {"precision", c.precision},
              {"dequant_bound", c.dequant_bound},
              {"raw_min", c.raw_min},
              {"raw_max", c.raw_max},
              {"dictionary", c.dictionary}};
}

json join_to_json(const JoinGroupStats& s) {
  json edges = json::array();
  for (const auto& e : s.edges) {
    edges.push_back({{"child", e.child}, {"fk", e.fk}, {"parent", e.parent}, {"pk", e.pk}});
  }
  json fanouts = json::array();
  for (const auto& f : s.fanouts) {
    json counts = json::array();
    for (const auto& [value, count] : f.counts) counts.push_back(json::array({value, count}));
    fanouts.push_back({{"table", f.table}, {"key", f.key}, {"counts", counts}});
  }
  return json{{"tables", s.tables},
              {"edges", edges},
              {"group_columns", s.group_columns},
              {"null_keys", s.null_keys},
              {"domain", s.domain},
              {"frequency", s.frequency},
              {"fanouts", fanouts},
              {"indicator_columns", s.indicator_columns},
              {"flat_rows", s.flat_rows}};
}

[[noreturn]] void corrupt(const std::string& what) { throw CorruptFile("corrupt model file: " + what); }

const json& field(const json& obj, const char* key) {
  if (!obj.is_object() || !obj.contains(key)) corrupt(std::string("missing field '") + key + "'");
  return obj.at(key);
}

double number(const json& v, const char* what) {
  if (!v.is_number()) corrupt(std::string("'") + what + "' is not a number");
  return v.get<double>();
}

std::uint64_t count(const json& v, const char* what) {
  if (!v.is_number_unsigned() && !(v.is_number_integer() && v.get<std::int64_t>() >= 0)) {
    corrupt(std::string("'") + what + "' is not a non-negative integer");
  }
  return v.get<std::uint64_t>();
}

std::vector<double> number_array(const json& v, const char* what, std::size_t expected) {
  if (!v.is_array()) corrupt(std::string("'") + what + "' is not an array");
  if (v.size() != expected) {
    corrupt(std::string("'") + what + "' has " + std::to_string(v.size()) + " entries, expected " +
            std::to_string(expected));
  }
  std::vector<double> out;
  out.reserve(v.size());
  for (const auto& x : v) out.push_back(number(x, what));
  return out;
}

std::vector<std::string> string_array(const json& v, const char* what) {
  if (!v.is_array()) corrupt(std::string("'") + what + "' is not an array");
  std::vector<std::string> out;
  for (const auto& x : v) {
    if (!x.is_string()) corrupt(std::string("'") + what + "' holds a non-string");
    out.push_back(x.get<std::string>());
  }
  return out;
}

ColumnMeta column_from_json(const json& j) {
  ColumnMeta c;
  if (!field(j, "name").is_string()) corrupt("column name");
  c.name = j.at("name").get<std::string>();
  if (!field(j, "kind").is_string()) corrupt("column kind");
  try {
    c.kind = column_kind_from_string(j.at("kind").get<std::string>());
  } catch (const InvalidInput& e) {
    corrupt(e.what());
  }
  c.mean = number(field(j, "mean"), "mean");
  c.stddev = number(field(j, "stddev"), "stddev");
  c.precision = number(field(j, "precision"), "precision");
  c.dequant_bound = number(field(j, "dequant_bound"), "dequant_bound");
  c.raw_min = number(field(j, "raw_min"), "raw_min");
  c.raw_max = number(field(j, "raw_max"), "raw_max");
  c.dictionary = string_array(field(j, "dictionary"), "dictionary");
  if (!(c.stddev > 0.0) || !(c.precision > 0.0)) corrupt("column '" + c.name + "' has non-positive scale");
  return c;
}

JoinGroupStats join_from_json(const json& j) {
  JoinGroupStats s;
  s.tables = string_array(field(j, "tables"), "tables");
  const json& edges = field(j, "edges");
  if (!edges.is_array()) corrupt("edges");
  for (const auto& e : edges) {
    JoinEdge edge;
    for (auto [key, dst] : {std::pair{"child", &edge.child}, std::pair{"fk", &edge.fk},
                            std::pair{"parent", &edge.parent}, std::pair{"pk", &edge.pk}}) {
      if (!field(e, key).is_string()) corrupt("edge field");
      *dst = e.at(key).get<std::string>();
    }
    s.edges.push_back(std::move(edge));
  }
  const std::size_t groups = s.edges.size();
  s.group_columns = string_array(field(j, "group_columns"), "group_columns");
  if (s.group_columns.size() != groups) corrupt("group_columns size");
  s.null_keys = number_array(field(j, "null_keys"), "null_keys", groups);
  const json& domain = field(j, "domain");
  if (!domain.is_array()) corrupt("domain");
  for (const auto& t : domain) s.domain.push_back(number_array(t, "domain tuple", groups));
  const json& freq = field(j, "frequency");
  if (!freq.is_array() || freq.size() != s.domain.size()) corrupt("frequency size");
  for (const auto& f : freq) s.frequency.push_back(count(f, "frequency"));
  const json& fanouts = field(j, "fanouts");
  if (!fanouts.is_array() || fanouts.size() != 2 * groups) corrupt("fanouts size");
  for (const auto& f : fanouts) {
    FanoutMap map;
    if (!field(f, "table").is_string() || !field(f, "key").is_string()) corrupt("fanout names");
    map.table = f.at("table").get<std::string>();
    map.key = f.at("key").get<std::string>();
    const json& counts = field(f, "counts");
    if (!counts.is_array()) corrupt("fanout counts");
    for (const auto& pair : counts) {
      if (!pair.is_array() || pair.size() != 2) corrupt("fanout entry");
      map.counts[number(pair[0], "fanout key")] = count(pair[1], "fanout count");
    }
    s.fanouts.push_back(std::move(map));
  }
  s.indicator_columns = string_array(field(j, "indicator_columns"), "indicator_columns");
  if (s.indicator_columns.size() != s.tables.size()) corrupt("indicator_columns size");
  s.flat_rows = count(field(j, "flat_rows"), "flat_rows");
  return s;
}

}  // namespace

std::string serialize_model(const ModelFile& file) {
  const MixtureCdf& m = file.model;
  json columns = json::array();
  for (const auto& c : m.columns()) columns.push_back(column_to_json(c));
  json nets = json::array();
  const std::size_t P = m.net_parameter_count();
  const auto raw = m.raw_parameters();
  for (std::size_t net = 0; net < m.components() * m.dims(); ++net) {
    nets.push_back(std::vector<double>(raw.begin() + static_cast<std::ptrdiff_t>(net * P),
                                       raw.begin() + static_cast<std::ptrdiff_t>((net + 1) * P)));
  }
  json doc{{"format", "cdfest-model"},
           {"format_version", kModelFormatVersion},
           {"components", m.components()},
           {"depth", m.net_shape().depth},
           {"width", m.net_shape().width},
           {"columns", columns},
           {"row_count", file.row_count},
           {"source_checksum", file.source_checksum},
           {"config", file.config},
           {"mixture_logits", std::vector<double>(m.raw_logits().begin(), m.raw_logits().end())},
           {"net_parameters", nets},
           {"schema_hash", to_hex(schema_hash(m))}};
  if (file.join) doc["join_stats"] = join_to_json(*file.join);
  return doc.dump(1) + "\n";
}

ModelFile parse_model(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    corrupt(e.what());
  }
  if (!doc.is_object()) corrupt("top level is not an object");
  if (!doc.contains("format") || doc.at("format") != "cdfest-model") corrupt("not a cdfest model");
  const json& version = field(doc, "format_version");
  if (!version.is_number_integer() || version.get<int>() != kModelFormatVersion) {
    throw VersionMismatch("model format version " + version.dump() + " is not supported (expected " +
                          std::to_string(kModelFormatVersion) + ")");
  }
  try {
    const std::size_t m = count(field(doc, "components"), "components");
    NetShape shape;
    shape.depth = static_cast<int>(count(field(doc, "depth"), "depth"));
    shape.width = static_cast<int>(count(field(doc, "width"), "width"));
    try {
      shape.validate();
    } catch (const InvalidInput& e) {
      corrupt(e.what());
    }
    const json& cols = field(doc, "columns");
    if (!cols.is_array() || cols.empty()) corrupt("columns");
    std::vector<ColumnMeta> columns;
    for (const auto& c : cols) columns.push_back(column_from_json(c));
    if (m == 0) corrupt("zero components");

    MixtureCdf model(m, shape, std::move(columns));
    const auto logits = number_array(field(doc, "mixture_logits"), "mixture_logits", m);
    std::copy(logits.begin(), logits.end(), model.raw_logits().begin());
    const json& nets = field(doc, "net_parameters");
    const std::size_t P = model.net_parameter_count();
    if (!nets.is_array() || nets.size() != m * model.dims()) corrupt("net_parameters count");
    auto raw = model.raw_parameters();
    for (std::size_t net = 0; net < nets.size(); ++net) {
      const auto values = number_array(nets[net], "net_parameters entry", P);
      std::copy(values.begin(), values.end(), raw.begin() + static_cast<std::ptrdiff_t>(net * P));
    }
    for (double v : raw) {
      if (!std::isfinite(v)) corrupt("non-finite parameter");
    }
    model.refresh();

    ModelFile file{std::move(model), 0, {}, {}, std::nullopt};
    file.row_count = count(field(doc, "row_count"), "row_count");
    if (!field(doc, "source_checksum").is_string()) corrupt("source_checksum");
    file.source_checksum = doc.at("source_checksum").get<std::string>();
    const json& config = field(doc, "config");
    if (!config.is_object()) corrupt("config");
    for (const auto& [key, value] : config.items()) {
      if (!value.is_string()) corrupt("config values must be strings");
      file.config[key] = value.get<std::string>();
    }
    if (doc.contains("join_stats")) file.join = join_from_json(doc.at("join_stats"));

    if (!field(doc, "schema_hash").is_string()) corrupt("schema_hash");
    const std::string stored = doc.at("schema_hash").get<std::string>();
    const std::string actual = to_hex(schema_hash(file.model));
    if (stored != actual) {
      throw SchemaMismatch("schema hash mismatch: file says " + stored + ", contents hash to " + actual);
    }
    return file;
  } catch (const json::exception& e) {
    corrupt(e.what());
  }
}

void save_model(const ModelFile& file, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error("cannot open '" + path.string() + "' for writing");
  out << serialize_model(file);
  if (!out) throw Error("failed writing '" + path.string() + "'");
}

ModelFile load_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open model file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_model(ss.str());
}

}  // namespace cdfest
