#include "cdfest/schema_config.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fstream>
#include <sstream>

#include "cdfest/error.hpp"

namespace cdfest {

namespace pt = boost::property_tree;

std::optional<ColumnKind> SchemaConfig::kind_of(const std::string& column) const {
  for (const auto& [name, kind] : columns) {
    if (name == column) return kind;
  }
  return std::nullopt;
}

SchemaConfig SchemaConfig::parse(const std::string& text) {
  pt::ptree tree;
  std::istringstream in(text);
  try {
    pt::read_ini(in, tree);
  } catch (const pt::ini_parser_error& e) {
    throw FormatError(std::string("schema config: ") + e.what());
  }
  SchemaConfig schema;
  for (const auto& [section, body] : tree) {
    if (section == "columns") {
      for (const auto& [name, value] : body) {
        try {
          schema.columns.emplace_back(name, column_kind_from_string(value.get_value<std::string>()));
        } catch (const InvalidInput& e) {
          throw FormatError("schema config, column '" + name + "': " + e.what());
        }
      }
    } else if (section == "precision") {
      for (const auto& [name, value] : body) {
        const auto w = value.get_value_optional<double>();
        if (!w || !(*w > 0.0)) throw FormatError("schema config: precision for '" + name + "' must be > 0");
        schema.precision_overrides[name] = *w;
      }
    } else {
      throw FormatError("schema config: unknown section [" + section + "]");
    }
  }
  for (const auto& [name, w] : schema.precision_overrides) {
    if (!schema.kind_of(name)) throw FormatError("schema config: precision given for undeclared column '" + name + "'");
  }
  if (schema.columns.empty()) throw FormatError("schema config: no [columns] declared");
  return schema;
}

SchemaConfig SchemaConfig::load(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open schema config '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse(ss.str());
}

}  // namespace cdfest
