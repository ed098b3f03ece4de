#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "cdfest/column_meta.hpp"

namespace cdfest {

/// Column declarations for one CSV table.
///
/// File format (INI):
///
///     [columns]
///     age = numeric
///     city = categorical
///
///     [precision]          ; optional w overrides, raw units
///     age = 1
///
/// Every CSV column must be declared; declaring a column the CSV lacks is an error.
struct SchemaConfig {
  std::vector<std::pair<std::string, ColumnKind>> columns;  // declaration order
  std::map<std::string, double> precision_overrides;

  std::optional<ColumnKind> kind_of(const std::string& column) const;

  static SchemaConfig load(const std::filesystem::path& path);
  static SchemaConfig parse(const std::string& text);
};

}  // namespace cdfest
