#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "cdfest/column_meta.hpp"
#include "cdfest/csv.hpp"
#include "cdfest/schema_config.hpp"

namespace cdfest {

/// A typed column in raw units. Categorical values are stored as their integer
/// codes 1..K.
struct RawColumn {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  std::vector<double> values;
  std::vector<std::string> dictionary;  // categorical only; code k + 1 <-> dictionary[k]
  std::optional<double> precision_override;

  /// Literal text of row `r` (category label or shortest numeric form).
  std::string text(std::size_t r) const;
};

struct RawTable {
  std::vector<RawColumn> columns;
  std::string source_checksum;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().values.size(); }
  std::size_t dims() const { return columns.size(); }
  std::size_t column_index(const std::string& name) const;  // throws UnknownColumn
};

/// Dequantized, normalized matrix ready for training (row-major).
struct PreparedTable {
  std::size_t row_count = 0;
  std::vector<ColumnMeta> columns;
  std::vector<double> values;  // row_count x columns.size()
  std::string source_checksum;

  std::size_t dims() const { return columns.size(); }
  std::span<const double> row(std::size_t r) const {
    return std::span<const double>(values).subspan(r * dims(), dims());
  }
};

/// Typed view of a parsed CSV. `dictionaries` supplies existing category codes
/// (new labels are appended). Throws ParseError / UnknownColumn / InvalidInput.
RawTable ingest_csv(const CsvDocument& doc, const SchemaConfig& schema,
                    const std::map<std::string, std::vector<std::string>>& dictionaries = {});
RawTable ingest_csv(const std::filesystem::path& path, const SchemaConfig& schema,
                    const std::map<std::string, std::vector<std::string>>& dictionaries = {});

void write_csv(const RawTable& table, std::ostream& out);

/// Minimum positive gap between sorted distinct values; 1 when there is only one
/// distinct value.
double infer_precision(std::span<const double> values);

/// x + z with z ~ U[0, bound), deterministic in `seed`. Results stay strictly
/// below x + bound.
std::vector<double> dequantize(std::span<const double> values, double bound, std::uint64_t seed);

struct Normalized {
  std::vector<double> values;
  double mean = 0.0;
  double stddev = 1.0;
};

/// z-score with the population standard deviation. Throws InvalidInput for a
/// constant column.
Normalized normalize(std::span<const double> values);

/// Per column: w (inferred or overridden; 1 for categorical), b = w, dequantize,
/// normalize.
PreparedTable prepare(const RawTable& table, std::uint64_t seed);

}  // namespace cdfest
