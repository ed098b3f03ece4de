#include "cdfest/pipeline.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <ostream>
#include <random>
#include <unordered_map>

#include "cdfest/checksum.hpp"
#include "cdfest/error.hpp"
#include "random_util.hpp"

namespace cdfest {

namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t')) s.remove_suffix(1);
  return s;
}

std::string shortest(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

}  // namespace

std::string RawColumn::text(std::size_t r) const {
  if (kind == ColumnKind::kCategorical) {
    // Codes outside the dictionary are fill values for absent rows.
    const double v = values[r];
    if (!(v >= 1.0) || v > static_cast<double>(dictionary.size())) return "";
    return dictionary[static_cast<std::size_t>(v) - 1];
  }
  return shortest(values[r]);
}

std::size_t RawTable::column_index(const std::string& name) const {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].name == name) return j;
  }
  throw UnknownColumn(name);
}

RawTable ingest_csv(const CsvDocument& doc, const SchemaConfig& schema,
                    const std::map<std::string, std::vector<std::string>>& dictionaries) {
  for (const auto& [name, kind] : schema.columns) {
    if (std::find(doc.header.begin(), doc.header.end(), name) == doc.header.end()) {
      throw UnknownColumn(name);
    }
  }
  if (doc.rows.empty()) throw ParseError("table is empty: header row only");

  RawTable table;
  Fnv1a checksum;
  for (const auto& h : doc.header) {
    checksum.update(h);
    checksum.update(",");
  }
  for (const auto& row : doc.rows) {
    for (const auto& f : row) {
      checksum.update(f);
      checksum.update(",");
    }
    checksum.update("\n");
  }
  table.source_checksum = to_hex(checksum.digest());

  for (std::size_t c = 0; c < doc.header.size(); ++c) {
    const std::string& name = doc.header[c];
    const auto kind = schema.kind_of(name);
    if (!kind) throw InvalidInput("CSV column '" + name + "' is not declared in the schema config");
    RawColumn col;
    col.name = name;
    col.kind = *kind;
    if (const auto it = schema.precision_overrides.find(name); it != schema.precision_overrides.end()) {
      col.precision_override = it->second;
    }
    col.values.reserve(doc.rows.size());
    if (col.kind == ColumnKind::kCategorical) {
      std::unordered_map<std::string, int> codes;
      if (const auto it = dictionaries.find(name); it != dictionaries.end()) {
        col.dictionary = it->second;
        for (std::size_t k = 0; k < col.dictionary.size(); ++k) {
          codes.emplace(col.dictionary[k], static_cast<int>(k + 1));
        }
      }
      for (const auto& row : doc.rows) {
        const std::string label(trim(row[c]));
        auto [it, inserted] = codes.emplace(label, static_cast<int>(col.dictionary.size() + 1));
        if (inserted) col.dictionary.push_back(label);
        col.values.push_back(it->second);
      }
    } else {
      for (std::size_t r = 0; r < doc.rows.size(); ++r) {
        const std::string_view cell = trim(doc.rows[r][c]);
        double v = 0.0;
        const auto res = std::from_chars(cell.data(), cell.data() + cell.size(), v);
        if (cell.empty() || res.ec != std::errc() || res.ptr != cell.data() + cell.size() ||
            !std::isfinite(v)) {
          throw ParseError("column '" + name + "' row " + std::to_string(r + 1) + ": cannot parse '" +
                               std::string(cell) + "' as a number",
                           r + 1);
        }
        col.values.push_back(v);
      }
    }
    table.columns.push_back(std::move(col));
  }
  return table;
}

RawTable ingest_csv(const std::filesystem::path& path, const SchemaConfig& schema,
                    const std::map<std::string, std::vector<std::string>>& dictionaries) {
  return ingest_csv(read_csv(path), schema, dictionaries);
}

void write_csv(const RawTable& table, std::ostream& out) {
  std::vector<std::string> fields;
  for (const auto& c : table.columns) fields.push_back(c.name);
  write_csv_row(out, fields);
  for (std::size_t r = 0; r < table.rows(); ++r) {
    fields.clear();
    for (const auto& c : table.columns) fields.push_back(c.text(r));
    write_csv_row(out, fields);
  }
}

double infer_precision(std::span<const double> values) {
  std::vector<double> sorted(values.begin(), values.end());
  std::sort(sorted.begin(), sorted.end());
  double gap = 0.0;
  for (std::size_t k = 1; k < sorted.size(); ++k) {
    const double g = sorted[k] - sorted[k - 1];
    if (g > 0.0 && (gap == 0.0 || g < gap)) gap = g;
  }
  return gap > 0.0 ? gap : 1.0;
}

std::vector<double> dequantize(std::span<const double> values, double bound, std::uint64_t seed) {
  if (!(bound > 0.0)) throw InvalidInput("dequantization bound must be > 0");
  std::mt19937_64 rng(detail::splitmix64(seed));
  std::vector<double> out(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) {
    const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;  // [0, 1)
    const double x = values[k];
    double y = x + u * bound;
    const double cap = x + bound;
    if (y >= cap) y = std::nextafter(cap, x);
    out[k] = y;
  }
  return out;
}

Normalized normalize(std::span<const double> values) {
  if (values.size() < 2) throw InvalidInput("normalize needs at least two values");
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= static_cast<double>(values.size());
  double var = 0.0;
  for (double v : values) var += (v - mean) * (v - mean);
  var /= static_cast<double>(values.size());
  const double sd = std::sqrt(var);
  if (!(sd > 0.0) || !std::isfinite(sd)) throw InvalidInput("constant column cannot be normalized");
  Normalized out;
  out.mean = mean;
  out.stddev = sd;
  out.values.resize(values.size());
  for (std::size_t k = 0; k < values.size(); ++k) out.values[k] = (values[k] - mean) / sd;
  return out;
}

PreparedTable prepare(const RawTable& table, std::uint64_t seed) {
  PreparedTable out;
  out.row_count = table.rows();
  out.source_checksum = table.source_checksum;
  const std::size_t d = table.dims();
  out.values.assign(out.row_count * d, 0.0);
  for (std::size_t j = 0; j < d; ++j) {
    const RawColumn& col = table.columns[j];
    ColumnMeta meta;
    meta.name = col.name;
    meta.kind = col.kind;
    meta.dictionary = col.dictionary;
    if (col.kind == ColumnKind::kCategorical) {
      meta.precision = 1.0;
    } else {
      meta.precision = col.precision_override.value_or(infer_precision(col.values));
    }
    meta.dequant_bound = meta.precision;
    const auto [mn, mx] = std::minmax_element(col.values.begin(), col.values.end());
    meta.raw_min = *mn;
    meta.raw_max = *mx;
    if (meta.raw_min == meta.raw_max) {
      throw InvalidInput("column '" + col.name + "' is constant and cannot be modeled");
    }
    const auto noisy = dequantize(col.values, meta.dequant_bound, seed ^ detail::splitmix64(j + 1));
    const Normalized norm = normalize(noisy);
    meta.mean = norm.mean;
    meta.stddev = norm.stddev;
    meta.rebuild_index();
    for (std::size_t r = 0; r < out.row_count; ++r) {
      // Keep each value inside the normalized image of its cell [x, x + b), so a
      // compiled literal box and the dequantized rows agree exactly.
      const double x = col.values[r];
      const double lo = meta.normalize(x);
      const double hi = meta.normalize(x + meta.dequant_bound);
      double z = norm.values[r];
      if (z < lo) z = lo;
      if (z >= hi) z = std::nextafter(hi, lo);
      out.values[r * d + j] = z;
    }
    out.columns.push_back(std::move(meta));
  }
  return out;
}

}  // namespace cdfest
