#pragma once

#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

namespace cdfest {

enum class ColumnKind { kNumeric, kCategorical };

const char* to_string(ColumnKind kind);
ColumnKind column_kind_from_string(const std::string& text);

/// Per-column preprocessing statistics, persisted with a model so inference needs
/// no re-scan of the source data.
struct ColumnMeta {
  std::string name;
  ColumnKind kind = ColumnKind::kNumeric;
  /// Category labels in first-occurrence order; label k has code k + 1.
  std::vector<std::string> dictionary;
  double precision = 1.0;       // w, raw units
  double dequant_bound = 1.0;   // b, raw units
  double mean = 0.0;            // mu
  double stddev = 1.0;          // delta (population)
  double raw_min = 0.0;
  double raw_max = 0.0;

  double normalize(double raw) const { return (raw - mean) / stddev; }
  double denormalize(double z) const { return z * stddev + mean; }
  double normalized_precision() const { return precision / stddev; }

  std::optional<int> code_of(const std::string& label) const;
  void rebuild_index();

 private:
  std::unordered_map<std::string, int> index_;
};

}  // namespace cdfest
