#include "cdfest/column_meta.hpp"

#include "cdfest/error.hpp"

namespace cdfest {

const char* to_string(ColumnKind kind) {
  return kind == ColumnKind::kNumeric ? "numeric" : "categorical";
}

ColumnKind column_kind_from_string(const std::string& text) {
  if (text == "numeric") return ColumnKind::kNumeric;
  if (text == "categorical") return ColumnKind::kCategorical;
  throw InvalidInput("unknown column kind '" + text + "' (expected numeric|categorical)");
}

std::optional<int> ColumnMeta::code_of(const std::string& label) const {
  if (index_.size() == dictionary.size()) {
    const auto it = index_.find(label);
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }
  for (std::size_t k = 0; k < dictionary.size(); ++k) {
    if (dictionary[k] == label) return static_cast<int>(k + 1);
  }
  return std::nullopt;
}

void ColumnMeta::rebuild_index() {
  index_.clear();
  for (std::size_t k = 0; k < dictionary.size(); ++k) {
    index_.emplace(dictionary[k], static_cast<int>(k + 1));
  }
}

}  // namespace cdfest
