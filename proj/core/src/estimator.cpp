#include "cdfest/estimator.hpp"

#include <algorithm>
#include <cmath>

#include "cdfest/error.hpp"

namespace cdfest {

Estimator::Estimator(const MixtureCdf& model, std::uint64_t row_count)
    : model_(model), row_count_(row_count) {
  if (row_count_ == 0) throw InvalidInput("estimator needs |T| >= 1");
}

double Estimator::selectivity(const QueryBox& box) const { return model_.box_probability(box); }

double Estimator::selectivity(std::span<const Predicate> predicates) const {
  const auto boxes = compile_union(predicates, model_.columns());
  double total = 0.0;
  for (const auto& q : boxes) total += q.empty ? 0.0 : model_.box_probability(q.box);
  return std::clamp(total, 0.0, 1.0);
}

CardinalityEstimate scale_selectivity(double selectivity, std::uint64_t row_count) {
  CardinalityEstimate e;
  e.selectivity = selectivity;
  e.raw = selectivity * static_cast<double>(row_count);
  e.rounded = std::round(e.raw);
  e.floored = std::max(e.rounded, 1.0);
  return e;
}

CardinalityEstimate Estimator::cardinality(std::span<const Predicate> predicates) const {
  const auto boxes = compile_union(predicates, model_.columns());
  double total = 0.0;
  std::vector<std::string> warnings;
  for (const auto& q : boxes) {
    total += q.empty ? 0.0 : model_.box_probability(q.box);
    for (const auto& w : q.warnings) {
      if (std::find(warnings.begin(), warnings.end(), w) == warnings.end()) warnings.push_back(w);
    }
  }
  auto e = scale_selectivity(std::clamp(total, 0.0, 1.0), row_count_);
  e.warnings = std::move(warnings);
  return e;
}

}  // namespace cdfest
