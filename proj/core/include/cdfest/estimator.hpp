#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "cdfest/mixture_cdf.hpp"
#include "cdfest/predicate.hpp"
#include "cdfest/query_compile.hpp"

namespace cdfest {

struct CardinalityEstimate {
  double selectivity = 0.0;
  double raw = 0.0;      // selectivity * |T|
  double rounded = 0.0;  // round(raw)
  double floored = 1.0;  // max(rounded, 1), the value used for Q-error
  std::vector<std::string> warnings;
};

/// Single-table estimation against an immutable model. Thread-safe.
class Estimator {
 public:
  Estimator(const MixtureCdf& model, std::uint64_t row_count);

  const MixtureCdf& model() const { return model_; }
  std::uint64_t row_count() const { return row_count_; }

  /// box probability of the compiled conjunction; != predicates contribute the
  /// sum of their disjoint sub-boxes. Throws compile errors.
  double selectivity(std::span<const Predicate> predicates) const;
  double selectivity(const QueryBox& box) const;

  CardinalityEstimate cardinality(std::span<const Predicate> predicates) const;

 private:
  const MixtureCdf& model_;
  std::uint64_t row_count_;
};

/// Scales a selectivity by |T| with rounding and the floor-at-1 rule.
CardinalityEstimate scale_selectivity(double selectivity, std::uint64_t row_count);

}  // namespace cdfest
