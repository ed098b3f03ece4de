#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <vector>

#include "cdfest/column_meta.hpp"
#include "cdfest/monotone_net.hpp"
#include "cdfest/query_box.hpp"

namespace cdfest {

/// Multivariate CDF F(x) = sum_i a_i prod_j phi_ij(x_j): a mixture of `m` product
/// distributions over `d` columns, each factor a MonotoneNet.
///
/// Raw network parameters are stored component-major: net (i, j) occupies
/// [(i * d + j) * P, (i * d + j + 1) * P) with P = shape.parameter_count().
/// Mixture weights are the softmax of free logits.
///
/// Evaluation methods are const and thread-safe. Mutation (training) goes through
/// `raw_logits()` / `raw_parameters()` followed by `refresh()`.
class MixtureCdf {
 public:
  static constexpr std::size_t kNaiveMaxDims = 25;

  MixtureCdf() = default;
  /// All raw parameters zero.
  MixtureCdf(std::size_t components, NetShape shape, std::vector<ColumnMeta> columns);

  /// Fresh model drawn from the default initializer (see training::initialize).
  static MixtureCdf initialized(std::size_t components, NetShape shape,
                                std::vector<ColumnMeta> columns, std::uint64_t seed);

  std::size_t components() const { return components_; }
  std::size_t dims() const { return columns_.size(); }
  const NetShape& net_shape() const { return shape_; }
  std::size_t net_parameter_count() const { return net_params_; }

  const std::vector<ColumnMeta>& columns() const { return columns_; }
  std::vector<ColumnMeta>& mutable_columns() { return columns_; }
  std::size_t column_index(const std::string& name) const;  // throws UnknownColumn

  std::span<const double> raw_logits() const { return logits_; }
  std::span<double> raw_logits() { return logits_; }
  std::span<const double> raw_parameters() const { return raw_; }
  std::span<double> raw_parameters() { return raw_; }
  /// Recomputes weights and effective parameters from the raw arrays.
  void refresh();

  std::span<const double> weights() const { return weights_; }
  std::span<const double> log_weights() const { return log_weights_; }
  MonotoneNet net(std::size_t component, std::size_t column) const;
  std::span<const double> effective_parameters(std::size_t component, std::size_t column) const;

  /// F(point). Throws InvalidInput on dimension mismatch.
  double cdf(std::span<const Endpoint> point) const;

  /// Inclusion-exclusion over all 2^d corners of the box (reference path).
  /// Throws CapacityError when d > kNaiveMaxDims.
  double box_probability_naive(const QueryBox& box) const;

  /// Merged evaluation: sum_i a_i prod_j max(phi_ij(u_j) - phi_ij(l_j), 0), clamped
  /// to [0, 1]. Exactly one phi evaluation per (component, column, endpoint).
  double box_probability(const QueryBox& box) const;

  /// log sum_i a_i prod_j phi_ij'(x_j), evaluated with log-sum-exp.
  double log_density(std::span<const double> point) const;

  /// prod[i] = prod_c max(phi_i,columns[c](upper) - phi_i,columns[c](lower), 0), with
  /// box[c] the interval of model column columns[c]. `prod` has one slot per
  /// component. Counts phi calls like box_probability.
  void interval_products(const QueryBox& box, std::span<const std::size_t> columns,
                         std::span<double> prod) const;

 private:
  std::size_t components_ = 0;
  NetShape shape_;
  std::size_t net_params_ = 0;
  std::vector<ColumnMeta> columns_;
  std::vector<double> logits_;
  std::vector<double> raw_;
  std::vector<double> weights_;
  std::vector<double> log_weights_;
  std::vector<double> effective_;
  // effective_ transposed to [column][parameter][component] for evaluating all
  // components of one column in a single kernel call.
  std::vector<double> by_column_;
};

/// Observed key tuples X1 = x1 (raw key values, one per key column) with their
/// probabilities Pr(X1 = x1).
struct KeyDomain {
  std::vector<std::size_t> columns;
  std::vector<std::vector<double>> tuples;
  std::vector<double> probabilities;
};

using KeyWeightFn = std::function<double(std::span<const double> key_tuple)>;

/// E[ 1{x2 in box} * W(x1) ] for a mixture model, with X1 the key columns of
/// `domain` and X2 the remaining columns (in increasing column order, dimension
/// d - k, described by `box`). Key densities are evaluated at the normalized
/// midpoint of each key's dequantization cell.
double conditional_expectation(const MixtureCdf& model, const KeyDomain& domain,
                               const KeyWeightFn& weight, const QueryBox& box);

/// Same as above with the per-tuple weights precomputed (weights[t] = W(tuples[t])).
double conditional_expectation(const MixtureCdf& model, const KeyDomain& domain,
                               std::span<const double> weights, const QueryBox& box);

/// Columns not in `key_columns`, ascending.
std::vector<std::size_t> complement_columns(std::size_t dims,
                                            std::span<const std::size_t> key_columns);

/// Restricts a d-dimensional box to the listed columns.
QueryBox project_box(const QueryBox& box, std::span<const std::size_t> columns);

}  // namespace cdfest
