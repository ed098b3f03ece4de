#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "cdfest/query_box.hpp"

namespace cdfest {

/// Architecture of one univariate CDF network: `depth` hidden layers of `width`
/// units, then a single logistic output unit.
///
/// Parameter layout (identical for raw and effective arrays):
///   hidden layer 0:      weight[width], bias[width], gain[width]
///   hidden layer k >= 1: weight[width * width] (row-major, out x in), bias[width], gain[width]
///   output:              weight[width], bias
///
/// Raw weights map to effective weights through softplus (strictly positive), raw
/// gains through tanh (gain > -1), biases are used as is. Each hidden unit applies
/// t -> t + gain * tanh(t), which is strictly increasing and unbounded, so the
/// output phi(x) = logistic(z(x)) is a strictly increasing map onto (0, 1).
struct NetShape {
  static constexpr int kMaxDepth = 6;
  static constexpr int kMaxWidth = 16;

  int depth = 2;
  int width = 3;

  std::size_t parameter_count() const;
  void validate() const;

  friend bool operator==(const NetShape&, const NetShape&) = default;
};

enum class ParamRole : unsigned char { kWeight, kBias, kGain };

/// Role of every parameter slot, in layout order.
std::vector<ParamRole> parameter_roles(const NetShape& shape);

/// raw -> effective reparameterization.
void to_effective(const NetShape& shape, std::span<const double> raw, std::span<double> effective);

/// Raw value whose softplus equals `weight` (used for initialization and tests).
double raw_for_weight(double weight);

/// Non-owning view of one scalar network's effective parameters.
class MonotoneNet {
 public:
  MonotoneNet(NetShape shape, std::span<const double> effective);

  const NetShape& shape() const { return shape_; }
  std::span<const double> effective() const { return effective_; }

  /// Pre-squash output z(x); phi(x) = logistic(z(x)).
  double logit(double x) const;

  /// Univariate CDF. Sentinels return exactly 0 / 1 without evaluating layers.
  double phi(Endpoint x) const;
  /// Throws InvalidInput on NaN; +-inf are treated as sentinels.
  double phi(double x) const;

  /// d phi / dx. Throws InvalidInput for non-finite x.
  double density(double x) const;
  double log_density(double x) const;

 private:
  NetShape shape_;
  std::span<const double> effective_;
};

}  // namespace cdfest
