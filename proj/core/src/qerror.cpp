#include "cdfest/qerror.hpp"

#include <algorithm>
#include <cmath>

#include "cdfest/error.hpp"

namespace cdfest {

double qerror(double estimate, double truth) {
  const double e = std::max(estimate, 1.0);
  const double t = std::max(truth, 1.0);
  return std::max(e / t, t / e);
}

double nearest_rank(std::vector<double> values, double q) {
  if (values.empty()) throw InvalidInput("percentile of an empty sample");
  if (!(q > 0.0 && q <= 100.0)) throw InvalidInput("percentile must be in (0, 100]");
  std::sort(values.begin(), values.end());
  const double rank = std::ceil(q * static_cast<double>(values.size()) / 100.0);
  const std::size_t k = static_cast<std::size_t>(std::max(rank, 1.0)) - 1;
  return values[std::min(k, values.size() - 1)];
}

}  // namespace cdfest
