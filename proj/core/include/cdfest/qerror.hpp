#pragma once

#include <span>
#include <vector>

namespace cdfest {

/// max(estimate / truth, truth / estimate) with both sides floored at 1.
double qerror(double estimate, double truth);

/// Nearest-rank percentile (q in (0, 100]) of an unsorted sample; the sample
/// must be non-empty.
double nearest_rank(std::vector<double> values, double q);

}  // namespace cdfest
