#pragma once

#include <cstdint>

namespace cdfest::instrumentation {

/// Per-thread evaluation counters.
///
/// `phi_calls` counts univariate CDF evaluations requested by the mixture
/// (sentinel endpoints included); `net_passes` counts actual forward passes
/// through a scalar network (finite endpoints only).
struct Counters {
  std::uint64_t phi_calls = 0;
  std::uint64_t net_passes = 0;
};

Counters& counters();
void reset();

}  // namespace cdfest::instrumentation
