#include "cdfest/instrumentation.hpp"

namespace cdfest::instrumentation {

Counters& counters() {
  thread_local Counters c;
  return c;
}

void reset() { counters() = Counters{}; }

}  // namespace cdfest::instrumentation
