#pragma once

#include <iosfwd>
#include <string>
#include <vector>

namespace cdfest::cli {

enum ExitCode : int {
  kOk = 0,
  kUsage = 1,
  kDataError = 2,
  kPropertyFailure = 3,
};

/// Runs one subcommand (ingest, train, estimate, gen-workload, flatten, eval,
/// bench-dim, check). `args` excludes the program name. Results go to `out`,
/// diagnostics to `err`.
int run_command(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace cdfest::cli
