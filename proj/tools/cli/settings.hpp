#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <stdexcept>
#include <string>

#include "cdfest/evaluation.hpp"
#include "cdfest/training.hpp"

namespace cdfest::cli {

/// Bad flags, config keys or values. Maps to exit code 1.
class UsageError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Effective settings keyed "section.key". Values start at the built-in
/// defaults, then a config file, then command-line flags.
///
/// Config file (INI):
///
///     [pipeline]
///     seed = 0                 ; dequantization noise
///
///     [training]
///     mode = data              ; data | query
///     epochs = 1000
///     learning_rate = 0.01
///     components = 1000
///     depth = 2
///     width = 3
///     batch_size = 0           ; 0 = 4096 rows / 256 queries
///     seed = 0
///     discard_threshold = 1e8
///
///     [eval]
///     queries = 500            ; gen-workload size
///     workload_seed = 0
///     warmup = 50
///     repetitions = 1
///     naive_max_dims = 12
///     naive_repetitions = 1
///     naive_max_queries = 20
///     cases = 1000             ; property suites
///     stability_repeats = 2000
///     suite_seed = 0
///     consistency_tolerance = 1e-10
///     bench_rows = 10000       ; bench-dim synthetic table
///     bench_queries = 100
///     bench_epochs = 0
class Settings {
 public:
  Settings();

  static const std::map<std::string, std::string>& defaults();

  /// Throws UsageError for a missing file, a parse failure or an unknown key.
  void load_file(const std::filesystem::path& path);
  /// Throws UsageError for an unknown key.
  void set(const std::string& key, const std::string& value);

  const std::string& get(const std::string& key) const;
  double real(const std::string& key) const;
  std::uint64_t integer(const std::string& key) const;

  TrainConfig training() const;
  BenchOptions bench() const;
  PropertyOptions properties() const;

  const std::map<std::string, std::string>& values() const { return values_; }

 private:
  std::map<std::string, std::string> values_;
};

}  // namespace cdfest::cli
