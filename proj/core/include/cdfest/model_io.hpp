#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "cdfest/join_stats.hpp"
#include "cdfest/mixture_cdf.hpp"

namespace cdfest {

inline constexpr int kModelFormatVersion = 1;

/// Everything persisted in a model file.
struct ModelFile {
  MixtureCdf model;
  std::uint64_t row_count = 0;
  std::string source_checksum;
  /// Effective configuration that produced the model, echoed for provenance.
  std::map<std::string, std::string> config;
  std::optional<JoinGroupStats> join;
};

/// Hash of (m, depth, width, column names/kinds/dictionaries).
std::uint64_t schema_hash(const MixtureCdf& model);

/// JSON document. binary64 values are written in shortest round-trip form, so a
/// save/load cycle is bit-exact.
std::string serialize_model(const ModelFile& file);
/// Throws VersionMismatch, CorruptFile or SchemaMismatch; never returns a
/// partially filled model.
ModelFile parse_model(std::string_view text);

void save_model(const ModelFile& file, const std::filesystem::path& path);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace cdfest
