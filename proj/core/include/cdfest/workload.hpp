#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "cdfest/pipeline.hpp"
#include "cdfest/predicate.hpp"

namespace cdfest {

struct LabeledQuery {
  std::vector<Predicate> predicates;
  std::uint64_t card = 0;
};

struct Workload {
  std::vector<LabeledQuery> queries;
  std::uint64_t seed = 0;
  std::string source_checksum;
};

/// Linear scan with raw-space semantics (= <= < >= > between !=). Categorical
/// columns compare labels; a label absent from the dictionary matches no row
/// for = and every row for !=. Throws UnknownColumn / InvalidInput.
std::uint64_t exact_count(const RawTable& table, std::span<const Predicate> predicates);

/// `n` random conjunctions: k ~ U[1, d] distinct columns; numeric columns draw
/// the operator from {=, <=, >=}, categorical columns use =; literals come from
/// one uniformly drawn row. Each query is labeled with its exact count.
Workload gen_workload(const RawTable& table, std::size_t n, std::uint64_t seed);

/// JSON lines. First line {"header": {"seed", "source_checksum", "queries"}},
/// then one {"id", "predicates", "card"} object per line. A file without the
/// header line is accepted as well.
void write_workload(const Workload& workload, std::ostream& out);
void save_workload(const Workload& workload, const std::filesystem::path& path);
/// Throws ParseError (with the 1-based line number as row).
Workload parse_workload(std::string_view text);
Workload load_workload(const std::filesystem::path& path);

}  // namespace cdfest
