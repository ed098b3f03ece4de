#pragma once

#include <span>
#include <string>
#include <vector>

#include "cdfest/column_meta.hpp"
#include "cdfest/predicate.hpp"
#include "cdfest/query_box.hpp"

namespace cdfest {

/// Half-open raw-space interval [lo, hi); lo / hi may be -inf / +inf.
struct RawInterval {
  double lo;
  double hi;

  bool contains(double x) const { return lo <= x && x < hi; }
};

struct CompileOptions {
  /// Replace a missing lower bound on a constrained column by the column's raw
  /// minimum, so out-of-domain fill values never satisfy a predicate.
  bool restrict_to_domain = false;
};

struct CompiledQuery {
  QueryBox box;                     // normalized space
  std::vector<RawInterval> raw;     // same intervals in raw units
  std::vector<std::string> warnings;
  bool empty = false;               // a literal is absent from a dictionary
};

/// Continuity-corrected compilation of a conjunction. Per column, all predicates
/// are intersected in raw space, then finite ends are z-normalized:
///
///     x = a        -> [a, a + w)
///     a <= x <= b  -> [a, b + w)
///     x <= b       -> (-inf, b + w)
///     x <  b       -> (-inf, b)
///     x >= a       -> [a, +inf)
///     x >  a       -> [a + w, +inf)
///
/// Categorical columns accept only = (and != through compile_union), matched by
/// dictionary code. Throws UnknownColumn, or InvalidInput for categorical ranges,
/// non-numeric literals on numeric columns and != predicates.
CompiledQuery compile(std::span<const Predicate> predicates, std::span<const ColumnMeta> columns,
                      const CompileOptions& options = {});

/// Like compile(), but each x != a expands into the disjoint pair x < a, x > a;
/// the returned boxes are disjoint and their probabilities add.
std::vector<CompiledQuery> compile_union(std::span<const Predicate> predicates,
                                         std::span<const ColumnMeta> columns,
                                         const CompileOptions& options = {});

}  // namespace cdfest
