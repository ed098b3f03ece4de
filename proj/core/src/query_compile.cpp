#include "cdfest/query_compile.hpp"

#include <algorithm>
#include <limits>

#include "cdfest/error.hpp"

namespace cdfest {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::size_t find_column(std::span<const ColumnMeta> columns, const std::string& name) {
  for (std::size_t j = 0; j < columns.size(); ++j) {
    if (columns[j].name == name) return j;
  }
  throw UnknownColumn(name);
}

double numeric_value(const Literal& l, const ColumnMeta& c) {
  if (!l.number) {
    throw InvalidInput("column '" + c.name + "' is numeric but literal '" + l.text +
                       "' is not a number");
  }
  return *l.number;
}

struct ColumnState {
  RawInterval iv{-kInf, kInf};
  bool constrained = false;
  bool empty = false;
};

// Raw-space interval of one predicate (never called for !=).
RawInterval predicate_interval(const Predicate& p, const ColumnMeta& c, std::vector<std::string>& warnings,
                               bool& empty) {
  if (c.kind == ColumnKind::kCategorical) {
    if (p.op != CompareOp::kEq) {
      throw InvalidInput("categorical column '" + c.name + "' supports only equality predicates");
    }
    const auto code = c.code_of(p.value.text);
    if (!code) {
      warnings.push_back("literal '" + p.value.text + "' is not in the dictionary of column '" +
                         c.name + "'; the predicate selects nothing");
      empty = true;
      return {kInf, -kInf};
    }
    return {static_cast<double>(*code), static_cast<double>(*code) + c.precision};
  }
  const double w = c.precision;
  const double a = numeric_value(p.value, c);
  switch (p.op) {
    case CompareOp::kEq: return {a, a + w};
    case CompareOp::kLe: return {-kInf, a + w};
    case CompareOp::kLt: return {-kInf, a};
    case CompareOp::kGe: return {a, kInf};
    case CompareOp::kGt: return {a + w, kInf};
    case CompareOp::kBetween: return {a, numeric_value(p.high, c) + w};
    case CompareOp::kNe: break;
  }
  throw InvalidInput("!= on column '" + c.name + "' needs compile_union");
}

Endpoint to_normalized(double raw, const ColumnMeta& c) {
  if (raw == -kInf) return Endpoint::neg_inf();
  if (raw == kInf) return Endpoint::pos_inf();
  return Endpoint::finite(c.normalize(raw));
}

}  // namespace

CompiledQuery compile(std::span<const Predicate> predicates, std::span<const ColumnMeta> columns,
                      const CompileOptions& options) {
  CompiledQuery out;
  std::vector<ColumnState> state(columns.size());
  for (const Predicate& p : predicates) {
    const std::size_t j = find_column(columns, p.column);
    const ColumnMeta& c = columns[j];
    bool empty = false;
    const RawInterval iv = predicate_interval(p, c, out.warnings, empty);
    ColumnState& s = state[j];
    s.constrained = true;
    s.empty = s.empty || empty;
    s.iv.lo = std::max(s.iv.lo, iv.lo);
    s.iv.hi = std::min(s.iv.hi, iv.hi);
  }
  out.box = QueryBox(columns.size());
  out.raw.resize(columns.size());
  for (std::size_t j = 0; j < columns.size(); ++j) {
    ColumnState& s = state[j];
    if (s.empty) {
      out.empty = true;
      out.raw[j] = {kInf, -kInf};
      out.box[j] = {Endpoint::pos_inf(), Endpoint::neg_inf()};
      continue;
    }
    if (options.restrict_to_domain && s.constrained && s.iv.lo == -kInf) {
      s.iv.lo = columns[j].raw_min;
    }
    out.raw[j] = s.iv;
    out.box[j] = {to_normalized(s.iv.lo, columns[j]), to_normalized(s.iv.hi, columns[j])};
  }
  return out;
}

std::vector<CompiledQuery> compile_union(std::span<const Predicate> predicates,
                                         std::span<const ColumnMeta> columns,
                                         const CompileOptions& options) {
  std::vector<Predicate> plain;
  std::vector<const Predicate*> negated;
  for (const Predicate& p : predicates) {
    if (p.op == CompareOp::kNe) {
      negated.push_back(&p);
    } else {
      plain.push_back(p);
    }
  }
  std::vector<CompiledQuery> out{compile(plain, columns, options)};
  // x != a splits every box into x < a and x > a (continuity corrected), which
  // are disjoint, so the branch probabilities add.
  for (const Predicate* p : negated) {
    const std::size_t j = find_column(columns, p->column);
    const ColumnMeta& c = columns[j];
    double a;
    if (c.kind == ColumnKind::kCategorical) {
      const auto code = c.code_of(p->value.text);
      if (!code) continue;  // every row differs from an unknown label
      a = *code;
    } else {
      a = numeric_value(p->value, c);
    }
    const RawInterval below{options.restrict_to_domain ? c.raw_min : -kInf, a};
    const RawInterval above{a + c.precision, kInf};
    std::vector<CompiledQuery> next;
    for (const CompiledQuery& q : out) {
      for (const RawInterval& part : {below, above}) {
        CompiledQuery branch = q;
        RawInterval& iv = branch.raw[j];
        if (!branch.empty) {
          iv.lo = std::max(iv.lo, part.lo);
          iv.hi = std::min(iv.hi, part.hi);
          branch.box[j] = {to_normalized(iv.lo, c), to_normalized(iv.hi, c)};
        }
        next.push_back(std::move(branch));
      }
    }
    out = std::move(next);
  }
  return out;
}

}  // namespace cdfest
