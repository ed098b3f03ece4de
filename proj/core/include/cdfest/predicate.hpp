#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace cdfest {

enum class CompareOp { kEq, kNe, kLt, kLe, kGt, kGe, kBetween };

/// "=", "!=", "<", "<=", ">", ">=", "between".
const char* to_string(CompareOp op);
/// Accepts the symbols above and eq/ne/lt/le/gt/ge/between (case-insensitive).
/// Throws ParseError.
CompareOp compare_op_from_string(std::string_view text);

/// A literal as written by the user. `number` is set when the text parses as a
/// finite number.
struct Literal {
  std::string text;
  std::optional<double> number;

  static Literal of(double value);
  static Literal of(std::string text);

  friend bool operator==(const Literal&, const Literal&) = default;
};

/// column OP value, or column BETWEEN value AND high (both ends inclusive).
struct Predicate {
  std::string column;
  CompareOp op = CompareOp::kEq;
  Literal value;
  Literal high;  // between only

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

/// {"predicates": [{"col": "age", "op": "<=", "literal": 30},
///                 {"col": "x", "op": "between", "lo": 1, "hi": 5}]}
/// Throws ParseError.
std::vector<Predicate> parse_query_json(std::string_view text);
/// Predicate list as the JSON document above.
std::string query_to_json(const std::vector<Predicate>& predicates);

/// `age <= 30 AND city = 'Paris' AND x BETWEEN 1 AND 5`. Values may be quoted
/// with ' or ". An empty string is the empty conjunction. Throws ParseError.
std::vector<Predicate> parse_query_text(std::string_view text);

/// Picks the JSON or text parser by the first non-blank character.
std::vector<Predicate> parse_query(std::string_view text);

}  // namespace cdfest
