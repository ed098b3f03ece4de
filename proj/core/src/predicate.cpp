#include "cdfest/predicate.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <cmath>

#include "cdfest/error.hpp"
#include "predicate_json.hpp"

namespace cdfest {

using nlohmann::json;

namespace {

std::optional<double> parse_number(std::string_view s) {
  if (s.empty()) return std::nullopt;
  if (s.front() == '+') s.remove_prefix(1);
  double v = 0.0;
  const auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  if (res.ec != std::errc() || res.ptr != s.data() + s.size() || !std::isfinite(v)) {
    return std::nullopt;
  }
  return v;
}

std::string lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  return out;
}

Literal literal_from_json(const json& j, const char* what) {
  if (j.is_number()) {
    const double v = j.get<double>();
    if (!std::isfinite(v)) throw ParseError(std::string("non-finite ") + what);
    return Literal::of(v);
  }
  if (j.is_string()) return Literal::of(j.get<std::string>());
  throw ParseError(std::string(what) + " must be a number or a string");
}

json literal_to_json(const Literal& l) {
  // A literal written as a number goes back out as a number.
  if (l.number && Literal::of(*l.number).text == l.text) return *l.number;
  return l.text;
}

}  // namespace

const char* to_string(CompareOp op) {
  switch (op) {
    case CompareOp::kEq: return "=";
    case CompareOp::kNe: return "!=";
    case CompareOp::kLt: return "<";
    case CompareOp::kLe: return "<=";
    case CompareOp::kGt: return ">";
    case CompareOp::kGe: return ">=";
    case CompareOp::kBetween: return "between";
  }
  return "?";
}

CompareOp compare_op_from_string(std::string_view text) {
  const std::string t = lower(text);
  if (t == "=" || t == "==" || t == "eq") return CompareOp::kEq;
  if (t == "!=" || t == "<>" || t == "ne") return CompareOp::kNe;
  if (t == "<" || t == "lt") return CompareOp::kLt;
  if (t == "<=" || t == "le") return CompareOp::kLe;
  if (t == ">" || t == "gt") return CompareOp::kGt;
  if (t == ">=" || t == "ge") return CompareOp::kGe;
  if (t == "between") return CompareOp::kBetween;
  throw ParseError("unknown comparison operator '" + std::string(text) + "'");
}

Literal Literal::of(double value) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, value);
  return Literal{std::string(buf, res.ptr), value};
}

Literal Literal::of(std::string text) {
  Literal l;
  l.number = parse_number(text);
  l.text = std::move(text);
  return l;
}

json predicates_to_json(const std::vector<Predicate>& predicates) {
  json arr = json::array();
  for (const auto& p : predicates) {
    json j{{"col", p.column}, {"op", to_string(p.op)}};
    if (p.op == CompareOp::kBetween) {
      j["lo"] = literal_to_json(p.value);
      j["hi"] = literal_to_json(p.high);
    } else {
      j["literal"] = literal_to_json(p.value);
    }
    arr.push_back(std::move(j));
  }
  return arr;
}

std::vector<Predicate> predicates_from_json(const json& arr) {
  if (!arr.is_array()) throw ParseError("'predicates' must be an array");
  std::vector<Predicate> out;
  for (const auto& p : arr) {
    if (!p.is_object() || !p.contains("col") || !p.at("col").is_string() || !p.contains("op") ||
        !p.at("op").is_string()) {
      throw ParseError("each predicate needs string fields 'col' and 'op'");
    }
    Predicate pred;
    pred.column = p.at("col").get<std::string>();
    pred.op = compare_op_from_string(p.at("op").get<std::string>());
    if (pred.op == CompareOp::kBetween) {
      if (!p.contains("lo") || !p.contains("hi")) throw ParseError("between needs 'lo' and 'hi'");
      pred.value = literal_from_json(p.at("lo"), "lo");
      pred.high = literal_from_json(p.at("hi"), "hi");
    } else {
      if (!p.contains("literal")) throw ParseError("predicate on '" + pred.column + "' has no literal");
      pred.value = literal_from_json(p.at("literal"), "literal");
    }
    out.push_back(std::move(pred));
  }
  return out;
}

std::vector<Predicate> parse_query_json(std::string_view text) {
  json doc;
  try {
    doc = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError(std::string("query JSON: ") + e.what());
  }
  if (!doc.is_object() || !doc.contains("predicates")) {
    throw ParseError("query JSON must be an object with a 'predicates' array");
  }
  return predicates_from_json(doc.at("predicates"));
}

std::string query_to_json(const std::vector<Predicate>& predicates) {
  return json{{"predicates", predicates_to_json(predicates)}}.dump();
}

namespace {

struct Token {
  enum Kind { kWord, kQuoted, kOp } kind;
  std::string text;
};

std::vector<Token> tokenize(std::string_view s) {
  std::vector<Token> out;
  std::size_t i = 0;
  while (i < s.size()) {
    const char c = s[i];
    if (std::isspace(static_cast<unsigned char>(c))) {
      ++i;
    } else if (c == '\'' || c == '"') {
      std::string text;
      std::size_t k = i + 1;
      for (;;) {
        if (k >= s.size()) throw ParseError("unterminated quoted literal in query");
        if (s[k] == c) {
          if (k + 1 < s.size() && s[k + 1] == c) {
            text += c;
            k += 2;
            continue;
          }
          break;
        }
        text += s[k++];
      }
      out.push_back({Token::kQuoted, std::move(text)});
      i = k + 1;
    } else if (c == '<' || c == '>' || c == '=' || c == '!') {
      std::size_t k = i + 1;
      if (k < s.size() && (s[k] == '=' || (c == '<' && s[k] == '>'))) ++k;
      out.push_back({Token::kOp, std::string(s.substr(i, k - i))});
      i = k;
    } else {
      std::size_t k = i;
      while (k < s.size() && !std::isspace(static_cast<unsigned char>(s[k])) && s[k] != '<' &&
             s[k] != '>' && s[k] != '=' && s[k] != '!' && s[k] != '\'' && s[k] != '"') {
        ++k;
      }
      out.push_back({Token::kWord, std::string(s.substr(i, k - i))});
      i = k;
    }
  }
  return out;
}

}  // namespace

std::vector<Predicate> parse_query_text(std::string_view text) {
  const auto tokens = tokenize(text);
  std::vector<Predicate> out;
  std::size_t i = 0;
  auto value_at = [&](std::size_t k) -> Literal {
    if (k >= tokens.size() || tokens[k].kind == Token::kOp) {
      throw ParseError("expected a literal in query '" + std::string(text) + "'");
    }
    return Literal::of(tokens[k].text);
  };
  auto is_and = [&](std::size_t k) {
    return k < tokens.size() && tokens[k].kind == Token::kWord && lower(tokens[k].text) == "and";
  };
  while (i < tokens.size()) {
    if (tokens[i].kind != Token::kWord) throw ParseError("expected a column name in query");
    Predicate p;
    p.column = tokens[i].text;
    if (i + 1 >= tokens.size()) throw ParseError("predicate on '" + p.column + "' has no operator");
    const Token& op = tokens[i + 1];
    if (op.kind == Token::kQuoted) throw ParseError("expected an operator after '" + p.column + "'");
    p.op = compare_op_from_string(op.text);
    if (p.op == CompareOp::kBetween) {
      p.value = value_at(i + 2);
      if (!is_and(i + 3)) throw ParseError("BETWEEN needs 'lo AND hi'");
      p.high = value_at(i + 4);
      i += 5;
    } else {
      p.value = value_at(i + 2);
      i += 3;
    }
    out.push_back(std::move(p));
    if (i < tokens.size()) {
      if (!is_and(i)) throw ParseError("expected AND between predicates");
      ++i;
      if (i >= tokens.size()) throw ParseError("dangling AND at end of query");
    }
  }
  return out;
}

std::vector<Predicate> parse_query(std::string_view text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first != std::string_view::npos && text[first] == '{') return parse_query_json(text);
  return parse_query_text(text);
}

}  // namespace cdfest
