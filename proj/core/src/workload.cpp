#include "cdfest/workload.hpp"

#include <fstream>
#include <ostream>
#include <sstream>

#include "cdfest/error.hpp"
#include "predicate_json.hpp"
#include "random_util.hpp"

namespace cdfest {

using nlohmann::json;

namespace {

struct ColumnTest {
  const RawColumn* column;
  CompareOp op;
  double a;
  double b;
  bool never = false;   // = on an unknown label
  bool always = false;  // != on an unknown label
};

ColumnTest column_test(const RawTable& table, const Predicate& p) {
  const RawColumn& col = table.columns[table.column_index(p.column)];
  ColumnTest t{&col, p.op, 0.0, 0.0};
  if (col.kind == ColumnKind::kCategorical) {
    if (p.op != CompareOp::kEq && p.op != CompareOp::kNe) {
      throw InvalidInput("categorical column '" + col.name + "' supports only = and !=");
    }
    double code = 0.0;
    bool found = false;
    for (std::size_t k = 0; k < col.dictionary.size(); ++k) {
      if (col.dictionary[k] == p.value.text) {
        code = static_cast<double>(k + 1);
        found = true;
        break;
      }
    }
    t.a = code;
    t.never = !found && p.op == CompareOp::kEq;
    t.always = !found && p.op == CompareOp::kNe;
    return t;
  }
  if (!p.value.number) {
    throw InvalidInput("column '" + col.name + "' is numeric but literal '" + p.value.text +
                       "' is not a number");
  }
  t.a = *p.value.number;
  if (p.op == CompareOp::kBetween) {
    if (!p.high.number) throw InvalidInput("between upper literal is not a number");
    t.b = *p.high.number;
  }
  return t;
}

bool passes(const ColumnTest& t, double x) {
  switch (t.op) {
    case CompareOp::kEq: return x == t.a;
    case CompareOp::kNe: return x != t.a;
    case CompareOp::kLt: return x < t.a;
    case CompareOp::kLe: return x <= t.a;
    case CompareOp::kGt: return x > t.a;
    case CompareOp::kGe: return x >= t.a;
    case CompareOp::kBetween: return t.a <= x && x <= t.b;
  }
  return false;
}

}  // namespace

std::uint64_t exact_count(const RawTable& table, std::span<const Predicate> predicates) {
  std::vector<ColumnTest> tests;
  for (const auto& p : predicates) {
    tests.push_back(column_test(table, p));
    if (tests.back().never) return 0;
    if (tests.back().always) tests.pop_back();
  }
  std::uint64_t count = 0;
  const std::size_t n = table.rows();
  for (std::size_t r = 0; r < n; ++r) {
    bool ok = true;
    for (const auto& t : tests) {
      if (!passes(t, t.column->values[r])) {
        ok = false;
        break;
      }
    }
    count += ok ? 1 : 0;
  }
  return count;
}

Workload gen_workload(const RawTable& table, std::size_t n, std::uint64_t seed) {
  if (n == 0) throw InvalidInput("workload size must be >= 1");
  const std::size_t d = table.dims();
  const std::size_t rows = table.rows();
  if (d == 0 || rows == 0) throw InvalidInput("cannot generate a workload over an empty table");
  Workload w;
  w.seed = seed;
  w.source_checksum = table.source_checksum;
  std::mt19937_64 rng(seed);
  std::vector<std::size_t> order(d);
  static constexpr CompareOp kNumericOps[] = {CompareOp::kEq, CompareOp::kLe, CompareOp::kGe};
  for (std::size_t q = 0; q < n; ++q) {
    const std::size_t k = 1 + detail::uniform_index(rng, d);
    for (std::size_t j = 0; j < d; ++j) order[j] = j;
    // Partial Fisher-Yates: the first k slots are k distinct columns.
    for (std::size_t i = 0; i < k; ++i) std::swap(order[i], order[i + detail::uniform_index(rng, d - i)]);
    const std::size_t row = detail::uniform_index(rng, rows);
    LabeledQuery lq;
    for (std::size_t i = 0; i < k; ++i) {
      const RawColumn& col = table.columns[order[i]];
      Predicate p;
      p.column = col.name;
      if (col.kind == ColumnKind::kCategorical) {
        p.op = CompareOp::kEq;
        p.value = Literal::of(col.text(row));
      } else {
        p.op = kNumericOps[detail::uniform_index(rng, 3)];
        p.value = Literal::of(col.values[row]);
      }
      lq.predicates.push_back(std::move(p));
    }
    lq.card = exact_count(table, lq.predicates);
    w.queries.push_back(std::move(lq));
  }
  return w;
}

void write_workload(const Workload& workload, std::ostream& out) {
  out << json{{"header",
               {{"seed", workload.seed},
                {"source_checksum", workload.source_checksum},
                {"queries", workload.queries.size()}}}}
             .dump()
      << '\n';
  for (std::size_t q = 0; q < workload.queries.size(); ++q) {
    const auto& lq = workload.queries[q];
    out << json{{"id", q}, {"predicates", predicates_to_json(lq.predicates)}, {"card", lq.card}}.dump()
        << '\n';
  }
}

void save_workload(const Workload& workload, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write workload file '" + path.string() + "'");
  write_workload(workload, out);
  if (!out) throw Error("failed writing workload file '" + path.string() + "'");
}

Workload parse_workload(std::string_view text) {
  Workload w;
  std::size_t line_no = 0;
  std::size_t pos = 0;
  while (pos < text.size()) {
    std::size_t end = text.find('\n', pos);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.find_first_not_of(" \t") == std::string_view::npos) continue;
    json j;
    try {
      j = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("workload line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
    try {
      if (j.contains("header")) {
        const json& h = j.at("header");
        if (h.contains("seed")) w.seed = h.at("seed").get<std::uint64_t>();
        if (h.contains("source_checksum")) w.source_checksum = h.at("source_checksum").get<std::string>();
        continue;
      }
      if (!j.contains("predicates")) throw ParseError("missing 'predicates'");
      LabeledQuery lq;
      lq.predicates = predicates_from_json(j.at("predicates"));
      if (j.contains("card")) lq.card = j.at("card").get<std::uint64_t>();
      w.queries.push_back(std::move(lq));
    } catch (const ParseError& e) {
      throw ParseError("workload line " + std::to_string(line_no) + ": " + e.what(), line_no);
    } catch (const json::exception& e) {
      throw ParseError("workload line " + std::to_string(line_no) + ": " + e.what(), line_no);
    }
  }
  return w;
}

Workload load_workload(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open workload file '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_workload(ss.str());
}

}  // namespace cdfest
