#include <gtest/gtest.h>

#include <cmath>
#include <sstream>

#include "cdfest/csv.hpp"
#include "cdfest/error.hpp"
#include "cdfest/pipeline.hpp"
#include "cdfest/schema_config.hpp"

namespace cdfest {

TEST(CsvTest, QuotingAndLineEnds) {
  const auto doc = parse_csv("a,b,c\r\n1,\"x, y\",\"say \"\"hi\"\"\"\n2,\"multi\nline\",z\n\n");
  ASSERT_EQ(doc.header, (std::vector<std::string>{"a", "b", "c"}));
  ASSERT_EQ(doc.rows.size(), 2u);
  EXPECT_EQ(doc.rows[0][1], "x, y");
  EXPECT_EQ(doc.rows[0][2], "say \"hi\"");
  EXPECT_EQ(doc.rows[1][1], "multi\nline");
  std::ostringstream out;
  write_csv_row(out, doc.rows[0]);
  EXPECT_EQ(out.str(), "1,\"x, y\",\"say \"\"hi\"\"\"\n");
  EXPECT_EQ(parse_csv(out.str() + "2,3,4\n").rows[0][0], "2");
}

TEST(CsvTest, ErrorsCiteRow) {
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 2u);
  }
  EXPECT_THROW(parse_csv("a,b\n\"1,2\n"), ParseError);
  EXPECT_THROW(parse_csv(""), ParseError);
}

TEST(SchemaConfigTest, ParsesSections) {
  const auto s = SchemaConfig::parse("[columns]\nage = numeric\ncity = categorical\n[precision]\nage = 0.5\n");
  ASSERT_EQ(s.columns.size(), 2u);
  EXPECT_EQ(s.columns[0].first, "age");
  EXPECT_EQ(s.kind_of("city"), ColumnKind::kCategorical);
  EXPECT_FALSE(s.kind_of("zip").has_value());
  EXPECT_DOUBLE_EQ(s.precision_overrides.at("age"), 0.5);
  EXPECT_THROW(SchemaConfig::parse("[columns]\nage = integer\n"), FormatError);
  EXPECT_THROW(SchemaConfig::parse("[colums]\nage = numeric\n"), FormatError);
}

TEST(PipelineTest, CategoriesCodedByFirstOccurrence) {
  const auto schema = SchemaConfig::parse("[columns]\nsubject = categorical\n");
  const auto table = ingest_csv(
      parse_csv("subject\nSciences\nPhilosophy\nArts\nGeography\nHistory\nArts\n"), schema);
  EXPECT_EQ(table.columns[0].values, (std::vector<double>{1, 2, 3, 4, 5, 3}));
  EXPECT_EQ(table.columns[0].text(5), "Arts");
}

TEST(PipelineTest, SuppliedDictionaryKeepsCodes) {
  const auto schema = SchemaConfig::parse("[columns]\nsubject = categorical\n");
  const auto table = ingest_csv(parse_csv("subject\nArts\nMusic\n"), schema,
                                {{"subject", {"Sciences", "Arts"}}});
  EXPECT_EQ(table.columns[0].values, (std::vector<double>{2, 3}));
  EXPECT_EQ(table.columns[0].dictionary.back(), "Music");
}

TEST(PipelineTest, IngestErrors) {
  const auto schema = SchemaConfig::parse("[columns]\nx = numeric\n");
  EXPECT_THROW(ingest_csv(parse_csv("x\n"), schema), ParseError);
  try {
    ingest_csv(parse_csv("x\n1\n2\n3\n4\n5\n6\nabc\n8\n"), schema);
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.row(), 7u);
    EXPECT_NE(std::string(e.what()).find("row 7"), std::string::npos);
  }
  EXPECT_THROW(ingest_csv(parse_csv("y\n1\n"), schema), UnknownColumn);
  EXPECT_THROW(ingest_csv(parse_csv("x,y\n1,2\n"), schema), InvalidInput);
}

TEST(PipelineTest, DequantizeStaysInCell) {
  const std::vector<double> v{1, 2, 3, 4, 5};
  const auto a = dequantize(v, 1.0, 42);
  const auto b = dequantize(v, 1.0, 42);
  EXPECT_EQ(a, b);
  for (std::size_t k = 0; k < v.size(); ++k) {
    EXPECT_GE(a[k], v[k]);
    EXPECT_LT(a[k], v[k] + 1.0);
  }
  EXPECT_NE(dequantize(v, 1.0, 43), a);
  EXPECT_THROW(dequantize(v, 0.0, 1), InvalidInput);
}

TEST(PipelineTest, NormalizeUsesPopulationStddev) {
  const auto n = normalize(std::vector<double>{0.0, 2.0});
  EXPECT_EQ(n.values, (std::vector<double>{-1.0, 1.0}));
  EXPECT_EQ(n.mean, 1.0);
  EXPECT_EQ(n.stddev, 1.0);
  EXPECT_THROW(normalize(std::vector<double>{3.0, 3.0, 3.0}), InvalidInput);

  const std::vector<double> x{0.3, 7.1, -2.2, 5.5, 1.0};
  const auto z = normalize(x);
  double mean = 0.0, var = 0.0;
  for (double v : z.values) mean += v;
  mean /= 5;
  for (double v : z.values) var += (v - mean) * (v - mean);
  EXPECT_NEAR(mean, 0.0, 1e-9);
  EXPECT_NEAR(std::sqrt(var / 5), 1.0, 1e-9);
  for (std::size_t k = 0; k < x.size(); ++k) {
    EXPECT_NEAR(z.values[k] * z.stddev + z.mean, x[k], 1e-12);
  }
}

TEST(PipelineTest, PrecisionInference) {
  EXPECT_EQ(infer_precision(std::vector<double>{5, 1, 3, 3, 9}), 2.0);
  EXPECT_EQ(infer_precision(std::vector<double>{4, 4}), 1.0);
  EXPECT_NEAR(infer_precision(std::vector<double>{0.25, 0.5, 1.0}), 0.25, 1e-15);
}

TEST(PipelineTest, PrepareIsDeterministicAndCellAligned) {
  const auto schema = SchemaConfig::parse("[columns]\na = numeric\nb = categorical\n[precision]\na = 1\n");
  const auto raw = ingest_csv(parse_csv("a,b\n1,x\n4,y\n2,x\n9,z\n4,y\n"), schema);
  const auto p1 = prepare(raw, 7);
  const auto p2 = prepare(raw, 7);
  EXPECT_EQ(p1.values, p2.values);
  EXPECT_EQ(p1.source_checksum, raw.source_checksum);
  EXPECT_FALSE(p1.source_checksum.empty());
  ASSERT_EQ(p1.dims(), 2u);
  const auto& a = p1.columns[0];
  EXPECT_EQ(a.precision, 1.0);
  EXPECT_EQ(a.raw_min, 1.0);
  EXPECT_EQ(a.raw_max, 9.0);
  EXPECT_NEAR(a.normalized_precision(), 1.0 / a.stddev, 1e-15);
  // Each normalized value lies in the cell of its raw literal.
  for (std::size_t r = 0; r < p1.row_count; ++r) {
    const double x = raw.columns[0].values[r];
    EXPECT_GE(p1.row(r)[0], a.normalize(x) - 1e-12);
    EXPECT_LT(p1.row(r)[0], a.normalize(x + a.precision));
  }
  EXPECT_EQ(p1.columns[1].precision, 1.0);
  EXPECT_EQ(p1.columns[1].dictionary, (std::vector<std::string>{"x", "y", "z"}));
}

TEST(PipelineTest, ConstantColumnRejected) {
  const auto schema = SchemaConfig::parse("[columns]\na = numeric\n");
  const auto raw = ingest_csv(parse_csv("a\n3\n3\n"), schema);
  EXPECT_THROW(prepare(raw, 1), InvalidInput);
}

}  // namespace cdfest
