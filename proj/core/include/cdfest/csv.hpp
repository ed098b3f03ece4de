#pragma once

#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace cdfest {

struct CsvDocument {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC 4180 style: comma separated, fields optionally double-quoted, "" escapes a
/// quote, quoted fields may span lines, CRLF or LF line ends. Throws ParseError.
CsvDocument parse_csv(std::string_view text);
CsvDocument read_csv(const std::filesystem::path& path);

/// Quotes a field when it contains a comma, quote or line break.
std::string csv_escape(std::string_view field);
void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

}  // namespace cdfest
