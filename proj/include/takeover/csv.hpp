#pragma once

#include <cstddef>
#include <istream>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace takeover {

/// Raised for unreadable or malformed companion files (CSV tables, lists).
class InputError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// RFC-4180 style reader: comma separated, double-quote escaping, quoted
/// fields may span lines. CR before LF is dropped.
class CsvReader {
 public:
  explicit CsvReader(std::istream& in) : in_(in) {}

  /// Reads the next record. Returns false at end of input. Blank lines are
  /// skipped.
  bool next(std::vector<std::string>& row);

  /// Reads the header row and checks that it starts with `expected`
  /// (case-sensitive, surrounding whitespace ignored). Extra trailing columns
  /// are permitted. Throws InputError naming `source` on mismatch.
  std::vector<std::string> expect_header(const std::vector<std::string_view>& expected,
                                         std::string_view source);

  /// 1-based line number where the most recently returned record started.
  std::size_t line() const { return record_line_; }

 private:
  std::istream& in_;
  std::size_t line_ = 0;
  std::size_t record_line_ = 0;
};

/// Quotes a field if it contains a comma, quote, CR or LF.
std::string csv_escape(std::string_view field);

/// Joins fields with commas, escaping each.
std::string csv_join(const std::vector<std::string>& fields);

std::string_view trim(std::string_view s);
std::string to_lower(std::string_view s);

}  // namespace takeover
