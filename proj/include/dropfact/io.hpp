#pragma once

#include <filesystem>
#include <stdexcept>
#include <iosfwd>
#include <string>
#include <string_view>

#include "dropfact/matrix.hpp"

namespace dropfact {

/// Parse failure carrying the 1-based position of the offending field.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& message, std::size_t line, std::size_t column)
      : std::runtime_error(message), line_(line), column_(column) {}
  std::size_t line() const noexcept { return line_; }
  std::size_t column() const noexcept { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

/// File could not be opened, read or written.
class IoError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Headerless CSV of reals, one matrix row per line. Blank lines are skipped.
DenseMatrix parse_matrix_csv(std::string_view text);
DenseMatrix read_matrix_csv(const std::filesystem::path& path);
void write_matrix_csv(std::ostream& out, const DenseMatrix& m);

/// Writes `contents` to a sibling temporary and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view contents);
std::string read_file(const std::filesystem::path& path);

}  // namespace dropfact
