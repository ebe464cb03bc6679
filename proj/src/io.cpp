#include "dropfact/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <ostream>
#include <sstream>
#include <system_error>
#include <vector>

#include "dropfact/trainers.hpp"

namespace dropfact {
namespace {

std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return s.substr(first, last - first + 1);
}

}  // namespace

DenseMatrix parse_matrix_csv(std::string_view text) {
  std::vector<double> data;
  std::size_t cols = 0;
  std::size_t rows = 0;
  std::size_t line_no = 0;
  while (!text.empty()) {
    const auto nl = text.find('\n');
    const std::string_view line = nl == std::string_view::npos ? text : text.substr(0, nl);
    text = nl == std::string_view::npos ? std::string_view{} : text.substr(nl + 1);
    ++line_no;
    if (trim(line).empty()) continue;

    std::size_t col = 0;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      const std::string_view field = trim(comma == std::string_view::npos ? rest : rest.substr(0, comma));
      ++col;
      double value = 0.0;
      const auto* begin = field.data();
      const auto* end = field.data() + field.size();
      const auto res = std::from_chars(begin, end, value);
      if (field.empty() || res.ec != std::errc{} || res.ptr != end || !std::isfinite(value)) {
        throw ParseError("matrix csv: row " + std::to_string(line_no) + ", column " +
                             std::to_string(col) + ": cannot parse '" + std::string(field) +
                             "' as a finite real",
                         line_no, col);
      }
      data.push_back(value);
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (rows == 0) {
      cols = col;
    } else if (col != cols) {
      throw ParseError("matrix csv: row " + std::to_string(line_no) + " has " +
                           std::to_string(col) + " columns, expected " + std::to_string(cols),
                       line_no, std::min(col, cols) + 1);
    }
    ++rows;
  }
  if (rows == 0) throw ParseError("matrix csv: no data rows", 1, 1);
  return {rows, cols, std::move(data)};
}

DenseMatrix read_matrix_csv(const std::filesystem::path& path) {
  return parse_matrix_csv(read_file(path));
}

void write_matrix_csv(std::ostream& out, const DenseMatrix& m) {
  for (std::size_t i = 0; i < m.rows(); ++i) {
    for (std::size_t j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << format_double(m(i, j));
    }
    out << '\n';
  }
}

std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_file_atomic(const std::filesystem::path& path, std::string_view contents) {
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(contents.data(), static_cast<std::streamsize>(contents.size()));
    if (!out) throw IoError("write to '" + tmp.string() + "' failed");
  }
  std::filesystem::rename(tmp, path);
}

}  // namespace dropfact
