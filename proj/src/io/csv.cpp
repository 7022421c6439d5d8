#include "loco/io/csv.hpp"

#include <cstdio>
#include <stdexcept>

namespace loco::io {

std::string format_float(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.9g", v);
  return buf;
}

CsvWriter::CsvWriter(const std::string& path, const std::vector<std::string>& columns)
    : out_(path), num_columns_(columns.size()) {
  if (!out_) throw std::runtime_error("cannot open for writing: " + path);
  for (std::size_t i = 0; i < columns.size(); ++i) {
    if (i) out_ << ',';
    out_ << columns[i];
  }
  out_ << '\n';
}

void CsvWriter::row(const std::vector<double>& values) {
  if (values.size() != num_columns_) throw std::invalid_argument("csv row width mismatch");
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out_ << ',';
    out_ << format_float(values[i]);
  }
  out_ << '\n';
}

void CsvWriter::row_mixed(const std::vector<std::string>& cells) {
  if (cells.size() != num_columns_) throw std::invalid_argument("csv row width mismatch");
  for (std::size_t i = 0; i < cells.size(); ++i) {
    if (i) out_ << ',';
    out_ << cells[i];
  }
  out_ << '\n';
}

}  // namespace loco::io
