#pragma once

#include <fstream>
#include <string>
#include <vector>

namespace loco::io {

// canonical float formatting for every exported file: 9 significant digits
std::string format_float(double v);

// Minimal CSV emitter with deterministic formatting. The header is written on
// construction; one row() call per record.
class CsvWriter {
 public:
  CsvWriter(const std::string& path, const std::vector<std::string>& columns);

  void row(const std::vector<double>& values);
  void row_mixed(const std::vector<std::string>& cells);
  void flush() { out_.flush(); }
  bool ok() const { return static_cast<bool>(out_); }
  std::size_t columns() const { return num_columns_; }

 private:
  std::ofstream out_;
  std::size_t num_columns_ = 0;
};

}  // namespace loco::io
