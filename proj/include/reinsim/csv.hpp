#pragma once

#include <charconv>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

namespace reinsim {

// Shortest round-trip decimal form; stable across runs, so CSV output is
// byte-reproducible.
inline std::string format_double(double value) {
  char buf[32];
  const auto res = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  CsvWriter& field(const std::string& value) {
    sep();
    out_ << value;
    return *this;
  }
  CsvWriter& field(double value) { return field(format_double(value)); }
  CsvWriter& field(int value) { return field(std::to_string(value)); }
  CsvWriter& field(long value) { return field(std::to_string(value)); }
  CsvWriter& field(std::size_t value) { return field(std::to_string(value)); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  void sep() {
    if (!first_) out_ << ',';
    first_ = false;
  }
  std::ostream& out_;
  bool first_ = true;
};

// Reads one numeric column from a CSV/text file: first column of each line,
// skipping lines that do not parse (headers, blanks).
inline std::vector<double> read_numeric_column(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open file: " + path);
  std::vector<double> values;
  std::string line;
  while (std::getline(in, line)) {
    const auto comma = line.find(',');
    std::string cell = comma == std::string::npos ? line : line.substr(0, comma);
    try {
      std::size_t pos = 0;
      const double v = std::stod(cell, &pos);
      values.push_back(v);
    } catch (const std::exception&) {
      continue;
    }
  }
  return values;
}

}  // namespace reinsim
