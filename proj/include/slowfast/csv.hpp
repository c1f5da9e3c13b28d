#pragma once

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

namespace slowfast {

// Shortest round-trip decimal form, locale-independent.
std::string format_double(double v);

// Comma-separated writer with a mandatory header row and fixed column order.
class CsvWriter {
 public:
  explicit CsvWriter(const std::filesystem::path& path);

  void header(const std::vector<std::string>& columns);
  void row(const std::vector<std::string>& cells);

  // convenience for mixed numeric/text rows
  struct Cell {
    std::string text;
    Cell(const char* s) : text(s) {}
    Cell(std::string s) : text(std::move(s)) {}
    Cell(double v) : text(format_double(v)) {}
    Cell(int v) : text(std::to_string(v)) {}
    Cell(long v) : text(std::to_string(v)) {}
    Cell(long long v) : text(std::to_string(v)) {}
    Cell(bool b) : text(b ? "1" : "0") {}
  };
  void row(std::initializer_list<Cell> cells);

 private:
  std::ofstream out_;
  std::size_t n_columns_ = 0;
};

// In-memory CSV for plotting and the tests.
struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  static CsvTable read(const std::filesystem::path& path);
  int column(const std::string& name) const;  // -1 when absent
  double number(std::size_t row, int col) const;
};

}  // namespace slowfast
