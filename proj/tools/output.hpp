#pragma once

#include <filesystem>
#include <map>
#include <string>
#include <vector>

namespace carpetq::cli {

// Numbers as %.17g so they parse back to the same double.
std::string fmt(double v);
std::string fmt(std::size_t v);
std::string fmt(int v);
std::string fmt_bool(bool v);

struct CsvTable {
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add(std::vector<std::string> row);
  std::string str() const;
  // Values of one column; throws std::out_of_range for an unknown name.
  std::vector<std::string> column(const std::string& name) const;
};

CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

void write_text(const std::filesystem::path& path, const std::string& text);

struct Series {
  std::string label;
  std::vector<double> x;
  std::vector<double> y;
  bool dashed = false;
};

// A single self-contained SVG line chart. Non-finite points are skipped.
std::string line_chart(const std::string& title, const std::string& x_label,
                       const std::string& y_label, const std::vector<Series>& series);

}  // namespace carpetq::cli
