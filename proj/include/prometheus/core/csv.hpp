#pragma once

#include <filesystem>
#include <ostream>
#include <string>
#include <vector>

namespace prometheus {

struct CsvTable {
  std::string source;
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header; throws LoadError naming the column.
  std::size_t column(const std::string& name) const;
  bool has_column(const std::string& name) const;
};

/// Reads a headered, comma-separated file without quoting. Throws LoadError
/// for a missing or empty file and for ragged rows.
CsvTable read_csv(const std::filesystem::path& path);

/// Shortest round-trip decimal representation.
std::string format_double(double v);

/// Parses a numeric cell. Empty cells and NaN spellings yield quiet NaN;
/// anything else non-numeric throws LoadError naming `column`.
double parse_cell(const std::string& cell, const std::string& column, std::size_t line);

void write_csv_row(std::ostream& os, const std::vector<std::string>& cells);

}  // namespace prometheus
