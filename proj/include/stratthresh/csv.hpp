#pragma once

#include <filesystem>
#include <string>
#include <vector>

namespace stratthresh {

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;

  // Index of `name` in the header; throws ValidationError if absent.
  std::size_t column(const std::string& name) const;
  double number(std::size_t row, std::size_t col) const;
};

// Parses comma-separated text. No quoting; fields are trimmed.
CsvTable parse_csv(const std::string& text);
CsvTable read_csv(const std::filesystem::path& path);

// Throws ValidationError unless the header equals `expected` exactly.
void require_header(const CsvTable& table, const std::vector<std::string>& expected);

std::string format_number(double v);
std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<double>>& rows);
// Rows of pre-formatted fields (for tables mixing labels and numbers).
std::string render_csv(const std::vector<std::string>& header,
                       const std::vector<std::vector<std::string>>& rows);

// Write to a sibling temp file and rename over `path`.
void write_file_atomic(const std::filesystem::path& path, const std::string& contents);

}  // namespace stratthresh
