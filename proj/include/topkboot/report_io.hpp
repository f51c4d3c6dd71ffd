#pragma once

#include <cstdint>
#include <string>
#include <vector>

namespace topkboot {

// Shortest round-trip decimal rendering; the same bytes for the same value
// on every run, which is what makes report CSVs diffable.
std::string format_double(double v);

// One CSV table: header + rows, UTF-8, LF line endings, '.' decimal.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);
  void add_row(std::vector<std::string> cells);
  std::string to_string() const;
  void write(const std::string& path) const;

 private:
  std::vector<std::string> header_;
  std::vector<std::vector<std::string>> rows_;
};

std::uint64_t fnv1a_hash(const std::string& bytes);
std::string hex64(std::uint64_t v);

std::string iso8601_now();

void write_text_file(const std::string& path, const std::string& content);
std::string read_text_file(const std::string& path);

}  // namespace topkboot
