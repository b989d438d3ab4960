#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <utility>
#include <vector>

namespace pmtlink {

// Flat "key = value" document with '#' comments. Insertion-ordered; set()
// replaces an existing key in place.
class KvConfig {
 public:
  static KvConfig parse(const std::string& text);
  static KvConfig load(const std::filesystem::path& path);

  void set(const std::string& key, const std::string& value);
  bool has(const std::string& key) const;
  const std::string& at(const std::string& key) const;
  void erase(const std::string& key);
  const std::vector<std::pair<std::string, std::string>>& entries() const {
    return entries_;
  }
  std::string serialize() const;

 private:
  std::vector<std::pair<std::string, std::string>> entries_;
};

// Full-consumption numeric parsing; malformed input raises UsageError.
double parse_double(const std::string& text);
long long parse_int(const std::string& text);
std::uint64_t parse_u64(const std::string& text);
std::vector<double> parse_double_list(const std::string& text);  // comma-split

// Round-trippable float formatting used by every text artifact.
std::string format_float(double value);
std::string format_int(long long value);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path,
                     const std::string& content);

// Column-checked CSV accumulator; serialize() emits header plus rows.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> columns);
  void add_row(std::vector<std::string> cells);
  std::string serialize() const;
  std::size_t rows() const { return rows_.size(); }

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<std::string>> rows_;
};

}  // namespace pmtlink
