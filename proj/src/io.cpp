#include "pmtlink/io.hpp"

#include <cerrno>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>

#include "pmtlink/errors.hpp"

namespace pmtlink {

namespace {

std::string trim(const std::string& text) {
  const auto first = text.find_first_not_of(" \t\r\n");
  if (first == std::string::npos) return {};
  const auto last = text.find_last_not_of(" \t\r\n");
  return text.substr(first, last - first + 1);
}

}  // namespace

KvConfig KvConfig::parse(const std::string& text) {
  KvConfig config;
  std::istringstream in(text);
  std::string line;
  int line_number = 0;
  while (std::getline(in, line)) {
    ++line_number;
    const auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    const std::string stripped = trim(line);
    if (stripped.empty()) continue;
    const auto eq = stripped.find('=');
    if (eq == std::string::npos)
      throw UsageError("config line " + std::to_string(line_number) +
                       ": expected 'key = value', got '" + stripped + "'");
    const std::string key = trim(stripped.substr(0, eq));
    const std::string value = trim(stripped.substr(eq + 1));
    if (key.empty())
      throw UsageError("config line " + std::to_string(line_number) +
                       ": empty key");
    config.set(key, value);
  }
  return config;
}

KvConfig KvConfig::load(const std::filesystem::path& path) {
  return parse(read_text_file(path));
}

void KvConfig::set(const std::string& key, const std::string& value) {
  for (auto& [existing, stored] : entries_) {
    if (existing == key) {
      stored = value;
      return;
    }
  }
  entries_.emplace_back(key, value);
}

bool KvConfig::has(const std::string& key) const {
  for (const auto& [existing, value] : entries_)
    if (existing == key) return true;
  return false;
}

const std::string& KvConfig::at(const std::string& key) const {
  for (const auto& [existing, value] : entries_)
    if (existing == key) return value;
  throw UsageError("missing config key '" + key + "'");
}

void KvConfig::erase(const std::string& key) {
  for (auto it = entries_.begin(); it != entries_.end(); ++it) {
    if (it->first == key) {
      entries_.erase(it);
      return;
    }
  }
}

std::string KvConfig::serialize() const {
  std::ostringstream out;
  for (const auto& [key, value] : entries_) out << key << " = " << value << '\n';
  return out.str();
}

double parse_double(const std::string& text) {
  const std::string stripped = trim(text);
  if (stripped.empty()) throw UsageError("empty value where a number was expected");
  errno = 0;
  char* end = nullptr;
  const double value = std::strtod(stripped.c_str(), &end);
  if (end != stripped.c_str() + stripped.size() || errno == ERANGE)
    throw UsageError("not a number: '" + stripped + "'");
  return value;
}

long long parse_int(const std::string& text) {
  const std::string stripped = trim(text);
  if (stripped.empty()) throw UsageError("empty value where an integer was expected");
  errno = 0;
  char* end = nullptr;
  const long long value = std::strtoll(stripped.c_str(), &end, 10);
  if (end != stripped.c_str() + stripped.size() || errno == ERANGE)
    throw UsageError("not an integer: '" + stripped + "'");
  return value;
}

std::uint64_t parse_u64(const std::string& text) {
  const std::string stripped = trim(text);
  if (stripped.empty()) throw UsageError("empty value where an integer was expected");
  errno = 0;
  char* end = nullptr;
  const unsigned long long value = std::strtoull(stripped.c_str(), &end, 10);
  if (end != stripped.c_str() + stripped.size() || errno == ERANGE ||
      stripped.front() == '-')
    throw UsageError("not an unsigned integer: '" + stripped + "'");
  return value;
}

std::vector<double> parse_double_list(const std::string& text) {
  // Every item must parse; empty items (",,", trailing comma) are errors.
  std::vector<double> values;
  std::string::size_type start = 0;
  while (start <= text.size()) {
    const auto comma = text.find(',', start);
    const std::string piece =
        text.substr(start, comma == std::string::npos ? std::string::npos
                                                      : comma - start);
    values.push_back(parse_double(piece));
    if (comma == std::string::npos) break;
    start = comma + 1;
  }
  return values;
}

std::string format_float(double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

std::string format_int(long long value) { return std::to_string(value); }

std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open '" + path.string() + "' for reading");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  if (in.bad()) throw IoError("read failure on '" + path.string() + "'");
  return buffer.str();
}

void write_text_file(const std::filesystem::path& path,
                     const std::string& content) {
  if (path.has_parent_path()) {
    std::error_code ec;
    std::filesystem::create_directories(path.parent_path(), ec);
    if (ec)
      throw IoError("cannot create directory '" +
                    path.parent_path().string() + "': " + ec.message());
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open '" + path.string() + "' for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("write failure on '" + path.string() + "'");
}

CsvTable::CsvTable(std::vector<std::string> columns)
    : columns_(std::move(columns)) {
  if (columns_.empty()) throw UsageError("csv table needs at least one column");
}

void CsvTable::add_row(std::vector<std::string> cells) {
  if (cells.size() != columns_.size())
    throw UsageError("csv row has " + std::to_string(cells.size()) +
                     " cells, expected " + std::to_string(columns_.size()));
  rows_.push_back(std::move(cells));
}

std::string CsvTable::serialize() const {
  std::ostringstream out;
  for (std::size_t c = 0; c < columns_.size(); ++c)
    out << (c ? "," : "") << columns_[c];
  out << '\n';
  for (const auto& row : rows_) {
    for (std::size_t c = 0; c < row.size(); ++c)
      out << (c ? "," : "") << row[c];
    out << '\n';
  }
  return out.str();
}

}  // namespace pmtlink
