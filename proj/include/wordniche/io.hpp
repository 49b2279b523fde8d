#ifndef WORDNICHE_IO_HPP
#define WORDNICHE_IO_HPP

#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdio>
#include <cstdint>
#include <fstream>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "wordniche/common.hpp"

namespace wordniche {

inline constexpr const char* kCsvVersion = "wordniche-csv v1";

inline std::string csv_escape(std::string_view s) {
  if (s.find_first_of(",\"\n\r") == std::string_view::npos) return std::string(s);
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}

/// Writes "# wordniche-csv v1 <table>", a header row, then rows with exactly
/// one field per column.
class CsvWriter {
 public:
  CsvWriter(std::ostream& out, std::string_view table, std::vector<std::string> columns)
      : out_(&out), columns_(std::move(columns)) {
    *out_ << "# " << kCsvVersion << ' ' << table << '\n';
    for (std::size_t i = 0; i < columns_.size(); ++i) *out_ << (i ? "," : "") << columns_[i];
    *out_ << '\n';
  }

  template <class... Fields>
  void row(const Fields&... fields) {
    if (sizeof...(Fields) != columns_.size())
      throw Error("csv row has " + std::to_string(sizeof...(Fields)) + " fields, expected " +
                  std::to_string(columns_.size()));
    std::size_t i = 0;
    ((*out_ << (i++ ? "," : "") << field(fields)), ...);
    *out_ << '\n';
  }

  [[nodiscard]] std::size_t width() const { return columns_.size(); }

 private:
  static std::string field(const std::string& s) { return csv_escape(s); }
  static std::string field(std::string_view s) { return csv_escape(s); }
  static std::string field(const char* s) { return csv_escape(s); }
  static std::string field(bool b) { return b ? "true" : "false"; }
  static std::string field(double v) { return format_double(v); }
  template <std::integral T>
    requires(!std::same_as<T, bool>)
  static std::string field(T v) {
    return std::to_string(v);
  }
  template <class T>
  static std::string field(const std::optional<T>& v) {
    return v ? field(*v) : std::string("NA");
  }

  std::ostream* out_;
  std::vector<std::string> columns_;
};

/// Output file that reports open and write failures as Error.
class OutputFile {
 public:
  explicit OutputFile(const std::string& path) : path_(path), out_(path, std::ios::binary | std::ios::trunc) {
    if (!out_) throw Error("cannot open " + path + " for writing");
  }
  std::ostream& stream() { return out_; }
  void close() {
    out_.close();
    if (!out_) throw Error("write failed: " + path_);
  }
  ~OutputFile() {
    if (out_.is_open()) out_.close();
  }

 private:
  std::string path_;
  std::ofstream out_;
};

inline std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot read " + path);
  std::ostringstream s;
  s << in.rdbuf();
  return s.str();
}

/// 64-bit FNV-1a, rendered as 16 hex digits.
inline std::string fnv1a_hex(std::string_view data) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : data) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace wordniche

#endif
