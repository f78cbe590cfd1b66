#pragma once

// Locale-independent CSV emission: 12 significant digits, '.' separator.

#include <charconv>
#include <cmath>
#include <string>
#include <string_view>
#include <vector>

namespace isac {

inline std::string format_number(double v) {
  if (std::isnan(v)) return "nan";
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  if (v == 0.0) return "0";
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::general, 12);
  return std::string(buf, res.ptr);
}

class CsvWriter {
 public:
  void comment(std::string_view text) {
    out_ += "# ";
    out_ += text;
    out_ += '\n';
  }

  void header(const std::vector<std::string>& columns) { line(columns); }

  template <class... Cells>
  void row(const Cells&... cells) {
    std::vector<std::string> parts{cell(cells)...};
    line(parts);
  }

  const std::string& str() const { return out_; }

 private:
  static std::string cell(double v) { return format_number(v); }
  static std::string cell(const std::string& s) { return s; }
  static std::string cell(const char* s) { return s; }
  static std::string cell(int v) { return std::to_string(v); }

  void line(const std::vector<std::string>& parts) {
    for (std::size_t i = 0; i < parts.size(); ++i) {
      if (i) out_ += ',';
      out_ += parts[i];
    }
    out_ += '\n';
  }

  std::string out_;
};

}  // namespace isac
