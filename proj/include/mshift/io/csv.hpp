// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <charconv>
#include <ostream>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace mshift::io {

/// Locale-independent scientific notation with 17 significant digits.
inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof buf, v, std::chars_format::scientific, 16);
  return std::string(buf, res.ptr);
}

/// Minimal CSV row writer; fields are written verbatim, so callers keep them comma-free.
class CsvWriter {
 public:
  explicit CsvWriter(std::ostream& out) : out_(out) {}

  void header(std::span<const std::string> names) {
    for (std::size_t i = 0; i < names.size(); ++i) out_ << (i ? "," : "") << names[i];
    out_ << '\n';
  }

  CsvWriter& field(std::string_view s) {
    out_ << (first_ ? "" : ",") << s;
    first_ = false;
    return *this;
  }
  CsvWriter& field(double v) { return field(std::string_view(format_double(v))); }
  CsvWriter& field(long long v) { return field(std::string_view(std::to_string(v))); }

  void end_row() {
    out_ << '\n';
    first_ = true;
  }

 private:
  std::ostream& out_;
  bool first_ = true;
};

}  // namespace mshift::io
