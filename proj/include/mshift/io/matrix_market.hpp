// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <algorithm>
#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <mshift/core.hpp>
#include <mshift/dense.hpp>
#include <mshift/io/csv.hpp>

namespace mshift::io {

namespace detail {

inline std::string lower(std::string s) {
  std::transform(s.begin(), s.end(), s.begin(), [](unsigned char ch) { return static_cast<char>(std::tolower(ch)); });
  return s;
}

inline double parse_double(std::string_view tok, const std::string& where) {
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size()) throw ParseError(where + ": bad number '" + std::string(tok) + "'");
  return v;
}

inline index parse_index(std::string_view tok, const std::string& where) {
  long long v = 0;
  const auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc{} || ptr != tok.data() + tok.size() || v < 0)
    throw ParseError(where + ": bad integer '" + std::string(tok) + "'");
  return static_cast<index>(v);
}

// Whitespace-separated tokens of the body, skipping comment lines.
class Tokens {
 public:
  Tokens(std::istream& in, std::string where) : where_(std::move(where)) {
    std::string line;
    while (std::getline(in, line)) {
      if (!line.empty() && line[0] == '%') continue;
      std::istringstream ls(line);
      std::string tok;
      while (ls >> tok) toks_.push_back(std::move(tok));
    }
  }
  std::string_view next() {
    if (pos_ >= toks_.size()) throw ParseError(where_ + ": unexpected end of data");
    return toks_[pos_++];
  }
  [[nodiscard]] bool done() const noexcept { return pos_ == toks_.size(); }

 private:
  std::string where_;
  std::vector<std::string> toks_;
  std::size_t pos_ = 0;
};

}  // namespace detail

/**
 * @brief Reads a real Matrix Market file. Supports array and coordinate
 * layouts with real or integer fields and general or symmetric structure.
 */
inline RealMatrix read_matrix_market(std::istream& in, const std::string& where = "<stream>") {
  std::string header;
  if (!std::getline(in, header)) throw ParseError(where + ": empty input");
  std::istringstream hs(header);
  std::string banner, object, format, field, symmetry;
  hs >> banner >> object >> format >> field >> symmetry;
  if (banner != "%%MatrixMarket" || detail::lower(object) != "matrix")
    throw ParseError(where + ": missing %%MatrixMarket matrix banner");
  format = detail::lower(format);
  field = detail::lower(field);
  symmetry = detail::lower(symmetry);
  if (format != "array" && format != "coordinate") throw ParseError(where + ": unknown format '" + format + "'");
  if (field != "real" && field != "integer" && field != "double")
    throw ParseError(where + ": only real or integer fields are supported");
  if (symmetry != "general" && symmetry != "symmetric")
    throw ParseError(where + ": only general or symmetric structure is supported");
  const bool sym = symmetry == "symmetric";

  detail::Tokens t(in, where);
  const index rows = detail::parse_index(t.next(), where);
  const index cols = detail::parse_index(t.next(), where);
  if (sym && rows != cols) throw ParseError(where + ": symmetric matrix must be square");
  RealMatrix a(rows, cols);
  if (format == "array") {
    for (index j = 0; j < cols; ++j)
      for (index i = sym ? j : 0; i < rows; ++i) {
        a(i, j) = detail::parse_double(t.next(), where);
        if (sym) a(j, i) = a(i, j);
      }
  } else {
    const index nnz = detail::parse_index(t.next(), where);
    for (index k = 0; k < nnz; ++k) {
      const index i = detail::parse_index(t.next(), where);
      const index j = detail::parse_index(t.next(), where);
      const double v = detail::parse_double(t.next(), where);
      if (i < 1 || i > rows || j < 1 || j > cols) throw ParseError(where + ": entry index out of range");
      a(i - 1, j - 1) += v;
      if (sym && i != j) a(j - 1, i - 1) += v;
    }
  }
  if (!t.done()) throw ParseError(where + ": trailing data after matrix entries");
  return a;
}

inline RealMatrix read_matrix_market_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError(path + ": cannot open file");
  return read_matrix_market(in, path);
}

/// Dense array layout with round-trip precision.
inline void write_matrix_market(std::ostream& out, ConstView<double> a) {
  out << "%%MatrixMarket matrix array real general\n" << a.rows << ' ' << a.cols << '\n';
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) out << format_double(a(i, j)) << '\n';
}

inline void write_matrix_market(std::ostream& out, ConstView<cplx> a) {
  out << "%%MatrixMarket matrix array complex general\n" << a.rows << ' ' << a.cols << '\n';
  for (index j = 0; j < a.cols; ++j)
    for (index i = 0; i < a.rows; ++i) out << format_double(a(i, j).real()) << ' ' << format_double(a(i, j).imag()) << '\n';
}

template <typename M>
void write_matrix_market_file(const std::string& path, const M& a) {
  std::ofstream out(path);
  if (!out) throw ParseError(path + ": cannot open file for writing");
  write_matrix_market(out, cview(a));
  if (!out) throw ParseError(path + ": write failed");
}

}  // namespace mshift::io
