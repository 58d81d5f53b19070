#pragma once

// Shared text model-file convention. A model file is a magic line followed by
// labelled records; every real is written with 17 significant digits so a
// save/load cycle is exact and repeated saves are byte-identical.
//
//   <MAGIC>
//   <key> <values...>
//   <matrix-name> <rows> <cols>
//   <row 0 values>
//   ...

#include "mmfuse/common.hpp"
#include "mmfuse/error.hpp"

#include <charconv>
#include <istream>
#include <ostream>
#include <string>

namespace mmfuse::io {

inline void write_magic(std::ostream& out, const std::string& magic) { out << magic << '\n'; }

inline void expect_magic(std::istream& in, const std::string& magic) {
  std::string got;
  if (!(in >> got) || got != magic) throw ParseError("model", 1, "expected magic '" + magic + "', found '" + got + "'");
}

inline void expect_key(std::istream& in, const std::string& key) {
  std::string got;
  if (!(in >> got) || got != key) throw ParseError("model", 0, "expected record '" + key + "', found '" + got + "'");
}

inline void write_matrix(std::ostream& out, const std::string& name, const Matrix& m) {
  out << name << ' ' << m.rows() << ' ' << m.cols() << '\n';
  for (Index i = 0; i < m.rows(); ++i) {
    for (Index j = 0; j < m.cols(); ++j) out << (j ? " " : "") << format_real(m(i, j));
    out << '\n';
  }
}

inline void write_vector(std::ostream& out, const std::string& name, const Vector& v) {
  out << name << ' ' << v.size() << '\n';
  for (Index i = 0; i < v.size(); ++i) out << (i ? " " : "") << format_real(v(i));
  out << '\n';
}

inline double read_real(std::istream& in) {
  std::string tok;
  if (!(in >> tok)) throw ParseError("model", 0, "unexpected end of model file");
  double v = 0.0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (ec != std::errc() || ptr != tok.data() + tok.size()) throw ParseError("model", 0, "bad number '" + tok + "'");
  return v;
}

inline Index read_index(std::istream& in) {
  long long v = 0;
  if (!(in >> v) || v < 0) throw ParseError("model", 0, "bad size field");
  return static_cast<Index>(v);
}

inline Matrix read_matrix(std::istream& in, const std::string& name) {
  expect_key(in, name);
  const Index r = read_index(in);
  const Index c = read_index(in);
  Matrix m(r, c);
  for (Index i = 0; i < r; ++i)
    for (Index j = 0; j < c; ++j) m(i, j) = read_real(in);
  return m;
}

inline Vector read_vector(std::istream& in, const std::string& name) {
  expect_key(in, name);
  const Index n = read_index(in);
  Vector v(n);
  for (Index i = 0; i < n; ++i) v(i) = read_real(in);
  return v;
}

}  // namespace mmfuse::io
