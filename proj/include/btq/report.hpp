#pragma once

#include <cstdio>
#include <map>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "json.hpp"

#include "btq/geometry.hpp"

namespace btq::report {

// All serialized numbers are rounded to 12 significant digits, which makes
// repeated runs with the same seed byte-identical.
inline std::string format_real(double v) {
  if (v == 0.0) v = 0.0;  // normalize -0
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.12g", v);
  return buf;
}

// Complex values serialize as "re+imj".
inline std::string format_complex(Complex v) {
  double re = v.real(), im = v.imag();
  if (re == 0.0) re = 0.0;
  if (im == 0.0) im = 0.0;
  char buf[80];
  std::snprintf(buf, sizeof(buf), "%.12g%+.12gj", re, im);
  return buf;
}

struct Table {
  std::vector<std::pair<std::string, std::string>> meta;
  std::vector<std::string> columns;
  std::vector<std::vector<std::string>> rows;

  void add_meta(std::string key, std::string value) {
    meta.emplace_back(std::move(key), std::move(value));
  }
};

namespace detail {
inline std::string csv_escape(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string out = "\"";
  for (char c : s) {
    if (c == '"') out += '"';
    out += c;
  }
  out += '"';
  return out;
}
}  // namespace detail

inline void write_csv(const Table& t, std::ostream& os) {
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) os << ',';
    os << detail::csv_escape(t.columns[i]);
  }
  os << '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) os << ',';
      os << detail::csv_escape(row[i]);
    }
    os << '\n';
  }
}

inline void write_json(const Table& t, std::ostream& os) {
  nlohmann::ordered_json meta;
  for (const auto& [k, v] : t.meta) meta[k] = v;
  meta["columns"] = t.columns;
  nlohmann::ordered_json doc;
  doc["meta"] = std::move(meta);
  doc["rows"] = t.rows;
  os << doc.dump(2) << '\n';
}

}  // namespace btq::report
