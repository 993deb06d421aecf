#pragma once

// Tabular output: typed cells so CSV and JSON render the same values, with
// shortest round-trip number formatting throughout.

#include <charconv>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "pmq/errors.hpp"

namespace pmq {

inline std::string format_double(double v) {
  char buf[40];
  const auto res = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, res.ptr);
}

struct Cell {
  enum class Kind { number, integer, text, boolean, null };
  Kind kind = Kind::null;
  double num = 0.0;
  long long int_val = 0;
  std::string text;
  bool flag = false;

  static Cell number(double v) {
    Cell c;
    c.kind = Kind::number;
    c.num = v;
    return c;
  }
  static Cell integer(long long v) {
    Cell c;
    c.kind = Kind::integer;
    c.int_val = v;
    return c;
  }
  static Cell str(std::string s) {
    Cell c;
    c.kind = Kind::text;
    c.text = std::move(s);
    return c;
  }
  static Cell boolean(bool b) {
    Cell c;
    c.kind = Kind::boolean;
    c.flag = b;
    return c;
  }
  static Cell null() { return Cell{}; }

  std::string csv_text() const {
    switch (kind) {
      case Kind::number: return format_double(num);
      case Kind::integer: return std::to_string(int_val);
      case Kind::text: return text;
      case Kind::boolean: return flag ? "true" : "false";
      case Kind::null: return "";
    }
    return "";
  }

  nlohmann::ordered_json json_value() const {
    switch (kind) {
      case Kind::number: return num;
      case Kind::integer: return int_val;
      case Kind::text: return text;
      case Kind::boolean: return flag;
      case Kind::null: return nullptr;
    }
    return nullptr;
  }
};

struct Table {
  std::vector<std::string> columns;
  std::vector<std::vector<Cell>> rows;
};

// LF endings, no quoting: every value is numeric or a plain identifier.
inline std::string to_csv(const Table& t) {
  std::string out;
  for (std::size_t i = 0; i < t.columns.size(); ++i) {
    if (i) out += ',';
    out += t.columns[i];
  }
  out += '\n';
  for (const auto& row : t.rows) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      out += row[i].csv_text();
    }
    out += '\n';
  }
  return out;
}

// array of row objects with the same field names and order as the CSV header
inline nlohmann::ordered_json to_json_rows(const Table& t) {
  auto arr = nlohmann::ordered_json::array();
  for (const auto& row : t.rows) {
    nlohmann::ordered_json obj = nlohmann::ordered_json::object();
    for (std::size_t i = 0; i < row.size() && i < t.columns.size(); ++i)
      obj[t.columns[i]] = row[i].json_value();
    arr.push_back(std::move(obj));
  }
  return arr;
}

inline void write_text_file(const std::string& path, const std::string& content) {
  std::ofstream out(path, std::ios::binary);  // binary keeps LF as LF
  if (!out) throw IoError("cannot open " + path + " for writing");
  out << content;
  out.flush();
  if (!out) throw IoError("short write: " + path);
}

}  // namespace pmq
