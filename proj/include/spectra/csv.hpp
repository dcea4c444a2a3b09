#pragma once

// Minimal reader/writer for the comma-separated spectral tables used by the
// library: a header row `wavelength,ch0,ch1,...` followed by numeric rows.
// Density files may carry `# atom,<lambda>,<weight>` comment lines.

#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "spectra/error.hpp"

namespace spectra {

struct Atom {
  double lambda = 0.0;
  double weight = 0.0;
};

struct Table {
  std::vector<std::string> header;
  std::vector<std::vector<double>> columns;
  std::vector<Atom> atoms;

  std::size_t rows() const { return columns.empty() ? 0 : columns.front().size(); }
};

namespace csv_detail {

inline std::string trim(std::string_view s) {
  auto begin = s.find_first_not_of(" \t\r\n");
  if (begin == std::string_view::npos) return {};
  auto end = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(begin, end - begin + 1));
}

inline std::vector<std::string> split(std::string_view line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    out.push_back(trim(line.substr(start, pos == std::string_view::npos ? std::string_view::npos : pos - start)));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace csv_detail

/// Parses a strict decimal number (`.` separator); throws on trailing garbage.
inline double parse_number(const std::string& field, std::size_t line_no) {
  if (field.empty()) {
    throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": empty field");
  }
  std::size_t consumed = 0;
  double value = 0.0;
  try {
    value = std::stod(field, &consumed);
  } catch (const std::exception&) {
    consumed = 0;
  }
  if (consumed != field.size()) {
    throw Error(ErrorKind::Parse,
                "line " + std::to_string(line_no) + ": not a number: '" + field + "'");
  }
  return value;
}

inline Table parse_table(std::istream& in) {
  Table table;
  std::string line;
  std::size_t line_no = 0;
  bool have_header = false;
  while (std::getline(in, line)) {
    ++line_no;
    auto trimmed = csv_detail::trim(line);
    if (trimmed.empty()) continue;
    if (trimmed.front() == '#') {
      auto body = csv_detail::trim(std::string_view(trimmed).substr(1));
      auto fields = csv_detail::split(body);
      if (!fields.empty() && fields.front() == "atom") {
        if (fields.size() != 3) {
          throw Error(ErrorKind::Parse,
                      "line " + std::to_string(line_no) + ": atom lines need '# atom,lambda,weight'");
        }
        table.atoms.push_back({parse_number(fields[1], line_no), parse_number(fields[2], line_no)});
      }
      continue;
    }
    auto fields = csv_detail::split(trimmed);
    if (!have_header) {
      table.header = fields;
      table.columns.assign(fields.size(), {});
      have_header = true;
      continue;
    }
    if (fields.size() != table.header.size()) {
      throw Error(ErrorKind::Parse, "line " + std::to_string(line_no) + ": expected " +
                                        std::to_string(table.header.size()) + " fields, got " +
                                        std::to_string(fields.size()));
    }
    for (std::size_t k = 0; k < fields.size(); ++k) {
      table.columns[k].push_back(parse_number(fields[k], line_no));
    }
  }
  if (!have_header) throw Error(ErrorKind::Parse, "missing header row");
  return table;
}

inline Table read_table_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error(ErrorKind::Io, "cannot open '" + path + "'");
  try {
    return parse_table(in);
  } catch (const Error& e) {
    throw Error(e.kind(), path + ": " + e.what());
  }
}

/// Formats a double with 17 significant digits (round-trippable, locale-free).
inline std::string format_double(double value) {
  if (value == 0.0) return "0";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

}  // namespace spectra
