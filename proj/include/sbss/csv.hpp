#pragma once

#include <Eigen/Dense>
#include <array>
#include <cctype>
#include <fstream>
#include <string>
#include <vector>

#include "sbss/common.hpp"

namespace sbss {
namespace csv {

/// Splits one CSV record. Fields containing the delimiter or quotes must be
/// double-quoted; embedded quotes are doubled (RFC-4180 style, single line).
inline std::vector<std::string> split_record(const std::string& line, char delim,
                                             std::size_t line_no) {
  std::vector<std::string> fields;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"' && cur.empty()) {
      quoted = true;
    } else if (ch == delim) {
      fields.push_back(cur);
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  if (quoted) throw SchemaError(detail::str("line ", line_no, ": unterminated quote"));
  fields.push_back(cur);
  return fields;
}

inline std::string quote_field(const std::string& s, char delim) {
  if (s.find(delim) == std::string::npos && s.find('"') == std::string::npos &&
      s.find('\n') == std::string::npos)
    return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out += "\"\"";
    else out.push_back(ch);
  }
  out += "\"";
  return out;
}

inline double parse_number(const std::string& field, std::size_t line_no, const std::string& col) {
  std::size_t pos = 0;
  double v = 0.0;
  try {
    v = std::stod(field, &pos);
  } catch (const std::exception&) {
    throw SchemaError(detail::str("line ", line_no, ", column '", col, "': '", field,
                                  "' is not a number"));
  }
  // allow surrounding whitespace that stod already skipped at the front
  while (pos < field.size() && std::isspace(static_cast<unsigned char>(field[pos]))) ++pos;
  if (pos != field.size())
    throw SchemaError(detail::str("line ", line_no, ", column '", col, "': '", field,
                                  "' is not a number"));
  return v;
}

// ============================================================================
// Matrices (headerless numeric CSV)
// ============================================================================

inline Eigen::MatrixXd load_matrix(const std::string& path, char delim = ',') {
  std::ifstream in(path);
  if (!in) throw SchemaError(detail::str("cannot open '", path, "'"));
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_record(line, delim, line_no);
    std::vector<double> row;
    row.reserve(fields.size());
    for (std::size_t c = 0; c < fields.size(); ++c)
      row.push_back(parse_number(fields[c], line_no, detail::str(c + 1)));
    if (!rows.empty() && row.size() != rows.front().size())
      throw SchemaError(detail::str("line ", line_no, ": expected ", rows.front().size(),
                                    " fields, got ", row.size()));
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw SchemaError(detail::str("'", path, "': no data rows"));
  Eigen::MatrixXd m(rows.size(), rows.front().size());
  for (std::size_t i = 0; i < rows.size(); ++i)
    for (std::size_t j = 0; j < rows.front().size(); ++j) m(i, j) = rows[i][j];
  return m;
}

inline void save_matrix(const std::string& path, const Eigen::MatrixXd& m) {
  std::ofstream out(path);
  if (!out) throw Error(detail::str("cannot write '", path, "'"));
  out.precision(17);
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      if (j) out << ',';
      out << m(i, j);
    }
    out << '\n';
  }
}

// ============================================================================
// Spatial datasets: header `lon,lat,<name>...`, one row per sample location
// ============================================================================

struct SpatialDataset {
  Eigen::MatrixXd coords;  // n x 2, (lon, lat)
  Eigen::MatrixXd values;  // n x p
  std::vector<std::string> names;
};

inline SpatialDataset load_spatial(const std::string& path, char delim = ',') {
  std::ifstream in(path);
  if (!in) throw SchemaError(detail::str("cannot open '", path, "'"));
  std::string line;
  if (!std::getline(in, line)) throw SchemaError(detail::str("'", path, "': empty file"));
  if (!line.empty() && line.back() == '\r') line.pop_back();
  const auto header = split_record(line, delim, 1);
  if (header.size() < 3 || header[0] != "lon" || header[1] != "lat")
    throw SchemaError(detail::str("'", path,
                                  "': header must be lon,lat followed by at least one variable"));
  SpatialDataset ds;
  ds.names.assign(header.begin() + 2, header.end());
  const std::size_t p = ds.names.size();

  std::vector<std::array<double, 2>> coords;
  std::vector<std::vector<double>> values;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split_record(line, delim, line_no);
    if (fields.size() != header.size())
      throw SchemaError(detail::str("line ", line_no, ": expected ", header.size(),
                                    " fields, got ", fields.size()));
    coords.push_back({parse_number(fields[0], line_no, "lon"),
                      parse_number(fields[1], line_no, "lat")});
    std::vector<double> row(p);
    for (std::size_t c = 0; c < p; ++c)
      row[c] = parse_number(fields[c + 2], line_no, ds.names[c]);
    values.push_back(std::move(row));
  }
  if (coords.size() < 2) throw SchemaError(detail::str("'", path, "': need at least 2 data rows"));
  ds.coords.resize(coords.size(), 2);
  ds.values.resize(values.size(), p);
  for (std::size_t i = 0; i < coords.size(); ++i) {
    ds.coords(i, 0) = coords[i][0];
    ds.coords(i, 1) = coords[i][1];
    for (std::size_t j = 0; j < p; ++j) ds.values(i, j) = values[i][j];
  }
  return ds;
}

inline void save_spatial(const std::string& path, const Eigen::MatrixXd& coords,
                         const Eigen::MatrixXd& values, const std::vector<std::string>& names,
                         char delim = ',') {
  std::ofstream out(path);
  if (!out) throw Error(detail::str("cannot write '", path, "'"));
  out.precision(17);
  out << "lon" << delim << "lat";
  for (const auto& n : names) out << delim << quote_field(n, delim);
  out << '\n';
  for (Eigen::Index i = 0; i < coords.rows(); ++i) {
    out << coords(i, 0) << delim << coords(i, 1);
    for (Eigen::Index j = 0; j < values.cols(); ++j) out << delim << values(i, j);
    out << '\n';
  }
}

}  // namespace csv
}  // namespace sbss
