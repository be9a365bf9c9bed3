#pragma once

// Matrix files.
//   CSV: one row per line, entries "re" or "re+imj" / "re-imj", whitespace ignored.
//   JSON: {"dim": l, "entries": [[re, im], ...]} with l*l entries in row-major order.

#include <cctype>
#include <charconv>
#include <fstream>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "sppm/matrix.hpp"

namespace sppm {

namespace detail {

inline double parse_real(std::string_view s, const std::string& where) {
  double v = 0.0;
  if (!s.empty() && s.front() == '+') s.remove_prefix(1);
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || s.empty())
    throw input_error("matrix csv: cannot parse '" + std::string(s) + "' at " + where);
  return v;
}

inline cplx parse_complex(std::string s, const std::string& where) {
  std::erase_if(s, [](unsigned char c) { return std::isspace(c); });
  if (s.empty()) throw input_error("matrix csv: empty entry at " + where);
  if (s.back() != 'j' && s.back() != 'i') return {parse_real(s, where), 0.0};
  s.pop_back();
  // split at the last sign that is not an exponent sign or the leading sign
  std::size_t cut = std::string::npos;
  for (std::size_t k = s.size(); k-- > 1;)
    if ((s[k] == '+' || s[k] == '-') && s[k - 1] != 'e' && s[k - 1] != 'E') {
      cut = k;
      break;
    }
  if (cut == std::string::npos) {
    const std::string im = s == "" || s == "+" ? "1" : s == "-" ? "-1" : s;
    return {0.0, parse_real(im, where)};
  }
  std::string im = s.substr(cut);
  if (im == "+" || im == "-") im += "1";
  return {parse_real(std::string_view(s).substr(0, cut), where), parse_real(im, where)};
}

}  // namespace detail

inline SquareMatrix parse_matrix_csv(std::string_view text) {
  std::vector<std::vector<cplx>> rows;
  std::istringstream in{std::string(text)};
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::vector<cplx> row;
    std::stringstream ls(line);
    std::string cell;
    int col = 0;
    while (std::getline(ls, cell, ','))
      row.push_back(detail::parse_complex(cell, "line " + std::to_string(line_no) + ", column " + std::to_string(++col)));
    rows.push_back(std::move(row));
  }
  const Index l = static_cast<Index>(rows.size());
  if (l == 0) throw input_error("matrix csv: no rows");
  Eigen::MatrixXcd m(l, l);
  for (Index i = 0; i < l; ++i) {
    if (static_cast<Index>(rows[i].size()) != l)
      throw input_error("matrix csv: row " + std::to_string(i + 1) + " has " + std::to_string(rows[i].size()) +
                        " entries, expected " + std::to_string(l));
    for (Index j = 0; j < l; ++j) m(i, j) = rows[i][j];
  }
  return SquareMatrix(std::move(m));
}

inline SquareMatrix parse_matrix_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::exception& e) {
    throw input_error(std::string("matrix json: ") + e.what());
  }
  if (!j.is_object() || !j.contains("dim") || !j.contains("entries"))
    throw input_error("matrix json: need an object with 'dim' and 'entries'");
  if (!j["dim"].is_number_integer() || j["dim"].get<long long>() < 1)
    throw input_error("matrix json: 'dim' must be a positive integer");
  const auto l = static_cast<Index>(j["dim"].get<long long>());
  const auto& e = j["entries"];
  if (!e.is_array() || static_cast<Index>(e.size()) != l * l)
    throw input_error("matrix json: 'entries' must hold dim*dim = " + std::to_string(l * l) + " pairs");
  Eigen::MatrixXcd m(l, l);
  for (Index k = 0; k < l * l; ++k) {
    const auto& p = e[static_cast<std::size_t>(k)];
    if (!p.is_array() || p.size() != 2 || !p[0].is_number() || !p[1].is_number())
      throw input_error("matrix json: entry " + std::to_string(k) + " is not a [re, im] pair");
    m(k / l, k % l) = cplx(p[0].get<double>(), p[1].get<double>());
  }
  return SquareMatrix(std::move(m));
}

inline std::string matrix_to_json(const SquareMatrix& m) {
  nlohmann::json e = nlohmann::json::array();
  for (Index i = 0; i < m.dim(); ++i)
    for (Index j = 0; j < m.dim(); ++j) e.push_back({m(i, j).real(), m(i, j).imag()});
  return nlohmann::json{{"dim", m.dim()}, {"entries", e}}.dump();
}

/// Picks the format from the extension (.json) or the first non-blank character.
inline SquareMatrix load_matrix(const std::string& path) {
  std::ifstream f(path);
  if (!f) throw input_error("matrix: cannot open '" + path + "'");
  std::stringstream ss;
  ss << f.rdbuf();
  const std::string text = ss.str();
  const auto first = text.find_first_not_of(" \t\r\n");
  const bool json = path.ends_with(".json") || (first != std::string::npos && text[first] == '{');
  return json ? parse_matrix_json(text) : parse_matrix_csv(text);
}

}  // namespace sppm
