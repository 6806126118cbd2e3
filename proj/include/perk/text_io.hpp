#pragma once

// Shared helpers for the plain-text formats: 17-significant-digit number
// formatting, comma/space separated value lists, and key = value documents.

#include <charconv>
#include <cstdio>
#include <fstream>
#include <map>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "perk/error.hpp"

namespace perk::text {

inline std::string format(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

inline std::string join(const std::vector<double>& values, std::string_view sep = " ") {
  std::string out;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (i) out += sep;
    out += format(values[i]);
  }
  return out;
}

inline std::string_view trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return s.substr(first, last - first + 1);
}

/// Parses one decimal; `where` is prefixed to the error message.
inline double parse_double(std::string_view token, const std::string& where) {
  token = trim(token);
  double v = 0.0;
  const auto* end = token.data() + token.size();
  auto [ptr, ec] = std::from_chars(token.data(), end, v);
  if (token.empty() || ec != std::errc() || ptr != end)
    fail(ErrorCode::parse, where + ": cannot parse number '" + std::string(token) + "'");
  return v;
}

/// Splits on commas and/or whitespace.
inline std::vector<double> parse_list(std::string_view s, const std::string& where) {
  std::vector<double> out;
  std::string token;
  auto flush = [&] {
    if (!token.empty()) out.push_back(parse_double(token, where));
    token.clear();
  };
  for (char ch : s) {
    if (ch == ',' || ch == ' ' || ch == '\t' || ch == '\r' || ch == '\n')
      flush();
    else
      token.push_back(ch);
  }
  flush();
  return out;
}

inline std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail(ErrorCode::io, "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline void write_file(const std::string& path, const std::string& content) {
  std::ofstream out(path);
  if (!out) fail(ErrorCode::io, "cannot write '" + path + "'");
  out << content;
  if (!out) fail(ErrorCode::io, "write failed for '" + path + "'");
}

/// One `[section]` of a key = value document; keys preserve order of first
/// appearance. Lines whose first non-blank character is '#' are comments.
struct Section {
  std::string name;
  std::vector<std::pair<std::string, std::string>> entries;
  std::vector<std::string> raw_lines;  // non key-value lines (dense rows)
  std::vector<int> raw_line_numbers;

  const std::string* find(std::string_view key) const {
    for (const auto& [k, v] : entries)
      if (k == key) return &v;
    return nullptr;
  }

  const std::string& get(std::string_view key) const {
    const auto* v = find(key);
    if (!v) fail(ErrorCode::parse, "missing key '" + std::string(key) + "' in section '" + name + "'");
    return *v;
  }
};

inline std::vector<Section> parse_document(const std::string& content) {
  std::vector<Section> sections(1);
  std::istringstream in(content);
  std::string line;
  int number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto t = trim(line);
    if (t.empty() || t.front() == '#') continue;
    if (t.front() == '[') {
      if (t.back() != ']') fail(ErrorCode::parse, "line " + std::to_string(number) + ": malformed section header");
      sections.push_back(Section{std::string(t.substr(1, t.size() - 2)), {}, {}, {}});
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string_view::npos) {
      sections.back().raw_lines.emplace_back(t);
      sections.back().raw_line_numbers.push_back(number);
      continue;
    }
    sections.back().entries.emplace_back(std::string(trim(t.substr(0, eq))), std::string(trim(t.substr(eq + 1))));
  }
  return sections;
}

}  // namespace perk::text
