#pragma once

#include <algorithm>
#include <cctype>
#include <string>
#include <string_view>
#include <vector>

namespace snipcheck {

inline std::string_view trim_view(std::string_view s) {
  size_t b = s.find_first_not_of(" \t\r\n\f\v");
  if (b == std::string_view::npos) return {};
  size_t e = s.find_last_not_of(" \t\r\n\f\v");
  return s.substr(b, e - b + 1);
}

inline std::string trim(std::string_view s) { return std::string(trim_view(s)); }

inline std::vector<std::string_view> split_lines(std::string_view text) {
  std::vector<std::string_view> lines;
  size_t start = 0;
  while (start <= text.size()) {
    size_t nl = text.find('\n', start);
    if (nl == std::string_view::npos) {
      lines.push_back(text.substr(start));
      break;
    }
    size_t end = nl;
    if (end > start && text[end - 1] == '\r') end--;
    lines.push_back(text.substr(start, end - start));
    start = nl + 1;
  }
  return lines;
}

inline size_t count_nonempty_lines(std::string_view text) {
  size_t n = 0;
  for (auto line : split_lines(text))
    if (!trim_view(line).empty()) n++;
  return n;
}

inline std::string to_lower(std::string_view s) {
  std::string out(s);
  std::transform(out.begin(), out.end(), out.begin(),
                 [](unsigned char c) { return std::tolower(c); });
  return out;
}

inline bool starts_with(std::string_view s, std::string_view prefix) {
  return s.substr(0, prefix.size()) == prefix;
}

// Collapses all runs of whitespace to single spaces and trims; used for
// whitespace-insensitive line comparison.
inline std::string normalize_ws(std::string_view s) {
  std::string out;
  bool in_space = false;
  for (char c : s) {
    if (std::isspace(static_cast<unsigned char>(c))) {
      in_space = !out.empty();
    } else {
      if (in_space) out += ' ';
      in_space = false;
      out += c;
    }
  }
  return out;
}

inline bool is_ident_start(char c) {
  return std::isalpha(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

inline bool is_ident_char(char c) {
  return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '$';
}

inline std::string replace_all(std::string text, std::string_view from, std::string_view to) {
  if (from.empty()) return text;
  size_t pos = 0;
  while ((pos = text.find(from, pos)) != std::string::npos) {
    text.replace(pos, from.size(), to);
    pos += to.size();
  }
  return text;
}

// Strips // and /* */ comments; line structure is preserved so offsets keep
// meaning roughly. String literal contents are kept verbatim.
inline std::string strip_solidity_comments(std::string_view text) {
  std::string out;
  out.reserve(text.size());
  enum { Code, Line, Block, Str } state = Code;
  char quote = 0;
  for (size_t i = 0; i < text.size(); i++) {
    char c = text[i];
    char next = i + 1 < text.size() ? text[i + 1] : 0;
    switch (state) {
      case Code:
        if (c == '/' && next == '/') { state = Line; i++; }
        else if (c == '/' && next == '*') { state = Block; i++; }
        else {
          if (c == '"' || c == '\'') { state = Str; quote = c; }
          out += c;
        }
        break;
      case Line:
        if (c == '\n') { state = Code; out += c; }
        break;
      case Block:
        if (c == '*' && next == '/') { state = Code; i++; }
        else if (c == '\n') out += c;
        break;
      case Str:
        if (c == '\\') { out += c; if (next) { out += next; i++; } }
        else { out += c; if (c == quote) state = Code; }
        break;
    }
  }
  return out;
}

}  // namespace snipcheck
