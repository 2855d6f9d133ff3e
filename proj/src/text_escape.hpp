#pragma once

#include <string>
#include <string_view>

namespace stag {

// Atoms of the bracketed format: backslash escapes for whitespace, parens,
// ':' and '\'.
inline std::string escape_atom(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '(': out += "\\("; break;
      case ')': out += "\\)"; break;
      case ':': out += "\\:"; break;
      case ' ': out += "\\s"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  return out;
}

inline std::string unescape(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] != '\\' || i + 1 == s.size()) {
      out += s[i];
      continue;
    }
    const char c = s[++i];
    switch (c) {
      case 's': out += ' '; break;
      case 't': out += '\t'; break;
      case 'n': out += '\n'; break;
      default: out += c;
    }
  }
  return out;
}

// Columnar fields: a lone "_" means "absent", so a literal "_" is written "\_".
inline std::string escape_field(std::string_view s) {
  if (s == "_") return "\\_";
  std::string out;
  for (char c : s) {
    switch (c) {
      case '\\': out += "\\\\"; break;
      case '\t': out += "\\t"; break;
      case '\n': out += "\\n"; break;
      default: out += c;
    }
  }
  if (out.empty()) out = "\\e";
  return out;
}

inline std::string unescape_field(std::string_view s) {
  if (s == "\\e") return {};
  return unescape(s);
}

}  // namespace stag
