// Helpers shared by the text model formats: shortest round-trip doubles and a
// trailing CRC32 line over everything before it.
#pragma once

#include <charconv>
#include <cstdint>
#include <cstdio>
#include <string>
#include <string_view>
#include <vector>

#include <zlib.h>

namespace stag::detail {

inline std::string format_double(double v) {
  char buf[64];
  auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

// Returns false on anything but a complete number.
inline bool parse_double(std::string_view s, double& v) {
  auto res = std::from_chars(s.data(), s.data() + s.size(), v);
  return res.ec == std::errc() && res.ptr == s.data() + s.size();
}

inline std::string crc_hex(std::string_view s) {
  const auto crc = crc32(0L, reinterpret_cast<const Bytef*>(s.data()), static_cast<uInt>(s.size()));
  char buf[16];
  std::snprintf(buf, sizeof buf, "%08lx", static_cast<unsigned long>(crc));
  return buf;
}

inline std::string with_checksum(const std::string& body) {
  return body + "checksum " + crc_hex(body) + '\n';
}

// Splits off and verifies the checksum line. Returns the body, or an error
// message through `err`.
inline std::string checked_body(const std::string& all, std::string& err) {
  const auto mark = all.rfind("checksum ");
  if (mark == std::string::npos || (mark > 0 && all[mark - 1] != '\n')) {
    err = "no checksum line (truncated file?)";
    return {};
  }
  std::string stored = all.substr(mark + 9);
  while (!stored.empty() && (stored.back() == '\n' || stored.back() == '\r')) stored.pop_back();
  std::string body = all.substr(0, mark);
  if (stored != crc_hex(body)) {
    err = "checksum mismatch";
    return {};
  }
  return body;
}

inline std::vector<std::string> split_tabs(const std::string& line) {
  std::vector<std::string> out;
  std::size_t start = 0;
  while (true) {
    const auto pos = line.find('\t', start);
    out.push_back(line.substr(start, pos - start));
    if (pos == std::string::npos) break;
    start = pos + 1;
  }
  return out;
}

}  // namespace stag::detail
