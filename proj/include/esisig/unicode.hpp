#pragma once

#include <cstddef>
#include <optional>
#include <string>
#include <string_view>

namespace esisig::unicode {

inline constexpr char32_t kReplacement = 0xFFFD;

// Decodes the code point starting at `pos` and advances `pos` past it.
// Invalid sequences decode to U+FFFD and consume a single byte.
inline char32_t decode_utf8(std::string_view s, std::size_t& pos) {
  const auto byte = [&](std::size_t i) { return static_cast<unsigned char>(s[i]); };
  const unsigned char lead = byte(pos);
  if (lead < 0x80) {
    ++pos;
    return lead;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((lead & 0xE0) == 0xC0) {
    len = 2, cp = lead & 0x1F, min = 0x80;
  } else if ((lead & 0xF0) == 0xE0) {
    len = 3, cp = lead & 0x0F, min = 0x800;
  } else if ((lead & 0xF8) == 0xF0) {
    len = 4, cp = lead & 0x07, min = 0x10000;
  } else {
    ++pos;
    return kReplacement;
  }
  if (pos + len > s.size()) {
    ++pos;
    return kReplacement;
  }
  for (std::size_t i = 1; i < len; ++i) {
    const unsigned char c = byte(pos + i);
    if ((c & 0xC0) != 0x80) {
      ++pos;
      return kReplacement;
    }
    cp = (cp << 6) | (c & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++pos;
    return kReplacement;
  }
  pos += len;
  return cp;
}

inline void append_utf8(std::string& out, char32_t cp) {
  if (cp < 0x80) {
    out.push_back(static_cast<char>(cp));
  } else if (cp < 0x800) {
    out.push_back(static_cast<char>(0xC0 | (cp >> 6)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else if (cp < 0x10000) {
    out.push_back(static_cast<char>(0xE0 | (cp >> 12)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  } else {
    out.push_back(static_cast<char>(0xF0 | (cp >> 18)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 12) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | ((cp >> 6) & 0x3F)));
    out.push_back(static_cast<char>(0x80 | (cp & 0x3F)));
  }
}

// True when the whole string is structurally valid UTF-8.
inline bool is_valid_utf8(std::string_view s) {
  std::size_t pos = 0;
  while (pos < s.size()) {
    const std::size_t before = pos;
    if (decode_utf8(s, pos) == kReplacement) {
      // A literal U+FFFD is three bytes; a decode failure consumes one.
      if (pos - before != 3) return false;
    }
  }
  return true;
}

// The characters that normalization collapses: U+0020 and everything below,
// NEL and LINE SEPARATOR. Other Unicode spaces are ordinary characters.
constexpr bool is_collapsible(char32_t c) noexcept { return c <= 0x20 || c == 0x85 || c == 0x2028; }

// Length in bytes of the collapsible character starting at `pos`, or 0.
// Works on raw UTF-8 bytes: U+0085 is C2 85 and U+2028 is E2 80 A8.
inline std::size_t collapsible_length(std::string_view s, std::size_t pos) noexcept {
  const auto c = static_cast<unsigned char>(s[pos]);
  if (c <= 0x20) return 1;
  if (c == 0xC2 && pos + 1 < s.size() && static_cast<unsigned char>(s[pos + 1]) == 0x85) return 2;
  if (c == 0xE2 && pos + 2 < s.size() && static_cast<unsigned char>(s[pos + 1]) == 0x80 &&
      static_cast<unsigned char>(s[pos + 2]) == 0xA8)
    return 3;
  return 0;
}

// UTF-16 code units for a UTF-8 string, serialized in the given byte order.
inline std::string utf8_to_utf16(std::string_view utf8, bool little_endian) {
  std::string out;
  out.reserve(utf8.size() * 2);
  const auto unit = [&](char16_t u) {
    const char hi = static_cast<char>(u >> 8);
    const char lo = static_cast<char>(u & 0xFF);
    if (little_endian) {
      out.push_back(lo), out.push_back(hi);
    } else {
      out.push_back(hi), out.push_back(lo);
    }
  };
  for (std::size_t i = 0; i < utf8.size();) {
    char32_t cp = decode_utf8(utf8, i);
    if (cp >= 0x10000) {
      cp -= 0x10000;
      unit(static_cast<char16_t>(0xD800 + (cp >> 10)));
      unit(static_cast<char16_t>(0xDC00 + (cp & 0x3FF)));
    } else {
      unit(static_cast<char16_t>(cp));
    }
  }
  return out;
}

// ISO-8859-1 bytes for a UTF-8 string; nullopt if a character is above U+00FF.
inline std::optional<std::string> utf8_to_latin1(std::string_view utf8) {
  std::string out;
  out.reserve(utf8.size());
  for (std::size_t i = 0; i < utf8.size();) {
    const char32_t cp = decode_utf8(utf8, i);
    if (cp > 0xFF) return std::nullopt;
    out.push_back(static_cast<char>(cp));
  }
  return out;
}

}  // namespace esisig::unicode
