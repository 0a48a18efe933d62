#pragma once

#include <array>
#include <cctype>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mailweave::text {

inline bool is_space(char c) {
  return c == ' ' || c == '\t' || c == '\r' || c == '\n' || c == '\f' || c == '\v';
}

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && is_space(s.front())) s.remove_prefix(1);
  while (!s.empty() && is_space(s.back())) s.remove_suffix(1);
  return s;
}

inline std::string ascii_lower(std::string_view s) {
  std::string out(s);
  for (char& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
  return out;
}

inline bool iequals(std::string_view a, std::string_view b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (std::tolower(static_cast<unsigned char>(a[i])) !=
        std::tolower(static_cast<unsigned char>(b[i]))) {
      return false;
    }
  }
  return true;
}

inline bool istarts_with(std::string_view s, std::string_view prefix) {
  return s.size() >= prefix.size() && iequals(s.substr(0, prefix.size()), prefix);
}

/// Collapses every run of whitespace into one space and trims the ends.
inline std::string collapse_whitespace(std::string_view s) {
  std::string out;
  bool pending = false;
  for (char c : s) {
    if (is_space(c)) {
      pending = !out.empty();
    } else {
      if (pending) out.push_back(' ');
      pending = false;
      out.push_back(c);
    }
  }
  return out;
}

inline std::vector<std::string> split_whitespace(std::string_view s) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && is_space(s[i])) ++i;
    std::size_t j = i;
    while (j < s.size() && !is_space(s[j])) ++j;
    if (j > i) out.emplace_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

// ---------------------------------------------------------------- UTF-8

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

/// Decodes one code point at `i`, advancing it. Returns nullopt (and
/// advances one byte) on an invalid sequence.
inline std::optional<char32_t> next_code_point(std::string_view s, std::size_t& i) {
  const auto b0 = static_cast<unsigned char>(s[i]);
  if (b0 < 0x80) {
    ++i;
    return b0;
  }
  std::size_t len = 0;
  char32_t cp = 0;
  char32_t min = 0;
  if ((b0 & 0xE0) == 0xC0) {
    len = 2, cp = b0 & 0x1F, min = 0x80;
  } else if ((b0 & 0xF0) == 0xE0) {
    len = 3, cp = b0 & 0x0F, min = 0x800;
  } else if ((b0 & 0xF8) == 0xF0) {
    len = 4, cp = b0 & 0x07, min = 0x10000;
  } else {
    ++i;
    return std::nullopt;
  }
  if (i + len > s.size()) {
    ++i;
    return std::nullopt;
  }
  for (std::size_t k = 1; k < len; ++k) {
    const auto b = static_cast<unsigned char>(s[i + k]);
    if ((b & 0xC0) != 0x80) {
      ++i;
      return std::nullopt;
    }
    cp = (cp << 6) | (b & 0x3F);
  }
  if (cp < min || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
    ++i;
    return std::nullopt;
  }
  i += len;
  return cp;
}

inline bool is_valid_utf8(std::string_view s) {
  std::size_t i = 0;
  while (i < s.size()) {
    if (!next_code_point(s, i)) return false;
  }
  return true;
}

inline std::vector<char32_t> decode_utf8(std::string_view s) {
  std::vector<char32_t> out;
  std::size_t i = 0;
  while (i < s.size()) out.push_back(next_code_point(s, i).value_or(0xFFFD));
  return out;
}

inline std::string encode_utf8(const std::vector<char32_t>& cps) {
  std::string out;
  for (char32_t cp : cps) append_utf8(out, cp);
  return out;
}

inline char32_t fold_code_point(char32_t c) {
  if (c < 0x80) return static_cast<char32_t>(std::tolower(static_cast<int>(c)));
  if (c >= 0xC0 && c <= 0xDE && c != 0xD7) return c + 0x20;
  if (c == 0x178) return 0xFF;
  if ((c >= 0x100 && c <= 0x137) || (c >= 0x14A && c <= 0x177)) return c | 1;
  if ((c >= 0x139 && c <= 0x148) || (c >= 0x179 && c <= 0x17E)) return (c & 1) ? c + 1 : c;
  if (c >= 0x391 && c <= 0x3A9 && c != 0x3A2) return c + 0x20;
  if (c >= 0x410 && c <= 0x42F) return c + 0x20;
  if (c >= 0x400 && c <= 0x40F) return c + 0x50;
  return c;
}

/// Simple case folding covering ASCII, Latin-1, Latin Extended-A, Greek and
/// Cyrillic capitals.
inline std::string casefold(std::string_view s) {
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) append_utf8(out, fold_code_point(next_code_point(s, i).value_or(0xFFFD)));
  return out;
}

/// Replaces Latin letters carrying diacritics by their base letters and drops
/// combining marks.
inline std::string strip_diacritics(std::string_view s) {
  // U+00C0..U+00FF; '\0' keeps the original code point, two letters for
  // ligatures are handled below.
  static constexpr char kLatin1[] =
      "AAAAAA\1CEEEEIIIIDNOOOOO\0OUUUUY\2\3aaaaaa\4ceeeeiiiidnooooo\0ouuuuy\5y";
  static constexpr char kExtendedA[] =
      "AaAaAaCcCcCcCcDdDdEeEeEeEeEeGgGgGgGgHhHhIiIiIiIiIiIiJjKkkLlLlLlLlLlNnNnNnnNnOoOoOoOoRrRrRr"
      "SsSsSsSsTtTtTtUuUuUuUuUuUuWwYyYZzZzZzs";
  static_assert(sizeof kLatin1 == 65);
  static_assert(sizeof kExtendedA == 129);
  std::string out;
  out.reserve(s.size());
  std::size_t i = 0;
  while (i < s.size()) {
    const char32_t c = next_code_point(s, i).value_or(0xFFFD);
    if (c >= 0x300 && c <= 0x36F) continue;
    if (c >= 0xC0 && c <= 0xFF) {
      const char m = kLatin1[c - 0xC0];
      switch (m) {
        case '\0': append_utf8(out, c); break;
        case '\1': out += "AE"; break;
        case '\2': out += "TH"; break;
        case '\3': out += "ss"; break;
        case '\4': out += "ae"; break;
        case '\5': out += "th"; break;
        default: out.push_back(m);
      }
    } else if (c >= 0x100 && c <= 0x17F) {
      out.push_back(kExtendedA[c - 0x100]);
    } else {
      append_utf8(out, c);
    }
  }
  return out;
}

// ------------------------------------------------------------- charsets

inline std::string latin1_to_utf8(std::string_view s) {
  std::string out;
  for (char c : s) append_utf8(out, static_cast<unsigned char>(c));
  return out;
}

inline std::string cp1252_to_utf8(std::string_view s) {
  static constexpr std::array<char16_t, 32> kHigh = {
      0x20AC, 0xFFFD, 0x201A, 0x0192, 0x201E, 0x2026, 0x2020, 0x2021, 0x02C6, 0x2030, 0x0160,
      0x2039, 0x0152, 0xFFFD, 0x017D, 0xFFFD, 0xFFFD, 0x2018, 0x2019, 0x201C, 0x201D, 0x2022,
      0x2013, 0x2014, 0x02DC, 0x2122, 0x0161, 0x203A, 0x0153, 0xFFFD, 0x017E, 0x0178};
  std::string out;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    append_utf8(out, c >= 0x80 && c < 0xA0 ? kHigh[c - 0x80] : c);
  }
  return out;
}

inline std::string latin9_to_utf8(std::string_view s) {
  std::string out;
  for (char ch : s) {
    const auto c = static_cast<unsigned char>(ch);
    char32_t cp = c;
    switch (c) {
      case 0xA4: cp = 0x20AC; break;
      case 0xA6: cp = 0x0160; break;
      case 0xA8: cp = 0x0161; break;
      case 0xB4: cp = 0x017D; break;
      case 0xB8: cp = 0x017E; break;
      case 0xBC: cp = 0x0152; break;
      case 0xBD: cp = 0x0153; break;
      case 0xBE: cp = 0x0178; break;
      default: break;
    }
    append_utf8(out, cp);
  }
  return out;
}

/// Converts bytes in `charset` to UTF-8; nullopt for unsupported charsets.
inline std::optional<std::string> to_utf8(std::string_view bytes, std::string_view charset) {
  std::string cs = ascii_lower(charset.substr(0, charset.find('*')));
  if (cs == "utf-8" || cs == "utf8") {
    return is_valid_utf8(bytes) ? std::string(bytes) : cp1252_to_utf8(bytes);
  }
  if (cs == "us-ascii" || cs == "ascii") return std::string(bytes);
  if (cs == "iso-8859-1" || cs == "latin1" || cs == "iso_8859-1" || cs == "l1") {
    return latin1_to_utf8(bytes);
  }
  if (cs == "iso-8859-15" || cs == "latin-9" || cs == "latin9") return latin9_to_utf8(bytes);
  if (cs == "windows-1252" || cs == "cp1252") return cp1252_to_utf8(bytes);
  return std::nullopt;
}

/// Valid UTF-8 with only XML-representable characters. Byte strings that are
/// not UTF-8 are read as windows-1252; disallowed control characters become
/// U+FFFD.
inline std::string sanitize(std::string_view s) {
  const std::string utf8 = is_valid_utf8(s) ? std::string(s) : cp1252_to_utf8(s);
  std::string out;
  out.reserve(utf8.size());
  std::size_t i = 0;
  while (i < utf8.size()) {
    char32_t c = next_code_point(utf8, i).value_or(0xFFFD);
    if ((c < 0x20 && c != '\t' && c != '\n' && c != '\r') || c == 0xFFFE || c == 0xFFFF) {
      c = 0xFFFD;
    }
    append_utf8(out, c);
  }
  return out;
}

// ------------------------------------------------------------- encodings

inline std::optional<std::string> base64_decode(std::string_view s) {
  auto value = [](char c) -> int {
    if (c >= 'A' && c <= 'Z') return c - 'A';
    if (c >= 'a' && c <= 'z') return c - 'a' + 26;
    if (c >= '0' && c <= '9') return c - '0' + 52;
    if (c == '+') return 62;
    if (c == '/') return 63;
    return -1;
  };
  std::string out;
  std::uint32_t acc = 0;
  int bits = 0;
  for (char c : s) {
    if (c == '=') break;
    if (is_space(c)) continue;
    const int v = value(c);
    if (v < 0) return std::nullopt;
    acc = (acc << 6) | static_cast<std::uint32_t>(v);
    bits += 6;
    if (bits >= 8) {
      bits -= 8;
      out.push_back(static_cast<char>((acc >> bits) & 0xFF));
    }
  }
  return out;
}

inline int hex_value(char c) {
  if (c >= '0' && c <= '9') return c - '0';
  if (c >= 'a' && c <= 'f') return c - 'a' + 10;
  if (c >= 'A' && c <= 'F') return c - 'A' + 10;
  return -1;
}

/// RFC 2047 "Q" encoding: '_' is a space, "=XX" a hex byte.
inline std::string q_decode(std::string_view s) {
  std::string out;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '_') {
      out.push_back(' ');
    } else if (s[i] == '=' && i + 2 < s.size() &&
               hex_value(s[i + 1]) >= 0 && hex_value(s[i + 2]) >= 0) {
      out.push_back(static_cast<char>(hex_value(s[i + 1]) * 16 + hex_value(s[i + 2])));
      i += 2;
    } else {
      out.push_back(s[i]);
    }
  }
  return out;
}

/// Decodes RFC 2047 encoded words ("=?charset?B|Q?text?=") in a header
/// value. Whitespace separating two adjacent encoded words is dropped.
/// Words with an unsupported charset or encoding are left as-is.
inline std::string decode_rfc2047(std::string_view s) {
  std::string out;
  std::size_t i = 0;
  bool last_was_word = false;
  std::string pending_space;
  while (i < s.size()) {
    if (s.compare(i, 2, "=?") == 0) {
      const auto q1 = s.find('?', i + 2);
      const auto q2 = q1 == std::string_view::npos ? q1 : s.find('?', q1 + 1);
      const auto end = q2 == std::string_view::npos ? q2 : s.find("?=", q2 + 1);
      if (end != std::string_view::npos && q2 == q1 + 2) {
        const auto charset = s.substr(i + 2, q1 - i - 2);
        const char enc = static_cast<char>(std::toupper(static_cast<unsigned char>(s[q1 + 1])));
        const auto payload = s.substr(q2 + 1, end - q2 - 1);
        bool spaced = false;
        for (char c : s.substr(i, end - i)) spaced = spaced || is_space(c);
        std::optional<std::string> bytes;
        if (!spaced && enc == 'B') bytes = base64_decode(payload);
        if (!spaced && enc == 'Q') bytes = q_decode(payload);
        std::optional<std::string> decoded;
        if (bytes) decoded = to_utf8(*bytes, charset);
        if (decoded) {
          if (!last_was_word) out += pending_space;
          pending_space.clear();
          out += *decoded;
          last_was_word = true;
          i = end + 2;
          continue;
        }
      }
    }
    if (is_space(s[i])) {
      pending_space.push_back(s[i]);
      ++i;
      continue;
    }
    out += pending_space;
    pending_space.clear();
    out.push_back(s[i]);
    last_was_word = false;
    ++i;
  }
  out += pending_space;
  return out;
}

}  // namespace mailweave::text
