#pragma once

#include <cctype>
#include <cstdint>
#include <tuple>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "mailweave/error.hpp"
#include "mailweave/text.hpp"

namespace mailweave::xml {

// A small non-validating XML reader for the documents this library writes:
// elements, attributes, character data, character and predefined entity
// references, comments, CDATA and the XML declaration. No DTDs or
// namespaces processing.

struct Node {
  std::string name;
  std::vector<std::pair<std::string, std::string>> attributes;
  /// Undecoded character data that precedes the first child element.
  std::string leading_raw;
  /// Undecoded character data after the first child element.
  std::string trailing_raw;
  std::vector<Node> children;
  std::size_t line = 1;
  std::size_t column = 1;

  const std::string* attribute(std::string_view key) const {
    for (const auto& [k, v] : attributes) {
      if (k == key) return &v;
    }
    return nullptr;
  }
};

inline void append_escaped(std::string& out, std::string_view s, bool attribute) {
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"':
        if (attribute) {
          out += "&quot;";
        } else {
          out.push_back(c);
        }
        break;
      case '\n': out += "&#10;"; break;
      case '\r': out += "&#13;"; break;
      case '\t': out += "&#9;"; break;
      default: out.push_back(c);
    }
  }
}

/// Text with & < > escaped and \n \r \t written as character references, so
/// literal whitespace in a document is always formatting.
inline std::string escape(std::string_view s, bool attribute = false) {
  std::string out;
  append_escaped(out, s, attribute);
  return out;
}

class Parser {
 public:
  explicit Parser(std::string_view doc) : doc_(doc) {}

  Node parse_document() {
    skip_prolog();
    if (at_end() || peek() != '<') fail("expected root element");
    Node root = parse_element();
    skip_misc();
    if (!at_end()) fail("content after the root element");
    return root;
  }

  /// Decodes entity and character references in raw character data.
  static std::string decode(std::string_view raw, std::size_t line = 0, std::size_t column = 0) {
    std::string out;
    for (std::size_t i = 0; i < raw.size(); ++i) {
      if (raw[i] != '&') {
        out.push_back(raw[i]);
        continue;
      }
      const auto semi = raw.find(';', i);
      if (semi == std::string_view::npos) throw XmlError("unterminated entity reference", line, column);
      const std::string_view ent = raw.substr(i + 1, semi - i - 1);
      if (ent == "amp") {
        out.push_back('&');
      } else if (ent == "lt") {
        out.push_back('<');
      } else if (ent == "gt") {
        out.push_back('>');
      } else if (ent == "quot") {
        out.push_back('"');
      } else if (ent == "apos") {
        out.push_back('\'');
      } else if (ent.size() > 1 && ent[0] == '#') {
        std::uint32_t cp = 0;
        const bool hex = ent[1] == 'x';
        const std::string_view digits = ent.substr(hex ? 2 : 1);
        if (digits.empty()) throw XmlError("empty character reference", line, column);
        for (char c : digits) {
          const int d = hex ? text::hex_value(c) : (c >= '0' && c <= '9' ? c - '0' : -1);
          if (d < 0 || cp > 0x10FFFF) throw XmlError("bad character reference", line, column);
          cp = cp * (hex ? 16 : 10) + static_cast<std::uint32_t>(d);
        }
        if (cp == 0 || cp > 0x10FFFF || (cp >= 0xD800 && cp <= 0xDFFF)) {
          throw XmlError("character reference out of range", line, column);
        }
        text::append_utf8(out, cp);
      } else {
        throw XmlError("unknown entity '&" + std::string(ent) + ";'", line, column);
      }
      i = semi;
    }
    return out;
  }

 private:
  bool at_end() const { return pos_ >= doc_.size(); }
  char peek() const { return doc_[pos_]; }
  bool starts(std::string_view s) const { return doc_.compare(pos_, s.size(), s) == 0; }

  [[noreturn]] void fail(const std::string& what) const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_ && i < doc_.size(); ++i) {
      if (doc_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    throw XmlError(what, line, col);
  }

  std::pair<std::size_t, std::size_t> position() const {
    std::size_t line = 1, col = 1;
    for (std::size_t i = 0; i < pos_; ++i) {
      if (doc_[i] == '\n') {
        ++line;
        col = 1;
      } else {
        ++col;
      }
    }
    return {line, col};
  }

  void advance(std::size_t n) { pos_ += n; }

  void skip_ws() {
    while (!at_end() && text::is_space(peek())) advance(1);
  }

  void skip_until(std::string_view terminator, const char* what) {
    const auto end = doc_.find(terminator, pos_);
    if (end == std::string_view::npos) fail(std::string("unterminated ") + what);
    pos_ = end + terminator.size();
  }

  void skip_misc() {
    while (true) {
      skip_ws();
      if (starts("<!--")) {
        skip_until("-->", "comment");
      } else if (starts("<?")) {
        skip_until("?>", "processing instruction");
      } else {
        return;
      }
    }
  }

  void skip_prolog() {
    if (starts("\xEF\xBB\xBF")) advance(3);
    skip_misc();
    if (starts("<!DOCTYPE")) fail("DTDs are not supported");
  }

  static bool name_char(char c) {
    return std::isalnum(static_cast<unsigned char>(c)) || c == '_' || c == '-' || c == '.' ||
           c == ':' || static_cast<unsigned char>(c) >= 0x80;
  }

  std::string parse_name() {
    const std::size_t begin = pos_;
    if (at_end() || std::isdigit(static_cast<unsigned char>(peek())) || peek() == '-' ||
        peek() == '.' || !name_char(peek())) {
      fail("expected a name");
    }
    while (!at_end() && name_char(peek())) advance(1);
    return std::string(doc_.substr(begin, pos_ - begin));
  }

  Node parse_element() {
    Node node;
    std::tie(node.line, node.column) = position();
    advance(1);  // '<'
    node.name = parse_name();
    while (true) {
      skip_ws();
      if (at_end()) fail("unterminated start tag <" + node.name + ">");
      if (starts("/>")) {
        advance(2);
        return node;
      }
      if (peek() == '>') {
        advance(1);
        break;
      }
      std::string key = parse_name();
      skip_ws();
      if (at_end() || peek() != '=') fail("expected '=' after attribute " + key);
      advance(1);
      skip_ws();
      if (at_end() || (peek() != '"' && peek() != '\'')) fail("expected quoted attribute value");
      const char quote = peek();
      advance(1);
      const auto end = doc_.find(quote, pos_);
      if (end == std::string_view::npos) fail("unterminated attribute value");
      const std::string_view raw = doc_.substr(pos_, end - pos_);
      if (raw.find('<') != std::string_view::npos) fail("'<' in attribute value");
      if (node.attribute(key)) fail("duplicate attribute " + key);
      auto [l, c] = position();
      node.attributes.emplace_back(std::move(key), decode(raw, l, c));
      pos_ = end + 1;
    }
    while (true) {
      if (at_end()) fail("unterminated element <" + node.name + ">");
      if (starts("</")) {
        advance(2);
        const std::string closing = parse_name();
        if (closing != node.name) fail("mismatched </" + closing + "> for <" + node.name + ">");
        skip_ws();
        if (at_end() || peek() != '>') fail("expected '>'");
        advance(1);
        return node;
      }
      if (starts("<!--")) {
        skip_until("-->", "comment");
      } else if (starts("<![CDATA[")) {
        advance(9);
        const auto end = doc_.find("]]>", pos_);
        if (end == std::string_view::npos) fail("unterminated CDATA section");
        std::string escaped = escape(doc_.substr(pos_, end - pos_));
        (node.children.empty() ? node.leading_raw : node.trailing_raw) += escaped;
        pos_ = end + 3;
      } else if (starts("<?")) {
        skip_until("?>", "processing instruction");
      } else if (peek() == '<') {
        node.children.push_back(parse_element());
      } else {
        const auto next = doc_.find('<', pos_);
        const std::size_t end = next == std::string_view::npos ? doc_.size() : next;
        (node.children.empty() ? node.leading_raw : node.trailing_raw) +=
            std::string(doc_.substr(pos_, end - pos_));
        pos_ = end;
      }
    }
  }

  std::string_view doc_;
  std::size_t pos_ = 0;
};

/// Throws XmlError with the 1-based position of the first problem.
inline Node parse(std::string_view doc) { return Parser(doc).parse_document(); }

}  // namespace mailweave::xml
