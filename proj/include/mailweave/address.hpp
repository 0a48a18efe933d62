#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mailweave/error.hpp"
#include "mailweave/text.hpp"

namespace mailweave {

/// One mailbox as it appeared in a header.
struct RawAddress {
  std::optional<std::string> display_name;
  std::string local_part;  // original case
  std::string domain;      // lowercase host after '@'
  std::string key;         // casefold(local_part) + '@' + domain

  /// local_part@domain with the original local-part case.
  std::string addr_spec() const { return local_part + "@" + domain; }

  /// `"Display" <local@domain>` or a bare addr-spec.
  std::string render() const {
    if (!display_name) return addr_spec();
    std::string out = "\"";
    for (char c : *display_name) {
      if (c == '"' || c == '\\') out.push_back('\\');
      out.push_back(c);
    }
    return out + "\" <" + addr_spec() + ">";
  }

  friend bool operator==(const RawAddress&, const RawAddress&) = default;
};

inline std::string address_key(std::string_view local_part, std::string_view domain) {
  return text::casefold(local_part) + "@" + std::string(domain);
}

namespace detail {

inline std::string unquote_display(std::string_view s) {
  std::string out;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    const char c = s[i];
    if (c == '"') {
      quoted = !quoted;
    } else if (c == '\\' && quoted && i + 1 < s.size()) {
      out.push_back(s[++i]);
    } else {
      out.push_back(c);
    }
  }
  return out;
}

/// Index of the last top-level `open` character, ignoring quoted text.
inline std::size_t find_unquoted_last(std::string_view s, char open) {
  std::size_t found = std::string_view::npos;
  bool quoted = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '\\' && quoted) {
      ++i;
    } else if (s[i] == '"') {
      quoted = !quoted;
    } else if (!quoted && s[i] == open) {
      found = i;
    }
  }
  return found;
}

}  // namespace detail

/// Parses one mailbox: `Name <addr>`, `"Quoted, Name" <addr>`,
/// `addr (Name)` or a bare addr-spec. Throws AddressError without an '@'.
inline RawAddress normalize_address(std::string_view raw) {
  std::string_view s = text::trim(raw);
  std::string display;
  std::string spec;
  const auto lt = detail::find_unquoted_last(s, '<');
  const auto gt = lt == std::string_view::npos ? lt : s.find('>', lt);
  if (lt != std::string_view::npos && gt != std::string_view::npos) {
    spec = std::string(s.substr(lt + 1, gt - lt - 1));
    display = detail::unquote_display(text::trim(s.substr(0, lt)));
  } else {
    const auto paren = detail::find_unquoted_last(s, '(');
    if (paren != std::string_view::npos) {
      const auto close = s.find(')', paren);
      display = std::string(s.substr(paren + 1, close == std::string_view::npos
                                                    ? std::string_view::npos
                                                    : close - paren - 1));
      spec = std::string(s.substr(0, paren));
    } else {
      spec = std::string(s);
    }
  }
  std::string_view addr = text::trim(spec);
  if (text::istarts_with(addr, "mailto:")) addr.remove_prefix(7);
  const auto at = addr.rfind('@');
  if (at == std::string_view::npos) {
    throw AddressError("no '@' in address '" + std::string(raw) + "'");
  }
  std::string local(text::trim(addr.substr(0, at)));
  std::string domain = text::ascii_lower(text::trim(addr.substr(at + 1)));
  while (!domain.empty() && domain.back() == '.') domain.pop_back();
  if (!domain.empty() && domain.front() == '[' && domain.back() == ']') {
    domain = domain.substr(1, domain.size() - 2);
  }
  if (local.empty() || domain.empty()) {
    throw AddressError("empty local part or domain in '" + std::string(raw) + "'");
  }
  for (char c : local + domain) {
    if (text::is_space(c) || c == '<' || c == '>' || c == ',') {
      throw AddressError("invalid character in address '" + std::string(raw) + "'");
    }
  }

  RawAddress out;
  const std::string name = text::collapse_whitespace(text::sanitize(text::decode_rfc2047(display)));
  if (!name.empty()) out.display_name = name;
  out.local_part = text::sanitize(local);
  out.domain = text::sanitize(domain);
  out.key = address_key(out.local_part, out.domain);
  return out;
}

/// Full host after '@', lowercase. No public-suffix truncation.
inline std::string domain_of(const RawAddress& address) { return address.domain; }

/// Splits an address-list header (To, Cc) and normalizes every mailbox.
/// Group syntax is flattened; entries without an addr-spec are dropped.
inline std::vector<RawAddress> parse_address_list(std::string_view header) {
  std::vector<RawAddress> out;
  std::vector<std::string> parts;
  std::string current;
  bool quoted = false;
  int angle = 0, paren = 0;
  for (std::size_t i = 0; i < header.size(); ++i) {
    const char c = header[i];
    if (c == '\\' && quoted && i + 1 < header.size()) {
      current.push_back(c);
      current.push_back(header[++i]);
      continue;
    }
    if (c == '"') quoted = !quoted;
    if (!quoted) {
      if (c == '<') ++angle;
      if (c == '>' && angle > 0) --angle;
      if (c == '(') ++paren;
      if (c == ')' && paren > 0) --paren;
      if (angle == 0 && paren == 0) {
        if (c == ',' || c == ';') {
          parts.push_back(current);
          current.clear();
          continue;
        }
        if (c == ':') {  // group display name
          current.clear();
          continue;
        }
      }
    }
    current.push_back(c);
  }
  parts.push_back(current);
  for (const auto& part : parts) {
    if (text::trim(part).empty()) continue;
    try {
      out.push_back(normalize_address(part));
    } catch (const AddressError&) {
    }
  }
  return out;
}

}  // namespace mailweave
