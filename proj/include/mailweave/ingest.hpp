#pragma once

#include <istream>
#include <iterator>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <variant>
#include <vector>

#include <json.hpp>

#include "mailweave/address.hpp"
#include "mailweave/date.hpp"
#include "mailweave/error.hpp"
#include "mailweave/message.hpp"
#include "mailweave/text.hpp"

namespace mailweave {

struct IngestResult {
  std::vector<EmailMessage> messages;
  IngestReport report;
};

/// Case-folds, then repeatedly strips leading "re:", "fwd:", "fw:" and
/// leading bracketed list tags. Internal whitespace runs collapse to one space.
inline std::string subject_key(std::string_view subject) {
  std::string s = text::collapse_whitespace(text::casefold(subject));
  static constexpr std::string_view kPrefixes[] = {"re:", "fwd:", "fw:"};
  bool changed = true;
  while (changed) {
    changed = false;
    for (auto p : kPrefixes) {
      if (s.compare(0, p.size(), p) == 0) {
        s = std::string(text::trim(std::string_view(s).substr(p.size())));
        changed = true;
      }
    }
    if (!s.empty() && s.front() == '[') {
      const auto close = s.find(']');
      if (close != std::string::npos) {
        s = std::string(text::trim(std::string_view(s).substr(close + 1)));
        changed = true;
      }
    }
  }
  return s;
}

namespace detail {

struct HeaderField {
  std::string name;
  std::string value;  // unfolded, raw bytes
};

class HeaderBlock {
 public:
  void add(std::string name, std::string value) {
    fields_.push_back({std::move(name), std::move(value)});
  }

  void continue_last(std::string_view more) {
    if (!fields_.empty()) fields_.back().value += more;
  }

  bool empty() const { return fields_.empty(); }

  const std::string* get(std::string_view name) const {
    for (const auto& f : fields_) {
      if (text::iequals(f.name, name)) return &f.value;
    }
    return nullptr;
  }

  std::vector<const std::string*> all(std::string_view name) const {
    std::vector<const std::string*> out;
    for (const auto& f : fields_) {
      if (text::iequals(f.name, name)) out.push_back(&f.value);
    }
    return out;
  }

 private:
  std::vector<HeaderField> fields_;
};

/// Parses header lines; returns the index of the first body line.
inline std::size_t parse_headers(const std::vector<std::string>& lines, std::size_t begin,
                                 std::size_t end, HeaderBlock& headers) {
  std::size_t i = begin;
  for (; i < end; ++i) {
    const std::string& line = lines[i];
    if (line.empty()) return i + 1;
    if (text::is_space(line.front())) {
      headers.continue_last(line);
      continue;
    }
    const auto colon = line.find(':');
    if (colon == std::string::npos || colon == 0) continue;
    const std::string name = line.substr(0, colon);
    bool valid = true;
    for (char c : name) valid = valid && c > 32 && c < 127;
    if (!valid) continue;
    headers.add(name, std::string(text::trim(std::string_view(line).substr(colon + 1))));
  }
  return i;
}

/// Tokens between angle brackets, in order.
inline std::vector<std::string> bracketed_ids(std::string_view value) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while ((i = value.find('<', i)) != std::string_view::npos) {
    const auto close = value.find('>', i + 1);
    if (close == std::string_view::npos) break;
    const auto id = text::trim(value.substr(i + 1, close - i - 1));
    if (!id.empty()) out.emplace_back(id);
    i = close + 1;
  }
  return out;
}

inline std::string message_id_of(std::string_view value) {
  const auto ids = bracketed_ids(value);
  if (!ids.empty()) return ids.front();
  const auto tokens = text::split_whitespace(value);
  return tokens.empty() ? std::string{} : tokens.front();
}

/// Value of a `name=value` parameter in a structured header.
inline std::string header_param(std::string_view header, std::string_view name) {
  std::size_t i = 0;
  while ((i = header.find(';', i)) != std::string_view::npos) {
    ++i;
    auto rest = text::trim(header.substr(i));
    if (!text::istarts_with(rest, name)) continue;
    rest = text::trim(rest.substr(name.size()));
    if (rest.empty() || rest.front() != '=') continue;
    rest = text::trim(rest.substr(1));
    if (!rest.empty() && rest.front() == '"') {
      const auto close = rest.find('"', 1);
      return std::string(rest.substr(1, close == std::string_view::npos ? close : close - 1));
    }
    const auto stop = rest.find_first_of("; \t");
    return std::string(rest.substr(0, stop));
  }
  return {};
}

inline std::string join_lines(const std::vector<std::string>& lines, std::size_t begin,
                              std::size_t end) {
  std::string out;
  for (std::size_t i = begin; i < end; ++i) {
    out += lines[i];
    out.push_back('\n');
  }
  return out;
}

/// First text part of a (possibly nested) multipart body, or the whole body
/// when it is not multipart.
inline std::string first_text_part(const HeaderBlock& headers, const std::vector<std::string>& lines,
                                   std::size_t begin, std::size_t end, int depth = 0) {
  const std::string* ctype = headers.get("Content-Type");
  if (!ctype || depth > 8 || !text::istarts_with(text::trim(*ctype), "multipart/")) {
    return join_lines(lines, begin, end);
  }
  const std::string boundary = header_param(*ctype, "boundary");
  if (boundary.empty()) return join_lines(lines, begin, end);
  const std::string delimiter = "--" + boundary;
  std::vector<std::pair<std::size_t, std::size_t>> parts;
  std::size_t part_start = 0;
  bool in_part = false;
  for (std::size_t i = begin; i < end; ++i) {
    const std::string_view line = text::trim(lines[i]);
    if (line == delimiter || line == delimiter + "--") {
      if (in_part) parts.emplace_back(part_start, i);
      in_part = line == delimiter;
      part_start = i + 1;
      if (!in_part) break;
    }
  }
  if (in_part) parts.emplace_back(part_start, end);
  for (const auto& [pb, pe] : parts) {
    HeaderBlock part_headers;
    const std::size_t body = parse_headers(lines, pb, pe, part_headers);
    const std::string* pct = part_headers.get("Content-Type");
    const std::string type = pct ? text::ascii_lower(text::trim(*pct)) : "text/plain";
    if (type.rfind("multipart/", 0) == 0) {
      std::string nested = first_text_part(part_headers, lines, body, pe, depth + 1);
      if (!nested.empty()) return nested;
    } else if (type.rfind("text/", 0) == 0) {
      return join_lines(lines, body, pe);
    }
  }
  return {};
}

/// Builds a message from header and body lines, or returns a skip reason.
inline std::variant<EmailMessage, std::string> build_message(const std::vector<std::string>& lines,
                                                             std::string_view list_id) {
  HeaderBlock headers;
  const std::size_t body = parse_headers(lines, 0, lines.size(), headers);
  if (headers.empty()) return std::string("no header fields");

  EmailMessage m;
  m.list_id = std::string(list_id);
  const std::string* mid = headers.get("Message-ID");
  if (!mid) mid = headers.get("Message-Id");
  if (!mid || message_id_of(*mid).empty()) return std::string("missing Message-ID");
  m.message_id = text::sanitize(message_id_of(*mid));

  const std::string* from = headers.get("From");
  if (!from) return std::string("missing From");
  try {
    m.sender = normalize_address(*from);
  } catch (const AddressError& e) {
    return std::string("invalid From: ") + e.what();
  }

  const std::string* date = headers.get("Date");
  if (!date) return std::string("missing Date");
  const auto sent = parse_rfc5322_date(*date);
  if (!sent) return "unparseable Date '" + text::sanitize(*date) + "'";
  m.sent_at = *sent;

  for (const char* name : {"To", "Cc"}) {
    for (const std::string* v : headers.all(name)) {
      auto addrs = parse_address_list(*v);
      m.recipients.insert(m.recipients.end(), addrs.begin(), addrs.end());
    }
  }
  if (const std::string* s = headers.get("Subject")) {
    m.subject_raw = std::string(text::trim(text::sanitize(text::decode_rfc2047(*s))));
  }
  m.subject_key = subject_key(m.subject_raw);
  if (const std::string* irt = headers.get("In-Reply-To")) {
    auto ids = bracketed_ids(*irt);
    if (!ids.empty()) {
      m.in_reply_to = text::sanitize(ids.front());
    } else if (irt->find('@') != std::string::npos) {
      m.in_reply_to = text::sanitize(message_id_of(*irt));
    }
  }
  if (const std::string* refs = headers.get("References")) {
    auto ids = bracketed_ids(*refs);
    if (ids.empty()) ids = text::split_whitespace(*refs);
    for (auto& id : ids) m.references.push_back(text::sanitize(id));
  }
  m.body_text = text::sanitize(first_text_part(headers, lines, body, lines.size()));
  return m;
}

inline bool is_from_separator(std::string_view line) { return line.rfind("From ", 0) == 0; }

/// ">From ", ">>From " ... lose one '>' (mboxrd quoting).
inline void unquote_from(std::string& line) {
  std::size_t n = 0;
  while (n < line.size() && line[n] == '>') ++n;
  if (n > 0 && line.compare(n, 5, "From ") == 0) line.erase(0, 1);
}

}  // namespace detail

/// Splits RFC 4155 mbox text into messages. A separator is a line starting
/// with "From " at the start of the input or after an empty line. Malformed
/// messages are skipped and recorded with the byte offset of their separator.
inline IngestResult parse_mbox_text(std::string_view data, std::string_view list_id,
                                    std::string_view source = "") {
  IngestResult result;
  struct Block {
    std::uint64_t offset;
    std::vector<std::string> lines;
  };
  std::vector<Block> blocks;
  bool previous_blank = true;
  std::size_t pos = 0;
  while (pos < data.size()) {
    auto nl = data.find('\n', pos);
    const std::size_t next = nl == std::string_view::npos ? data.size() : nl + 1;
    std::string line(data.substr(pos, (nl == std::string_view::npos ? data.size() : nl) - pos));
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (previous_blank && detail::is_from_separator(line)) {
      if (!blocks.empty() && !blocks.back().lines.empty() && blocks.back().lines.back().empty()) {
        blocks.back().lines.pop_back();
      }
      blocks.push_back({pos, {}});
    } else if (!blocks.empty()) {
      detail::unquote_from(line);
      blocks.back().lines.push_back(line);
    }
    previous_blank = line.empty();
    pos = next;
  }
  if (!blocks.empty() && !blocks.back().lines.empty() && blocks.back().lines.back().empty()) {
    blocks.back().lines.pop_back();
  }
  for (const auto& block : blocks) {
    auto built = detail::build_message(block.lines, list_id);
    if (auto* m = std::get_if<EmailMessage>(&built)) {
      result.messages.push_back(std::move(*m));
      ++result.report.accepted;
    } else {
      ++result.report.skipped;
      result.report.skip_reasons.push_back(
          {std::string(source), block.offset, std::get<std::string>(built)});
    }
  }
  return result;
}

/// Throws IngestError when the stream cannot be read.
inline IngestResult parse_mbox(std::istream& in, std::string_view list_id,
                               std::string_view source = "") {
  if (!in) throw IngestError("unreadable stream " + std::string(source));
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IngestError("read failure on " + std::string(source));
  return parse_mbox_text(data, list_id, source);
}

namespace detail {

inline std::variant<EmailMessage, std::string> message_from_record(const nlohmann::json& j,
                                                                   std::string_view list_id) {
  if (!j.is_object()) return std::string("record is not an object");
  auto str = [&](const char* key) -> const std::string* {
    auto it = j.find(key);
    return it != j.end() && it->is_string() ? it->get_ptr<const std::string*>() : nullptr;
  };
  EmailMessage m;
  const std::string* id = str("message_id");
  if (!id || text::trim(*id).empty()) return std::string("missing message_id");
  m.message_id = text::sanitize(message_id_of(*id));
  const std::string* list = str("list_id");
  m.list_id = list && !list->empty() ? *list : std::string(list_id);
  const std::string* from = str("from");
  if (!from) return std::string("missing from");
  try {
    m.sender = normalize_address(*from);
  } catch (const AddressError& e) {
    return std::string("invalid from: ") + e.what();
  }
  const std::string* date = str("date");
  if (!date) return std::string("missing date");
  const auto ts = parse_iso_timestamp(*date);
  if (!ts) return "unparseable date '" + *date + "'";
  m.sent_at = *ts;
  if (auto it = j.find("to"); it != j.end()) {
    if (!it->is_array()) return std::string("'to' is not an array");
    for (const auto& r : *it) {
      if (!r.is_string()) return std::string("'to' entry is not a string");
      try {
        m.recipients.push_back(normalize_address(r.get<std::string>()));
      } catch (const AddressError& e) {
        return std::string("invalid recipient: ") + e.what();
      }
    }
  }
  if (const std::string* s = str("subject")) m.subject_raw = text::sanitize(*s);
  m.subject_key = subject_key(m.subject_raw);
  if (auto it = j.find("in_reply_to"); it != j.end() && !it->is_null()) {
    if (!it->is_string()) return std::string("'in_reply_to' is not a string");
    if (!it->get<std::string>().empty()) m.in_reply_to = text::sanitize(message_id_of(it->get<std::string>()));
  }
  if (auto it = j.find("references"); it != j.end() && !it->is_null()) {
    if (!it->is_array()) return std::string("'references' is not an array");
    for (const auto& r : *it) {
      if (!r.is_string()) return std::string("'references' entry is not a string");
      m.references.push_back(text::sanitize(message_id_of(r.get<std::string>())));
    }
  }
  if (const std::string* b = str("body")) m.body_text = text::sanitize(*b);
  return m;
}

}  // namespace detail

/// One JSON object per line (see message_to_json). Blank lines are ignored;
/// bad lines are skipped and recorded with their 1-based line number.
inline IngestResult parse_message_records(std::istream& in, std::string_view list_id,
                                          std::string_view source = "") {
  if (!in) throw IngestError("unreadable stream " + std::string(source));
  IngestResult result;
  std::string line;
  std::uint64_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (text::trim(line).empty()) continue;
    std::variant<EmailMessage, std::string> built = std::string();
    try {
      built = detail::message_from_record(nlohmann::json::parse(line), list_id);
    } catch (const nlohmann::json::parse_error& e) {
      built = std::string("malformed record: ") + e.what();
    }
    if (auto* m = std::get_if<EmailMessage>(&built)) {
      result.messages.push_back(std::move(*m));
      ++result.report.accepted;
    } else {
      ++result.report.skipped;
      result.report.skip_reasons.push_back({std::string(source), number, std::get<std::string>(built)});
    }
  }
  if (in.bad()) throw IngestError("read failure on " + std::string(source));
  return result;
}

/// Drops repeated message ids (first occurrence wins) and recomputes
/// subject keys. Output order is input order.
inline IngestResult clean_messages(std::vector<EmailMessage> messages) {
  IngestResult result;
  std::set<std::string> seen;
  for (auto& m : messages) {
    if (!seen.insert(m.message_id).second) {
      ++result.report.duplicates_dropped;
      continue;
    }
    m.subject_key = subject_key(m.subject_raw);
    result.messages.push_back(std::move(m));
  }
  result.report.accepted = result.messages.size();
  return result;
}

/// parse + clean, with the parse report's accepted count moved to
/// duplicates_dropped for dropped duplicates.
inline IngestReport combine_reports(const IngestReport& parsed, const IngestReport& cleaned) {
  IngestReport out = parsed;
  out.accepted = cleaned.accepted;
  out.duplicates_dropped += cleaned.duplicates_dropped;
  return out;
}

}  // namespace mailweave
