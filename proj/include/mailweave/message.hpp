#pragma once

#include <cstdint>
#include <iomanip>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "mailweave/address.hpp"
#include "mailweave/date.hpp"

namespace mailweave {

/// One cleaned list posting.
struct EmailMessage {
  std::string message_id;  // without angle brackets
  std::string list_id;
  RawAddress sender;
  std::vector<RawAddress> recipients;
  std::string subject_raw;
  std::string subject_key;
  Timestamp sent_at{};
  std::optional<std::string> in_reply_to;
  std::vector<std::string> references;  // header order
  std::string body_text;

  friend bool operator==(const EmailMessage&, const EmailMessage&) = default;
};

struct SkipEntry {
  std::string source;
  std::uint64_t position = 0;  // byte offset (mbox) or 1-based line number (records)
  std::string reason;

  friend bool operator==(const SkipEntry&, const SkipEntry&) = default;
};

/// accepted + skipped + duplicates_dropped == message blocks seen.
struct IngestReport {
  std::size_t accepted = 0;
  std::size_t skipped = 0;
  std::vector<SkipEntry> skip_reasons;
  std::size_t duplicates_dropped = 0;

  std::size_t total() const noexcept { return accepted + skipped + duplicates_dropped; }

  IngestReport& operator+=(const IngestReport& other) {
    accepted += other.accepted;
    skipped += other.skipped;
    duplicates_dropped += other.duplicates_dropped;
    skip_reasons.insert(skip_reasons.end(), other.skip_reasons.begin(), other.skip_reasons.end());
    return *this;
  }

  friend bool operator==(const IngestReport&, const IngestReport&) = default;
};

/// Line-record form of a message, the same shape parse_message_records reads.
inline nlohmann::json message_to_json(const EmailMessage& m) {
  nlohmann::json j;
  j["message_id"] = m.message_id;
  j["list_id"] = m.list_id;
  j["from"] = m.sender.render();
  j["to"] = nlohmann::json::array();
  for (const auto& r : m.recipients) j["to"].push_back(r.render());
  j["subject"] = m.subject_raw;
  j["date"] = format_timestamp(m.sent_at);
  if (m.in_reply_to) j["in_reply_to"] = *m.in_reply_to;
  j["references"] = m.references;
  j["body"] = m.body_text;
  return j;
}

inline nlohmann::json report_to_json(const IngestReport& r) {
  nlohmann::json j{{"accepted", r.accepted},
                   {"skipped", r.skipped},
                   {"duplicates_dropped", r.duplicates_dropped},
                   {"skip_reasons", nlohmann::json::array()}};
  for (const auto& s : r.skip_reasons) {
    j["skip_reasons"].push_back(
        {{"source", s.source}, {"position", s.position}, {"reason", s.reason}});
  }
  return j;
}

/// One summary line followed by one line per skipped block.
inline void write_report_records(std::ostream& out, const IngestReport& r) {
  out << nlohmann::json{{"record", "summary"},
                        {"accepted", r.accepted},
                        {"skipped", r.skipped},
                        {"duplicates_dropped", r.duplicates_dropped}}
             .dump()
      << '\n';
  for (const auto& s : r.skip_reasons) {
    out << nlohmann::json{{"record", "skip"},
                          {"source", s.source},
                          {"position", s.position},
                          {"reason", s.reason}}
               .dump()
        << '\n';
  }
}

inline void print_report_table(std::ostream& out, const IngestReport& r) {
  out << std::left << std::setw(20) << "accepted" << r.accepted << '\n'
      << std::setw(20) << "skipped" << r.skipped << '\n'
      << std::setw(20) << "duplicates_dropped" << r.duplicates_dropped << '\n';
  if (!r.skip_reasons.empty()) {
    out << "skipped blocks:\n";
    for (const auto& s : r.skip_reasons) {
      out << "  " << s.source << ':' << s.position << "  " << s.reason << '\n';
    }
  }
}

}  // namespace mailweave
