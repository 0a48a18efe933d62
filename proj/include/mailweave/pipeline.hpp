#pragma once

#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

#include "mailweave/identity.hpp"
#include "mailweave/ingest.hpp"
#include "mailweave/model.hpp"
#include "mailweave/warehouse.hpp"

namespace mailweave {

enum class ArchiveFormat { mbox, records };

/// ".jsonl" and ".json" names are message records; everything else is mbox.
inline ArchiveFormat archive_format_of(std::string_view name) {
  const std::string ext = text::ascii_lower(std::filesystem::path(std::string(name)).extension().string());
  return ext == ".jsonl" || ext == ".json" ? ArchiveFormat::records : ArchiveFormat::mbox;
}

inline IngestResult parse_archive(std::string_view data, std::string_view name, std::string_view list_id) {
  if (archive_format_of(name) == ArchiveFormat::records) {
    std::istringstream in{std::string(data)};
    return parse_message_records(in, list_id, name);
  }
  return parse_mbox_text(data, list_id, name);
}

inline IngestResult parse_archive_file(const std::filesystem::path& path, std::string_view list_id) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IngestError("cannot open " + path.string());
  std::string data{std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
  if (in.bad()) throw IngestError("read failure on " + path.string());
  return parse_archive(data, path.string(), list_id);
}

/// Cleans `parsed`, drops messages already stored, and stores the rest.
/// The returned report counts stored messages as accepted and both kinds of
/// drop as duplicates.
inline IngestReport store_messages(Warehouse& w, IngestResult parsed) {
  IngestResult cleaned = clean_messages(std::move(parsed.messages));
  IngestReport report = combine_reports(parsed.report, cleaned.report);
  std::vector<Record> records;
  for (const auto& m : cleaned.messages) {
    if (w.find_record(Schema::email, m.message_id)) {
      ++report.duplicates_dropped;
      continue;
    }
    records.push_back(message_to_record(m));
  }
  report.accepted = records.size();
  w.put_records(std::move(records));
  return report;
}

/// Re-runs identity resolution over every stored message.
inline std::vector<Person> resolve_warehouse(Warehouse& w, const ResolutionRules& rules) {
  const std::vector<EmailMessage> messages = load_messages(w);
  std::vector<Person> persons = resolve_persons(messages, rules);
  store_resolution(w, persons, messages);
  return persons;
}

}  // namespace mailweave
