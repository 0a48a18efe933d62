#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mailweave/date.hpp"
#include "mailweave/identity.hpp"
#include "mailweave/message.hpp"
#include "mailweave/temporal.hpp"
#include "mailweave/text.hpp"
#include "mailweave/warehouse.hpp"

namespace mailweave {

// Mapping between the domain objects (messages, persons, institutions,
// reports) and warehouse records.

/// Institutions that come from the registry file carry no dates of their
/// own; their annotations start at this day.
inline const Date kRegistryEpoch = Date::from_ymd(1970, 1, 1);

enum class Maturity { REC, WG_NOTE, DRAFT };

inline std::string_view to_string(Maturity m) {
  switch (m) {
    case Maturity::REC: return "REC";
    case Maturity::WG_NOTE: return "WG_NOTE";
    case Maturity::DRAFT: return "DRAFT";
  }
  return "";
}

inline std::optional<Maturity> parse_maturity(std::string_view s) {
  const std::string u = text::ascii_lower(s);
  if (u == "rec" || u == "recommendation") return Maturity::REC;
  if (u == "wg_note" || u == "note" || u == "wg note") return Maturity::WG_NOTE;
  if (u == "draft" || u == "wd") return Maturity::DRAFT;
  return std::nullopt;
}

namespace detail {

inline void add_value(Record& r, std::string_view field, std::string_view value, Date start,
                      Date asserted, std::optional<Schema> ref = std::nullopt,
                      TemporalBound end = TemporalBound::running()) {
  Assertion a;
  a.field = std::string(field);
  a.value = std::string(value);
  a.start = start;
  a.end = end;
  a.asserted_at = asserted;
  a.ref = ref;
  assert_fact(r, a);
}

}  // namespace detail

// ------------------------------------------------------------------ email

/// A message holds from its sending day on; it is known from that day too,
/// which keeps ingestion deterministic.
inline Record message_to_record(const EmailMessage& m) {
  Record r{m.message_id, Schema::email, {}};
  const Date day = date_of(m.sent_at);
  auto add = [&](std::string_view field, std::string_view value) {
    detail::add_value(r, field, value, day, day);
  };
  add("list_id", m.list_id);
  add("from", m.sender.render());
  add("from_address", m.sender.addr_spec());
  if (m.sender.display_name) add("from_name", *m.sender.display_name);
  for (const auto& to : m.recipients) add("to", to.render());
  if (!m.subject_raw.empty()) add("subject", m.subject_raw);
  if (!m.subject_key.empty()) add("subject_key", m.subject_key);
  add("sent_at", format_timestamp(m.sent_at));
  if (m.in_reply_to) add("in_reply_to", *m.in_reply_to);
  if (!m.references.empty()) {
    std::string joined;
    for (const auto& ref : m.references) joined += (joined.empty() ? "" : " ") + ref;
    add("references", joined);
  }
  if (!m.body_text.empty()) add("body", m.body_text);
  return r;
}

inline EmailMessage record_to_message(const Record& r) {
  if (r.schema != Schema::email) throw SchemaError("record '" + r.record_id + "' is not an email");
  EmailMessage m;
  m.message_id = r.record_id;
  m.list_id = first_value(r, "list_id").value_or("");
  const std::string addr = first_value(r, "from_address").value_or("");
  const auto at = addr.rfind('@');
  if (at == std::string::npos) throw SchemaError("email '" + r.record_id + "' has no from_address");
  m.sender.local_part = addr.substr(0, at);
  m.sender.domain = addr.substr(at + 1);
  m.sender.key = address_key(m.sender.local_part, m.sender.domain);
  m.sender.display_name = first_value(r, "from_name");
  for (const auto& to : all_values(r, "to")) {
    try {
      m.recipients.push_back(normalize_address(to));
    } catch (const AddressError&) {
    }
  }
  m.subject_raw = first_value(r, "subject").value_or("");
  m.subject_key = first_value(r, "subject_key").value_or("");
  const auto sent = parse_iso_timestamp(first_value(r, "sent_at").value_or(""));
  if (!sent) throw SchemaError("email '" + r.record_id + "' has no valid sent_at");
  m.sent_at = *sent;
  m.in_reply_to = first_value(r, "in_reply_to");
  if (auto refs = first_value(r, "references")) m.references = text::split_whitespace(*refs);
  m.body_text = first_value(r, "body").value_or("");
  return m;
}

/// Stored messages ordered by (sent_at, message_id).
inline std::vector<EmailMessage> load_messages(const Warehouse& w) {
  std::vector<EmailMessage> out;
  for (const Record* r : w.list_records(Schema::email)) out.push_back(record_to_message(*r));
  std::stable_sort(out.begin(), out.end(), [](const EmailMessage& a, const EmailMessage& b) {
    return a.sent_at != b.sent_at ? a.sent_at < b.sent_at : a.message_id < b.message_id;
  });
  return out;
}

// ----------------------------------------------------------------- person

/// Fields written by resolution; everything else on a person record is
/// hand-entered and survives re-resolution.
inline constexpr std::string_view kResolvedFields[] = {"addresses", "canonical_name"};

inline Person record_to_person(const Record& r) {
  Person p;
  p.person_id = r.record_id;
  p.canonical_name = first_value(r, "canonical_name");
  for (const auto& a : all_values(r, "addresses")) p.addresses.insert(a);
  if (auto it = r.fields.find("functions"); it != r.fields.end()) p.functions = it->second;
  if (auto it = r.fields.find("affiliations"); it != r.fields.end()) p.affiliations = it->second;
  return p;
}

/// Replaces the resolution-owned fields of person records with `persons`.
/// An address holds from the first day it posted. Hand-entered fields on
/// existing records are kept; records left with no fields are removed.
inline void store_resolution(Warehouse& w, const std::vector<Person>& persons,
                             const std::vector<EmailMessage>& messages) {
  std::map<std::string, Date> first_seen;
  for (const auto& m : messages) {
    const Date d = date_of(m.sent_at);
    auto [it, fresh] = first_seen.emplace(m.sender.key, d);
    if (!fresh && d < it->second) it->second = d;
  }
  std::map<std::string, Record> next;
  for (const Record* r : w.list_records(Schema::person)) {
    Record kept = *r;
    for (auto f : kResolvedFields) kept.fields.erase(std::string(f));
    if (!kept.fields.empty()) next.emplace(kept.record_id, std::move(kept));
  }
  for (const auto& p : persons) {
    auto [it, fresh] = next.try_emplace(p.person_id, Record{p.person_id, Schema::person, {}});
    Record& r = it->second;
    Date earliest = first_seen.count(p.person_id) ? first_seen[p.person_id] : kRegistryEpoch;
    for (const auto& a : p.addresses) {
      const Date d = first_seen.count(a) ? first_seen[a] : kRegistryEpoch;
      earliest = std::min(earliest, d);
    }
    for (const auto& a : p.addresses) {
      const Date d = first_seen.count(a) ? first_seen[a] : kRegistryEpoch;
      detail::add_value(r, "addresses", a, d, d);
    }
    if (p.canonical_name) detail::add_value(r, "canonical_name", *p.canonical_name, earliest, earliest);
  }
  std::vector<Warehouse::Key> stale;
  for (const Record* r : w.list_records(Schema::person)) {
    if (!next.count(r->record_id)) stale.push_back({Schema::person, r->record_id});
  }
  w.remove_records(stale);
  std::vector<Record> out;
  for (auto& [id, r] : next) out.push_back(std::move(r));
  w.put_records(std::move(out));
}

// ------------------------------------------------------------ institution

inline Record institution_to_record(const Institution& inst) {
  Record r{inst.institution_id, Schema::institution, {}};
  detail::add_value(r, "name", inst.name, kRegistryEpoch, kRegistryEpoch);
  detail::add_value(r, "kind", to_string(inst.kind), kRegistryEpoch, kRegistryEpoch);
  for (const auto& d : inst.domains) detail::add_value(r, "domains", d, kRegistryEpoch, kRegistryEpoch);
  return r;
}

inline Institution record_to_institution(const Record& r) {
  Institution inst;
  inst.institution_id = r.record_id;
  inst.name = first_value(r, "name").value_or(r.record_id);
  inst.kind = parse_institution_kind(first_value(r, "kind").value_or("NA")).value_or(InstitutionKind::NA);
  for (const auto& d : all_values(r, "domains")) inst.domains.insert(d);
  return inst;
}

inline std::vector<Institution> load_registry(const Warehouse& w) {
  std::vector<Institution> out;
  for (const Record* r : w.list_records(Schema::institution)) out.push_back(record_to_institution(*r));
  return out;
}

/// Replaces all institution records by the registry.
inline void store_registry(Warehouse& w, const std::vector<Institution>& registry) {
  std::vector<Warehouse::Key> old;
  std::set<std::string> ids;
  for (const auto& inst : registry) ids.insert(inst.institution_id);
  for (const Record* r : w.list_records(Schema::institution)) {
    if (!ids.count(r->record_id)) old.push_back({Schema::institution, r->record_id});
  }
  w.remove_records(old);
  std::vector<Record> records;
  for (const auto& inst : registry) records.push_back(institution_to_record(inst));
  w.put_records(std::move(records));
}

// ----------------------------------------------------------------- report

struct Report {
  std::string report_id;
  std::string title;
  Maturity maturity = Maturity::DRAFT;
  Date pub_date;
  std::vector<std::string> authors;  // person ids
};

/// Report facts hold from the publication day.
inline Record report_to_record(const Report& rep, std::optional<Date> asserted = std::nullopt) {
  Record r{rep.report_id, Schema::report, {}};
  const Date known = asserted.value_or(rep.pub_date);
  detail::add_value(r, "title", rep.title, rep.pub_date, known);
  detail::add_value(r, "maturity", to_string(rep.maturity), rep.pub_date, known);
  detail::add_value(r, "pub_date", rep.pub_date.iso(), rep.pub_date, known);
  for (const auto& a : rep.authors) detail::add_value(r, "authors", a, rep.pub_date, known, Schema::person);
  return r;
}

inline Report record_to_report(const Record& r) {
  Report rep;
  rep.report_id = r.record_id;
  rep.title = first_value(r, "title").value_or("");
  rep.maturity = parse_maturity(first_value(r, "maturity").value_or("")).value_or(Maturity::DRAFT);
  const auto d = parse_iso_date(first_value(r, "pub_date").value_or(""));
  if (!d) throw SchemaError("report '" + r.record_id + "' has no valid pub_date");
  rep.pub_date = *d;
  rep.authors = all_values(r, "authors");
  return rep;
}

}  // namespace mailweave
