#pragma once

#include <algorithm>
#include <charconv>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mailweave/date.hpp"
#include "mailweave/error.hpp"

namespace mailweave {

// The warehouse data model. Every stored value carries one or more temporal
// annotations: a day-granularity interval, an event type ("valid" for valid
// time, "transaction", or anything custom) and the date the annotation was
// asserted. Corrections never edit an interval in place: a new annotation is
// added and the old one is marked superseded, so every past state of
// knowledge can be replayed.

enum class BoundKind { date, running };

struct TemporalBound {
  BoundKind kind = BoundKind::running;
  std::optional<Date> date;

  static TemporalBound on(Date d) { return {BoundKind::date, d}; }
  static TemporalBound running() { return {BoundKind::running, std::nullopt}; }

  bool is_running() const noexcept { return kind == BoundKind::running; }

  /// Running bounds compare as +infinity.
  bool at_or_after(Date d) const noexcept { return is_running() || *date >= d; }

  friend bool operator==(const TemporalBound&, const TemporalBound&) = default;
};

/// "running" or YYYY-MM-DD; dates may use the loose Y-M-D form.
inline TemporalBound parse_bound(std::string_view s) {
  if (s == "running") return TemporalBound::running();
  return TemporalBound::on(parse_loose_date(s));
}

inline std::string to_string(const TemporalBound& b) {
  return b.is_running() ? "running" : b.date->iso();
}

enum class AnnotationStatus { active, superseded };

inline constexpr std::string_view kValidEvent = "valid";
inline constexpr std::string_view kTransactionEvent = "transaction";

struct TemporalAnnotation {
  std::string annotation_id;
  TemporalBound start = TemporalBound::on(Date{});  // always dated
  TemporalBound end;
  std::string event_type{kValidEvent};
  Date asserted_at;
  AnnotationStatus status = AnnotationStatus::active;
  std::optional<std::string> superseded_by;
  std::optional<std::string> source;

  /// Closed-closed interval membership.
  bool covers(Date d) const noexcept { return *start.date <= d && end.at_or_after(d); }

  friend bool operator==(const TemporalAnnotation&, const TemporalAnnotation&) = default;
};

enum class Schema { person, institution, email, report };

inline constexpr Schema kAllSchemas[] = {Schema::person, Schema::institution, Schema::email,
                                         Schema::report};

inline std::string_view to_string(Schema s) {
  switch (s) {
    case Schema::person: return "person";
    case Schema::institution: return "institution";
    case Schema::email: return "email";
    case Schema::report: return "report";
  }
  return "";
}

inline std::optional<Schema> parse_schema(std::string_view s) {
  for (Schema schema : kAllSchemas) {
    if (to_string(schema) == s) return schema;
  }
  return std::nullopt;
}

/// A value plus its annotations. `ref` marks the value as the id of a
/// record of that schema.
struct TemporalValue {
  std::string value;
  std::optional<Schema> ref;
  std::vector<TemporalAnnotation> annotations;

  const TemporalAnnotation* find(std::string_view id) const {
    for (const auto& a : annotations) {
      if (a.annotation_id == id) return &a;
    }
    return nullptr;
  }

  /// Transaction date at which `a` stopped being current knowledge, if it has.
  std::optional<Date> superseded_at(const TemporalAnnotation& a) const {
    if (a.status != AnnotationStatus::superseded || !a.superseded_by) return std::nullopt;
    if (const auto* next = find(*a.superseded_by)) return next->asserted_at;
    return std::nullopt;
  }

  friend bool operator==(const TemporalValue&, const TemporalValue&) = default;
};

struct Record {
  std::string record_id;
  Schema schema = Schema::person;
  std::map<std::string, std::vector<TemporalValue>> fields;

  friend bool operator==(const Record&, const Record&) = default;
};

/// Arguments of assert_fact.
struct Assertion {
  std::string field;
  std::string value;
  Date start;
  TemporalBound end = TemporalBound::running();
  std::string event_type{kValidEvent};
  Date asserted_at;
  std::optional<std::string> source;
  std::optional<Schema> ref;
};

namespace detail {

/// annotation ids are "t<n>"; the next one is one past the largest in use.
inline std::string next_annotation_id(const Record& record) {
  unsigned long long max = 0;
  for (const auto& [name, values] : record.fields) {
    for (const auto& v : values) {
      for (const auto& a : v.annotations) {
        const std::string_view id = a.annotation_id;
        if (id.size() < 2 || id[0] != 't') continue;
        unsigned long long n = 0;
        auto [p, ec] = std::from_chars(id.data() + 1, id.data() + id.size(), n);
        if (ec == std::errc{} && p == id.data() + id.size()) max = std::max(max, n);
      }
    }
  }
  return "t" + std::to_string(max + 1);
}

inline void check_interval(Date start, const TemporalBound& end) {
  if (!end.is_running() && *end.date < start) {
    throw IntervalError("inverted interval " + start.iso() + " .. " + end.date->iso());
  }
}

}  // namespace detail

/// Adds an active annotation to (field, value), creating the value if the
/// field does not hold it yet. Returns the new annotation id.
inline std::string assert_fact(Record& record, const Assertion& a) {
  detail::check_interval(a.start, a.end);
  TemporalAnnotation ann;
  ann.annotation_id = detail::next_annotation_id(record);
  ann.start = TemporalBound::on(a.start);
  ann.end = a.end;
  ann.event_type = a.event_type;
  ann.asserted_at = a.asserted_at;
  ann.source = a.source;
  auto& values = record.fields[a.field];
  auto it = std::find_if(values.begin(), values.end(), [&](const TemporalValue& v) {
    return v.value == a.value && v.ref == a.ref;
  });
  if (it == values.end()) {
    values.push_back({a.value, a.ref, {}});
    it = std::prev(values.end());
  }
  it->annotations.push_back(std::move(ann));
  return it->annotations.back().annotation_id;
}

/// Records that the interval of `target` was wrong: a new annotation with the
/// target's start, event type and source and the corrected end is added, and
/// the target is marked superseded by it. Nothing else on the target changes.
inline std::string retract_fact(Record& record, std::string_view field, std::string_view target,
                                const TemporalBound& corrected_end, Date asserted_at) {
  auto fit = record.fields.find(std::string(field));
  if (fit == record.fields.end()) {
    throw AnnotationError("record '" + record.record_id + "' has no field '" + std::string(field) + "'");
  }
  for (auto& value : fit->second) {
    for (std::size_t i = 0; i < value.annotations.size(); ++i) {
      if (value.annotations[i].annotation_id != target) continue;
      TemporalAnnotation& old = value.annotations[i];
      if (old.status == AnnotationStatus::superseded) {
        throw AnnotationError("annotation '" + std::string(target) + "' is already superseded");
      }
      if (asserted_at < old.asserted_at) {
        throw AnnotationError("retraction of '" + std::string(target) + "' asserted at " +
                              asserted_at.iso() + ", before the annotation itself (" +
                              old.asserted_at.iso() + ")");
      }
      detail::check_interval(*old.start.date, corrected_end);
      TemporalAnnotation next;
      next.annotation_id = detail::next_annotation_id(record);
      next.start = old.start;
      next.end = corrected_end;
      next.event_type = old.event_type;
      next.asserted_at = asserted_at;
      next.source = old.source;
      old.status = AnnotationStatus::superseded;
      old.superseded_by = next.annotation_id;
      std::string id = next.annotation_id;
      value.annotations.push_back(std::move(next));
      return id;
    }
  }
  throw AnnotationError("unknown annotation '" + std::string(target) + "' on field '" +
                        std::string(field) + "'");
}

/// Plain (annotation-free) view of a record at one valid date and one
/// knowledge date. Fields without visible values are absent.
struct SnapshotView {
  std::string record_id;
  Schema schema = Schema::person;
  std::map<std::string, std::vector<std::string>> fields;

  bool empty() const noexcept { return fields.empty(); }

  const std::vector<std::string>* get(std::string_view field) const {
    auto it = fields.find(std::string(field));
    return it == fields.end() ? nullptr : &it->second;
  }

  friend bool operator==(const SnapshotView&, const SnapshotView&) = default;
};

/// Whether annotation `a` of `value` was current knowledge at `tx`
/// (nullopt = latest knowledge).
inline bool known_at(const TemporalValue& value, const TemporalAnnotation& a,
                     std::optional<Date> tx) {
  if (!tx) return a.status == AnnotationStatus::active;
  if (a.asserted_at > *tx) return false;
  const auto ended = value.superseded_at(a);
  return !ended || *ended > *tx;
}

/// Whether `value` holds at `valid` according to knowledge at `tx`.
inline bool visible_at(const TemporalValue& value, Date valid, std::optional<Date> tx) {
  return std::any_of(value.annotations.begin(), value.annotations.end(),
                     [&](const TemporalAnnotation& a) {
                       return a.event_type == kValidEvent && known_at(value, a, tx) &&
                              a.covers(valid);
                     });
}

inline SnapshotView snapshot_asof(const Record& record, Date valid,
                                  std::optional<Date> tx = std::nullopt) {
  SnapshotView view{record.record_id, record.schema, {}};
  for (const auto& [name, values] : record.fields) {
    std::vector<std::string> visible;
    for (const auto& v : values) {
      if (visible_at(v, valid, tx)) visible.push_back(v.value);
    }
    if (!visible.empty()) view.fields.emplace(name, std::move(visible));
  }
  return view;
}

/// Values of a field regardless of time, in stored order.
inline std::vector<std::string> all_values(const Record& record, std::string_view field) {
  std::vector<std::string> out;
  if (auto it = record.fields.find(std::string(field)); it != record.fields.end()) {
    for (const auto& v : it->second) out.push_back(v.value);
  }
  return out;
}

inline std::optional<std::string> first_value(const Record& record, std::string_view field) {
  if (auto it = record.fields.find(std::string(field));
      it != record.fields.end() && !it->second.empty()) {
    return it->second.front().value;
  }
  return std::nullopt;
}

/// XML-safe names: [A-Za-z_][A-Za-z0-9_.-]*
inline bool is_valid_field_name(std::string_view name) {
  if (name.empty()) return false;
  auto alpha = [](char c) { return (c >= 'a' && c <= 'z') || (c >= 'A' && c <= 'Z') || c == '_'; };
  if (!alpha(name.front())) return false;
  return std::all_of(name.begin(), name.end(), [&](char c) {
    return alpha(c) || (c >= '0' && c <= '9') || c == '.' || c == '-';
  });
}

/// Throws SchemaError on any broken stored-record invariant.
inline void validate_record(const Record& record) {
  if (record.record_id.empty()) throw SchemaError("empty record id");
  for (char c : record.record_id) {
    if (static_cast<unsigned char>(c) < 0x20) {
      throw SchemaError("control character in record id '" + record.record_id + "'");
    }
  }
  std::set<std::string> ids;
  for (const auto& [name, values] : record.fields) {
    if (!is_valid_field_name(name)) throw SchemaError("invalid field name '" + name + "'");
    if (values.empty()) throw SchemaError("field '" + name + "' holds no values");
    for (const auto& v : values) {
      if (v.annotations.empty()) {
        throw SchemaError("value '" + v.value + "' of field '" + name + "' has no annotation");
      }
      for (const auto& a : v.annotations) {
        if (a.annotation_id.empty() || !ids.insert(a.annotation_id).second) {
          throw SchemaError("duplicate or empty annotation id '" + a.annotation_id + "'");
        }
        if (a.start.kind != BoundKind::date || !a.start.date) {
          throw SchemaError("annotation '" + a.annotation_id + "' has no start date");
        }
        if ((a.end.kind == BoundKind::date) != a.end.date.has_value()) {
          throw SchemaError("annotation '" + a.annotation_id + "' has an inconsistent end");
        }
        if (a.end.date && *a.end.date < *a.start.date) {
          throw SchemaError("annotation '" + a.annotation_id + "' has an inverted interval");
        }
        if ((a.status == AnnotationStatus::superseded) != a.superseded_by.has_value()) {
          throw SchemaError("annotation '" + a.annotation_id + "' status and link disagree");
        }
        if (a.event_type.empty()) {
          throw SchemaError("annotation '" + a.annotation_id + "' has no event type");
        }
      }
      for (const auto& a : v.annotations) {
        if (a.superseded_by && !v.find(*a.superseded_by)) {
          throw SchemaError("annotation '" + a.annotation_id + "' is superseded by unknown '" +
                            *a.superseded_by + "'");
        }
      }
    }
  }
}

}  // namespace mailweave
