#pragma once

#include <istream>
#include <string>

#include <json.hpp>

#include "mailweave/error.hpp"
#include "mailweave/model.hpp"
#include "mailweave/temporal.hpp"
#include "mailweave/warehouse.hpp"

namespace mailweave {

// Hand-entered facts, one JSON object per line:
//
//   {"op":"create","schema":"person","id":"jdoe"}
//   {"op":"assert","schema":"person","id":"jdoe","field":"functions",
//    "value":"XML Corp. CEO","start":"2001-1-1","end":"2003-31-12",
//    "type":"valid","asserted_at":"2004-6-6"}
//   {"op":"retract","schema":"person","id":"jdoe","field":"functions",
//    "value":"XML Corp. CEO","start":"2001-1-1","end":"2003-30-11",
//    "asserted_at":"2005-4-10"}
//   {"op":"report","id":"xquery-rec","title":"XQuery 1.0","maturity":"REC",
//    "pub_date":"2007-01-23","authors":["alice@ibm.com"]}
//
// Dates use the loose Y-M-D form. "end" defaults to "running" and "type" to
// "valid". A retraction names its target either by "annotation" id or by
// the active annotation of "value" whose interval starts at "start".
// Optional keys: "source" (free text), "ref" (schema of a referenced record).

struct FactStats {
  std::size_t created = 0;
  std::size_t asserted = 0;
  std::size_t retracted = 0;
  std::size_t reports = 0;
};

namespace detail {

inline std::string required(const nlohmann::json& j, const char* key) {
  auto it = j.find(key);
  if (it == j.end() || !it->is_string()) throw SchemaError(std::string("missing string '") + key + "'");
  return it->get<std::string>();
}

inline Schema schema_field(const nlohmann::json& j) {
  const std::string s = required(j, "schema");
  const auto schema = parse_schema(s);
  if (!schema) throw SchemaError("unknown schema '" + s + "'");
  return *schema;
}

inline std::string find_retraction_target(const Record& r, const std::string& field,
                                          const std::string& value, Date start) {
  auto it = r.fields.find(field);
  if (it != r.fields.end()) {
    for (const auto& v : it->second) {
      if (v.value != value) continue;
      for (const auto& a : v.annotations) {
        if (a.status == AnnotationStatus::active && *a.start.date == start) return a.annotation_id;
      }
    }
  }
  throw AnnotationError("no active annotation of '" + value + "' starting " + start.iso());
}

inline void apply_fact(Warehouse& w, const nlohmann::json& j, FactStats& stats) {
  const std::string op = required(j, "op");
  if (op == "create") {
    const Schema schema = schema_field(j);
    const std::string id = required(j, "id");
    if (!w.find_record(schema, id)) {
      w.put_record(Record{id, schema, {}});
      ++stats.created;
    }
  } else if (op == "assert") {
    const Schema schema = schema_field(j);
    Assertion a;
    a.field = required(j, "field");
    a.value = required(j, "value");
    a.start = parse_loose_date(required(j, "start"));
    a.end = parse_bound(j.value("end", std::string("running")));
    a.event_type = j.value("type", std::string(kValidEvent));
    a.asserted_at = parse_loose_date(required(j, "asserted_at"));
    if (j.contains("source")) a.source = required(j, "source");
    if (j.contains("ref")) {
      a.ref = parse_schema(required(j, "ref"));
      if (!a.ref) throw SchemaError("unknown ref schema");
    }
    w.assert_fact(schema, required(j, "id"), a);
    ++stats.asserted;
  } else if (op == "retract") {
    const Schema schema = schema_field(j);
    const std::string id = required(j, "id");
    const std::string field = required(j, "field");
    std::string target;
    if (j.contains("annotation")) {
      target = required(j, "annotation");
    } else {
      target = find_retraction_target(w.get_record(schema, id), field, required(j, "value"),
                                      parse_loose_date(required(j, "start")));
    }
    w.retract_fact(schema, id, field, target, parse_bound(required(j, "end")),
                   parse_loose_date(required(j, "asserted_at")));
    ++stats.retracted;
  } else if (op == "report") {
    Report rep;
    rep.report_id = required(j, "id");
    rep.title = j.value("title", rep.report_id);
    const auto maturity = parse_maturity(required(j, "maturity"));
    if (!maturity) throw SchemaError("unknown maturity");
    rep.maturity = *maturity;
    rep.pub_date = parse_loose_date(required(j, "pub_date"));
    for (const auto& a : j.value("authors", nlohmann::json::array())) rep.authors.push_back(a.get<std::string>());
    std::optional<Date> asserted;
    if (j.contains("asserted_at")) asserted = parse_loose_date(required(j, "asserted_at"));
    w.put_record(report_to_record(rep, asserted));
    ++stats.reports;
  } else {
    throw SchemaError("unknown op '" + op + "'");
  }
}

}  // namespace detail

/// Applies every line in order. The first failing line aborts with an error
/// naming it; lines before it stay applied.
inline FactStats apply_facts(Warehouse& w, std::istream& in) {
  FactStats stats;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    const auto trimmed = text::trim(line);
    if (trimmed.empty() || trimmed.front() == '#') continue;
    const std::string where = "facts line " + std::to_string(number) + ": ";
    try {
      detail::apply_fact(w, nlohmann::json::parse(trimmed), stats);
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + e.what());
    } catch (const IoError&) {
      throw;
    } catch (const NotFoundError& e) {
      throw NotFoundError(where + e.what());
    } catch (const IntervalError& e) {
      throw IntervalError(where + e.what());
    } catch (const AnnotationError& e) {
      throw AnnotationError(where + e.what());
    } catch (const Error& e) {
      throw SchemaError(where + e.what());
    }
  }
  return stats;
}

}  // namespace mailweave
