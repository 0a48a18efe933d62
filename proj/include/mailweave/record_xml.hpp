#pragma once

#include <string>
#include <string_view>

#include "mailweave/error.hpp"
#include "mailweave/temporal.hpp"
#include "mailweave/xml.hpp"

namespace mailweave {

// Record documents. The layout is fixed byte for byte:
//
//   <?xml version="1.0" encoding="UTF-8"?>
//   <person id="RECORD-ID">
//     <functions>
//       <value>XML Corp. CEO
//         <TemporalInformation id="t1" asserted-at="2004-06-06" status="active">
//           <start><date>2001-01-01</date></start>
//           <end><date>2003-12-31</date></end>
//           <type>valid</type>
//         </TemporalInformation>
//       </value>
//     </functions>
//   </person>
//
// Two-space indentation, LF line ends, fields in name order, values and
// annotations in stored order. A running end is <end><running></running></end>.
// A superseded annotation adds superseded-by="ID"; a value that references a
// record adds ref="SCHEMA"; an annotation with a source adds a
// <source>..</source> line after <type>. Value text is escaped so that it
// never contains a literal line break: everything after the first literal
// newline inside <value> is formatting.

inline std::string serialize_record(const Record& record) {
  validate_record(record);
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<";
  const std::string_view root = to_string(record.schema);
  out += root;
  out += " id=\"" + xml::escape(record.record_id, true) + "\">\n";
  for (const auto& [name, values] : record.fields) {
    out += "  <" + name + ">\n";
    for (const auto& v : values) {
      out += "    <value";
      if (v.ref) out += " ref=\"" + std::string(to_string(*v.ref)) + "\"";
      out += ">";
      xml::append_escaped(out, v.value, false);
      out += "\n";
      for (const auto& a : v.annotations) {
        out += "      <TemporalInformation id=\"" + xml::escape(a.annotation_id, true) +
               "\" asserted-at=\"" + a.asserted_at.iso() + "\" status=\"" +
               (a.status == AnnotationStatus::active ? "active" : "superseded") + "\"";
        if (a.superseded_by) out += " superseded-by=\"" + xml::escape(*a.superseded_by, true) + "\"";
        out += ">\n";
        out += "        <start><date>" + a.start.date->iso() + "</date></start>\n";
        if (a.end.is_running()) {
          out += "        <end><running></running></end>\n";
        } else {
          out += "        <end><date>" + a.end.date->iso() + "</date></end>\n";
        }
        out += "        <type>" + xml::escape(a.event_type) + "</type>\n";
        if (a.source) out += "        <source>" + xml::escape(*a.source) + "</source>\n";
        out += "      </TemporalInformation>\n";
      }
      out += "    </value>\n";
    }
    out += "  </" + name + ">\n";
  }
  out += "</";
  out += root;
  out += ">\n";
  return out;
}

namespace detail {

[[noreturn]] inline void schema_violation(const xml::Node& at, const std::string& what) {
  throw SchemaError(what + " (line " + std::to_string(at.line) + ", column " +
                    std::to_string(at.column) + ")");
}

inline void require_blank(const xml::Node& node, std::string_view raw) {
  if (!text::trim(raw).empty()) schema_violation(node, "unexpected text in <" + node.name + ">");
}

inline void require_no_children(const xml::Node& node) {
  if (!node.children.empty()) {
    schema_violation(node.children.front(), "unknown element <" + node.children.front().name + ">");
  }
}

inline std::string element_text(const xml::Node& node) {
  require_no_children(node);
  return xml::Parser::decode(node.leading_raw, node.line, node.column);
}

inline void require_attributes(const xml::Node& node, std::initializer_list<std::string_view> allowed) {
  for (const auto& [k, v] : node.attributes) {
    bool ok = false;
    for (auto a : allowed) ok = ok || k == a;
    if (!ok) schema_violation(node, "unknown attribute '" + k + "' on <" + node.name + ">");
  }
}

inline Date date_child(const xml::Node& bound) {
  if (bound.children.size() != 1 || bound.children[0].name != "date") {
    schema_violation(bound, "<" + bound.name + "> must hold exactly one <date>");
  }
  require_blank(bound, bound.leading_raw);
  require_blank(bound, bound.trailing_raw);
  const std::string s = element_text(bound.children[0]);
  const auto d = parse_iso_date(s);
  if (!d) schema_violation(bound.children[0], "invalid date '" + s + "'");
  return *d;
}

inline TemporalAnnotation parse_annotation(const xml::Node& node) {
  require_attributes(node, {"id", "asserted-at", "status", "superseded-by"});
  require_blank(node, node.leading_raw);
  require_blank(node, node.trailing_raw);
  TemporalAnnotation a;
  const std::string* id = node.attribute("id");
  const std::string* asserted = node.attribute("asserted-at");
  const std::string* status = node.attribute("status");
  if (!id || !asserted || !status) {
    schema_violation(node, "<TemporalInformation> needs id, asserted-at and status");
  }
  a.annotation_id = *id;
  const auto at = parse_iso_date(*asserted);
  if (!at) schema_violation(node, "invalid asserted-at '" + *asserted + "'");
  a.asserted_at = *at;
  if (*status == "active") {
    a.status = AnnotationStatus::active;
  } else if (*status == "superseded") {
    a.status = AnnotationStatus::superseded;
  } else {
    schema_violation(node, "invalid status '" + *status + "'");
  }
  if (const std::string* by = node.attribute("superseded-by")) a.superseded_by = *by;
  bool seen_start = false, seen_end = false, seen_type = false, seen_source = false;
  for (const auto& child : node.children) {
    if (child.name == "start" && !seen_start) {
      a.start = TemporalBound::on(date_child(child));
      seen_start = true;
    } else if (child.name == "end" && !seen_end) {
      if (child.children.size() == 1 && child.children[0].name == "running") {
        require_blank(child, child.leading_raw);
        require_blank(child, child.trailing_raw);
        require_no_children(child.children[0]);
        require_blank(child.children[0], child.children[0].leading_raw);
        a.end = TemporalBound::running();
      } else {
        a.end = TemporalBound::on(date_child(child));
      }
      seen_end = true;
    } else if (child.name == "type" && !seen_type) {
      a.event_type = element_text(child);
      seen_type = true;
    } else if (child.name == "source" && !seen_source) {
      a.source = element_text(child);
      seen_source = true;
    } else {
      schema_violation(child, "unknown or repeated element <" + child.name + ">");
    }
  }
  if (!seen_start || !seen_end || !seen_type) {
    schema_violation(node, "<TemporalInformation> needs <start>, <end> and <type>");
  }
  return a;
}

}  // namespace detail

/// Inverse of serialize_record. Throws XmlError for malformed text and
/// SchemaError for well-formed text that is not a record document.
inline Record parse_record(std::string_view document) {
  const xml::Node root = xml::parse(document);
  Record record;
  const auto schema = parse_schema(root.name);
  if (!schema) detail::schema_violation(root, "unknown record schema <" + root.name + ">");
  record.schema = *schema;
  detail::require_attributes(root, {"id"});
  const std::string* id = root.attribute("id");
  if (!id) detail::schema_violation(root, "record element without id");
  record.record_id = *id;
  detail::require_blank(root, root.leading_raw);
  detail::require_blank(root, root.trailing_raw);
  for (const auto& field : root.children) {
    if (!is_valid_field_name(field.name) || record.fields.count(field.name)) {
      detail::schema_violation(field, "invalid or repeated field <" + field.name + ">");
    }
    detail::require_attributes(field, {});
    detail::require_blank(field, field.leading_raw);
    detail::require_blank(field, field.trailing_raw);
    auto& values = record.fields[field.name];
    for (const auto& vnode : field.children) {
      if (vnode.name != "value") detail::schema_violation(vnode, "unknown element <" + vnode.name + ">");
      detail::require_attributes(vnode, {"ref"});
      TemporalValue v;
      if (const std::string* ref = vnode.attribute("ref")) {
        v.ref = parse_schema(*ref);
        if (!v.ref) detail::schema_violation(vnode, "unknown ref schema '" + *ref + "'");
      }
      const std::string_view raw = vnode.leading_raw;
      const auto nl = raw.find('\n');
      v.value = xml::Parser::decode(raw.substr(0, nl), vnode.line, vnode.column);
      if (nl != std::string_view::npos) detail::require_blank(vnode, raw.substr(nl));
      detail::require_blank(vnode, vnode.trailing_raw);
      for (const auto& anode : vnode.children) {
        if (anode.name != "TemporalInformation") {
          detail::schema_violation(anode, "unknown element <" + anode.name + ">");
        }
        v.annotations.push_back(detail::parse_annotation(anode));
      }
      values.push_back(std::move(v));
    }
  }
  validate_record(record);
  return record;
}

/// Annotation-free document of a snapshot (the plain record shape).
inline std::string serialize_snapshot(const SnapshotView& view) {
  std::string out = "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n<";
  const std::string_view root = to_string(view.schema);
  out += root;
  out += " id=\"" + xml::escape(view.record_id, true) + "\">\n";
  for (const auto& [name, values] : view.fields) {
    out += "  <" + name + ">\n";
    for (const auto& v : values) out += "    <value>" + xml::escape(v) + "</value>\n";
    out += "  </" + name + ">\n";
  }
  out += "</";
  out += root;
  out += ">\n";
  return out;
}

}  // namespace mailweave
