#pragma once

#include <algorithm>
#include <cctype>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <variant>

#include "mailweave/error.hpp"
#include "mailweave/graph.hpp"
#include "mailweave/result_table.hpp"
#include "mailweave/warehouse.hpp"
#include "mailweave/xml.hpp"

namespace mailweave {

enum class ExportFormat { graphml, dot, pajek, csv, jsonl };

inline std::string_view to_string(ExportFormat f) {
  switch (f) {
    case ExportFormat::graphml: return "graphml";
    case ExportFormat::dot: return "dot";
    case ExportFormat::pajek: return "pajek";
    case ExportFormat::csv: return "csv";
    case ExportFormat::jsonl: return "jsonl";
  }
  return "";
}

inline std::optional<ExportFormat> parse_export_format(std::string_view s) {
  const std::string l = text::ascii_lower(s);
  if (l == "net") return ExportFormat::pajek;
  for (auto f : {ExportFormat::graphml, ExportFormat::dot, ExportFormat::pajek, ExportFormat::csv,
                 ExportFormat::jsonl}) {
    if (to_string(f) == l) return f;
  }
  return std::nullopt;
}

inline bool is_graph_format(ExportFormat f) {
  return f == ExportFormat::graphml || f == ExportFormat::dot || f == ExportFormat::pajek;
}

inline std::string_view file_extension(ExportFormat f) {
  switch (f) {
    case ExportFormat::graphml: return ".graphml";
    case ExportFormat::dot: return ".dot";
    case ExportFormat::pajek: return ".net";
    case ExportFormat::csv: return ".csv";
    case ExportFormat::jsonl: return ".jsonl";
  }
  return "";
}

inline std::string_view media_type(ExportFormat f) {
  switch (f) {
    case ExportFormat::graphml: return "application/graphml+xml";
    case ExportFormat::dot: return "text/vnd.graphviz";
    case ExportFormat::pajek: return "text/plain";
    case ExportFormat::csv: return "text/csv";
    case ExportFormat::jsonl: return "application/x-ndjson";
  }
  return "application/octet-stream";
}

enum class LabelField { label, id };

struct ExportOptions {
  LabelField label_field = LabelField::label;
  std::string weight_attribute = "weight";  // [A-Za-z_][A-Za-z0-9_]*
};

struct ExportTarget {
  ExportFormat format = ExportFormat::graphml;
  std::filesystem::path path;
  ExportOptions options;
};

namespace detail {

inline void check_weight_attribute(const std::string& name) {
  const bool ok = !name.empty() && (std::isalpha(static_cast<unsigned char>(name[0])) || name[0] == '_') &&
                  std::all_of(name.begin(), name.end(), [](char c) {
                    return std::isalnum(static_cast<unsigned char>(c)) || c == '_';
                  });
  if (!ok) throw ExportError("invalid weight attribute name '" + name + "'");
}

inline const std::string& node_label(const GraphNode& n, const ExportOptions& o) {
  return o.label_field == LabelField::id || n.label.empty() ? n.id : n.label;
}

inline std::string dot_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) {
    if (c == '"' || c == '\\') out.push_back('\\');
    if (c == '\n') {
      out += "\\n";
      continue;
    }
    out.push_back(c);
  }
  return out + "\"";
}

// Pajek has no escapes: double quotes become single quotes, line breaks spaces.
inline std::string pajek_quote(std::string_view s) {
  std::string out = "\"";
  for (char c : s) out.push_back(c == '"' ? '\'' : (c == '\n' || c == '\r' ? ' ' : c));
  return out + "\"";
}

}  // namespace detail

/// GraphML 1.0. Nodes are n0.. in node order; keys d0 = label, d1 = entity
/// id (both string, on nodes) and d2 = weight (int, on edges).
inline std::string render_graphml(const SocialGraph& g, const ExportOptions& o = {}) {
  detail::check_weight_attribute(o.weight_attribute);
  std::map<std::string, std::size_t> index;
  for (std::size_t i = 0; i < g.nodes.size(); ++i) index.emplace(g.nodes[i].id, i);
  std::string out =
      "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
      "<graphml xmlns=\"http://graphml.graphdrawing.org/xmlns\"\n"
      "         xmlns:xsi=\"http://www.w3.org/2001/XMLSchema-instance\"\n"
      "         xsi:schemaLocation=\"http://graphml.graphdrawing.org/xmlns "
      "http://graphml.graphdrawing.org/xmlns/1.0/graphml.xsd\">\n"
      "  <key id=\"d0\" for=\"node\" attr.name=\"label\" attr.type=\"string\"/>\n"
      "  <key id=\"d1\" for=\"node\" attr.name=\"entity\" attr.type=\"string\"/>\n";
  out += "  <key id=\"d2\" for=\"edge\" attr.name=\"" + o.weight_attribute + "\" attr.type=\"int\"/>\n";
  out += std::string("  <graph id=\"G\" edgedefault=\"") + (g.directed ? "directed" : "undirected") + "\">\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    const auto& n = g.nodes[i];
    out += "    <node id=\"n" + std::to_string(i) + "\">";
    out += "<data key=\"d0\">" + xml::escape(detail::node_label(n, o), false) + "</data>";
    out += "<data key=\"d1\">" + xml::escape(n.id, false) + "</data></node>\n";
  }
  for (const auto& e : g.edges) {
    const auto s = index.find(e.source), t = index.find(e.target);
    if (s == index.end() || t == index.end()) throw ExportError("edge endpoint missing from node list");
    out += "    <edge source=\"n" + std::to_string(s->second) + "\" target=\"n" + std::to_string(t->second) +
           "\"><data key=\"d2\">" + std::to_string(e.weight) + "</data></edge>\n";
  }
  out += "  </graph>\n</graphml>\n";
  return out;
}

/// Graphviz DOT; node statements carry the label, edges the weight.
inline std::string render_dot(const SocialGraph& g, const ExportOptions& o = {}) {
  detail::check_weight_attribute(o.weight_attribute);
  const char* arrow = g.directed ? " -> " : " -- ";
  std::string out = std::string(g.directed ? "digraph" : "graph") + " mailweave {\n";
  for (const auto& n : g.nodes) {
    out += "  " + detail::dot_quote(n.id) + " [label=" + detail::dot_quote(detail::node_label(n, o)) + "];\n";
  }
  for (const auto& e : g.edges) {
    out += "  " + detail::dot_quote(e.source) + arrow + detail::dot_quote(e.target) + " [" +
           o.weight_attribute + "=" + std::to_string(e.weight) + "];\n";
  }
  out += "}\n";
  return out;
}

/// Pajek .net: vertices numbered from 1 in node order, then *Edges (or
/// *Arcs when directed) as "source target weight". CRLF-free.
inline std::string render_pajek(const SocialGraph& g, const ExportOptions& o = {}) {
  std::map<std::string, std::size_t> index;
  std::string out = "*Vertices " + std::to_string(g.nodes.size()) + "\n";
  for (std::size_t i = 0; i < g.nodes.size(); ++i) {
    index.emplace(g.nodes[i].id, i + 1);
    out += std::to_string(i + 1) + " " + detail::pajek_quote(detail::node_label(g.nodes[i], o)) + "\n";
  }
  out += g.directed ? "*Arcs\n" : "*Edges\n";
  for (const auto& e : g.edges) {
    const auto s = index.find(e.source), t = index.find(e.target);
    if (s == index.end() || t == index.end()) throw ExportError("edge endpoint missing from node list");
    out += std::to_string(s->second) + " " + std::to_string(t->second) + " " + std::to_string(e.weight) + "\n";
  }
  return out;
}

inline std::string render_graph(const SocialGraph& g, ExportFormat f, const ExportOptions& o = {}) {
  switch (f) {
    case ExportFormat::graphml: return render_graphml(g, o);
    case ExportFormat::dot: return render_dot(g, o);
    case ExportFormat::pajek: return render_pajek(g, o);
    default: throw ExportError(std::string(to_string(f)) + " is a table format; a graph cannot be written as it");
  }
}

inline std::string render_table(const ResultTable& t, ExportFormat f) {
  switch (f) {
    case ExportFormat::csv: return render_csv(t);
    case ExportFormat::jsonl: return render_jsonl(t);
    default: throw ExportError(std::string(to_string(f)) + " is a graph format; a table cannot be written as it");
  }
}

inline void export_graph(const SocialGraph& g, const ExportTarget& target) {
  detail::write_file_atomic(target.path, render_graph(g, target.format, target.options));
}

inline void export_table(const ResultTable& t, const ExportTarget& target) {
  detail::write_file_atomic(target.path, render_table(t, target.format));
}

using ExportPayload = std::variant<SocialGraph, ResultTable>;

/// Throws ExportError when the payload kind does not fit the format.
inline std::string render_payload(const ExportPayload& p, ExportFormat f, const ExportOptions& o = {}) {
  if (const auto* g = std::get_if<SocialGraph>(&p)) return render_graph(*g, f, o);
  return render_table(std::get<ResultTable>(p), f);
}

inline void export_payload(const ExportPayload& p, const ExportTarget& target) {
  detail::write_file_atomic(target.path, render_payload(p, target.format, target.options));
}

}  // namespace mailweave
