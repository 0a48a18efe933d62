#pragma once

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "mailweave/mailweave.hpp"
#include "mailweave/service.hpp"

namespace mailweave::cli {

enum Exit : int { ok = 0, usage = 1, data = 2, io = 3 };

struct CliConfig {
  std::string warehouse;
  std::string rules;
  std::string registry;
  std::string format = "text";
  std::string asof;
  std::string tx_asof;
  std::size_t limit = 0;
  int verbosity = 0;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

namespace detail {

inline std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Keys of a JSON config file fill options the command line left unset.
inline void apply_config_file(const std::string& path, CliConfig& c) {
  const nlohmann::json j = nlohmann::json::parse(slurp(path));
  if (!j.is_object()) throw SchemaError("config file must hold an object");
  auto fill = [&](const char* key, std::string& out) {
    if (out.empty() && j.contains(key)) out = j.at(key).get<std::string>();
  };
  fill("warehouse", c.warehouse);
  fill("rules", c.rules);
  fill("registry", c.registry);
}

inline ResolutionRules load_rules(const CliConfig& c) {
  if (c.rules.empty()) return ResolutionRules::defaults();
  return rules_from_json(nlohmann::json::parse(slurp(c.rules)));
}

inline std::vector<Institution> load_registry_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path);
  return read_registry(in);
}

inline std::optional<Date> date_option(const std::string& s) {
  if (s.empty()) return std::nullopt;
  return parse_loose_date(s);
}

inline Schema schema_option(const std::string& s) {
  const auto schema = parse_schema(s);
  if (!schema) throw UsageError("unknown schema '" + s + "'");
  return *schema;
}

inline void print_table(std::ostream& out, const ResultTable& t, const std::string& format) {
  if (format == "text") out << render_text(t);
  else if (format == "csv") out << render_csv(t);
  else if (format == "jsonl") out << render_jsonl(t);
  else if (format == "json") out << table_to_json(t).dump(2) << "\n";
  else throw UsageError("tables print as text, csv, jsonl or json, not '" + format + "'");
}

inline void print_graph(std::ostream& out, const SocialGraph& g, const std::string& format) {
  if (format == "text" || format == "json") {
    out << graph_to_json(g).dump(2) << "\n";
    return;
  }
  const auto f = parse_export_format(format);
  if (!f || !is_graph_format(*f)) throw UsageError("graphs print as json, graphml, dot or pajek");
  out << render_graph(g, *f);
}

inline void print_report(std::ostream& out, const IngestReport& r, const std::string& format) {
  if (format == "jsonl") write_report_records(out, r);
  else if (format == "json") out << report_to_json(r).dump(2) << "\n";
  else print_report_table(out, r);
}

inline SocialGraph graph_named(const Warehouse& w, const std::string& kind, const std::string& person,
                               const std::string& level) {
  if (kind == "coauthors") return coauthor_institution_graph(w);
  const Corpus c = load_corpus(w);
  if (kind == "social") {
    if (level != "person" && level != "institution") throw UsageError("--level is person or institution");
    return social_graph(corpus_threads(c), c, level == "person" ? GraphLevel::person : GraphLevel::institution);
  }
  if (kind == "answering") {
    if (person.empty()) throw UsageError("answering needs --person");
    return answering_profile(c, person);
  }
  throw UsageError("unknown graph '" + kind + "'");
}

inline ResultTable table_named(const Warehouse& w, const std::string& name) {
  if (name == "report-institutions") return report_institution_table(w);
  const Corpus c = load_corpus(w);
  if (name == "posts-per-person") return posts_per_person(c);
  if (name == "posts-per-domain") return posts_per_domain(c);
  if (name == "posts-per-institution") return posts_per_institution(c);
  if (name == "posters-per-domain") return posters_per_domain(c);
  throw UsageError("unknown table '" + name + "'");
}

inline bool is_table_name(const std::string& s) {
  return s == "report-institutions" || s == "posts-per-person" || s == "posts-per-domain" ||
         s == "posts-per-institution" || s == "posters-per-domain";
}

}  // namespace detail

/// Runs one command line (args excludes the program name). Never throws.
inline int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"mailweave: mailing-list archives into a bitemporal warehouse, and analytics over it"};
  app.require_subcommand(1);
  CliConfig c;
  std::string config_file;
  app.add_option("--warehouse", c.warehouse, "Warehouse directory (default: $MAILWEAVE_WAREHOUSE)");
  app.add_option("--config", config_file, "JSON file with warehouse, rules and registry keys");
  app.add_option("--rules", c.rules, "Identity rule file (JSON)");
  app.add_option("--registry", c.registry, "Institution registry (JSON lines)");
  app.add_option("--format", c.format, "text, csv, jsonl, json, or a graph format");
  app.add_option("--asof", c.asof, "Valid-time date (default: today)");
  app.add_option("--tx-asof", c.tx_asof, "Transaction-time date (default: latest)");
  app.add_option("--limit", c.limit, "Row limit for tables and queries");
  app.add_flag("-v,--verbose", c.verbosity, "More diagnostics on stderr");

  std::vector<std::string> files;
  std::string list_id, dsl, name, person, level = "person", output, schema = "person", id;
  std::string field, value, start, end = "running", type(kValidEvent), asserted, annotation, source;
  std::string label = "label", weight = "weight", static_dir, host = "127.0.0.1";
  bool no_resolve = false;
  int port = 8080;

  auto* ingest = app.add_subcommand("ingest", "Parse archives and store their messages");
  ingest->add_option("files", files, "mbox or .jsonl message files")->required();
  ingest->add_option("--list", list_id, "List id for messages without one");
  ingest->add_flag("--no-resolve", no_resolve, "Skip identity resolution afterwards");

  auto* check = app.add_subcommand("parse-check", "Parse archives and print the report only");
  check->add_option("files", files)->required();
  check->add_option("--list", list_id);

  auto* resolve = app.add_subcommand("resolve", "Re-run identity resolution over stored messages");

  auto* facts = app.add_subcommand("facts", "Apply a JSON-lines fact file");
  facts->add_option("file", name)->required();

  auto* assert_cmd = app.add_subcommand("assert", "Assert one temporal fact");
  assert_cmd->add_option("--schema", schema);
  assert_cmd->add_option("--id", id)->required();
  assert_cmd->add_option("--field", field)->required();
  assert_cmd->add_option("--value", value)->required();
  assert_cmd->add_option("--start", start)->required();
  assert_cmd->add_option("--end", end);
  assert_cmd->add_option("--type", type);
  assert_cmd->add_option("--asserted", asserted)->required();
  assert_cmd->add_option("--source", source);

  auto* retract_cmd = app.add_subcommand("retract", "Correct the end of an annotation");
  retract_cmd->add_option("--schema", schema);
  retract_cmd->add_option("--id", id)->required();
  retract_cmd->add_option("--field", field)->required();
  retract_cmd->add_option("--annotation", annotation)->required();
  retract_cmd->add_option("--end", end)->required();
  retract_cmd->add_option("--asserted", asserted)->required();

  auto* snapshot = app.add_subcommand("snapshot", "Plain view of a record as of --asof/--tx-asof");
  snapshot->add_option("id", id)->required();
  snapshot->add_option("--schema", schema);

  auto* show = app.add_subcommand("show", "Print a stored record document");
  show->add_option("id", id)->required();
  show->add_option("--schema", schema);

  auto* query = app.add_subcommand("query", "Run a query");
  query->add_option("dsl", dsl)->required();

  auto* table = app.add_subcommand("table", "Print a built-in table");
  table->add_option("name", name, "posts-per-person, posts-per-domain, posts-per-institution, "
                                  "posters-per-domain, report-institutions")
      ->required();

  auto* graph = app.add_subcommand("graph", "Print a graph: social, answering or coauthors");
  graph->add_option("kind", name)->required();
  graph->add_option("--person", person);
  graph->add_option("--level", level);

  auto* export_cmd = app.add_subcommand("export", "Write a graph or table to a file");
  export_cmd->add_option("kind", name)->required();
  export_cmd->add_option("--output,-o", output)->required();
  export_cmd->add_option("--person", person);
  export_cmd->add_option("--level", level);
  export_cmd->add_option("--label", label, "label or id");
  export_cmd->add_option("--weight", weight, "Edge weight attribute name");

  auto* serve = app.add_subcommand("serve", "Serve the HTTP API");
  serve->add_option("--port", port);
  serve->add_option("--host", host);
  serve->add_option("--static", static_dir, "Directory of UI assets served under /");

  try {
    std::vector<std::string> reversed(args.rbegin(), args.rend());
    app.parse(reversed);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? Exit::ok : Exit::usage;
  }

  try {
    if (!config_file.empty()) detail::apply_config_file(config_file, c);
    if (c.warehouse.empty()) {
      if (const char* env = std::getenv("MAILWEAVE_WAREHOUSE")) c.warehouse = env;
    }
    if (check->parsed()) {
      IngestResult all;
      for (const auto& f : files) {
        IngestResult one = parse_archive_file(f, list_id);
        for (auto& m : one.messages) all.messages.push_back(std::move(m));
        all.report += one.report;
      }
      IngestResult cleaned = clean_messages(std::move(all.messages));
      detail::print_report(out, combine_reports(all.report, cleaned.report), c.format);
      return Exit::ok;
    }
    if (c.warehouse.empty()) throw UsageError("--warehouse (or MAILWEAVE_WAREHOUSE) is required");
    Warehouse w = Warehouse::open(c.warehouse);
    const auto asof = detail::date_option(c.asof);
    const auto tx = detail::date_option(c.tx_asof);
    auto store_registry_option = [&] {
      if (!c.registry.empty()) store_registry(w, detail::load_registry_file(c.registry));
    };

    if (ingest->parsed()) {
      const ResolutionRules rules = detail::load_rules(c);
      IngestResult all;
      for (const auto& f : files) {
        IngestResult one = parse_archive_file(f, list_id);
        for (auto& m : one.messages) all.messages.push_back(std::move(m));
        all.report += one.report;
      }
      const IngestReport report = store_messages(w, std::move(all));
      store_registry_option();
      if (!no_resolve) resolve_warehouse(w, rules);
      detail::print_report(out, report, c.format);
    } else if (resolve->parsed()) {
      store_registry_option();
      const auto persons = resolve_warehouse(w, detail::load_rules(c));
      out << "persons: " << persons.size() << "\n";
    } else if (facts->parsed()) {
      std::ifstream in(name);
      if (!in) throw IoError("cannot open " + name);
      const FactStats s = apply_facts(w, in);
      out << "created: " << s.created << "\nasserted: " << s.asserted << "\nretracted: " << s.retracted
          << "\nreports: " << s.reports << "\n";
    } else if (assert_cmd->parsed()) {
      Assertion a;
      a.field = field;
      a.value = value;
      a.start = parse_loose_date(start);
      a.end = parse_bound(end);
      a.event_type = type;
      a.asserted_at = parse_loose_date(asserted);
      if (!source.empty()) a.source = source;
      const Schema s = detail::schema_option(schema);
      if (!w.find_record(s, id)) w.put_record(Record{id, s, {}});
      out << w.assert_fact(s, id, a) << "\n";
    } else if (retract_cmd->parsed()) {
      out << w.retract_fact(detail::schema_option(schema), id, field, annotation, parse_bound(end),
                            parse_loose_date(asserted))
          << "\n";
    } else if (snapshot->parsed()) {
      const SnapshotView v = w.snapshot_asof(detail::schema_option(schema), id, asof.value_or(today_utc()), tx);
      if (c.format == "xml") {
        out << serialize_snapshot(v);
      } else if (c.format == "json") {
        out << nlohmann::json{{"id", v.record_id}, {"schema", to_string(v.schema)}, {"fields", v.fields}}.dump(2)
            << "\n";
      } else {
        for (const auto& [f, values] : v.fields) {
          for (const auto& val : values) out << f << ": " << val << "\n";
        }
      }
    } else if (show->parsed()) {
      out << serialize_record(w.get_record(detail::schema_option(schema), id));
    } else if (query->parsed()) {
      QuerySpec q = parse_query(dsl);
      if (asof && !q.asof_valid) q.asof_valid = asof;
      if (tx && !q.asof_transaction) q.asof_transaction = tx;
      if (c.limit > 0 && !q.limit) q.limit = c.limit;
      const ResultTable t = QueryEngine(w).execute(q);
      if (c.format == "text" && q.aggregate && !q.group_by) {
        out << cell_text(t.rows.at(0).at(1)) << "\n";
      } else {
        detail::print_table(out, t, c.format);
      }
    } else if (table->parsed()) {
      ResultTable t = detail::table_named(w, name);
      if (c.limit > 0 && t.rows.size() > c.limit) t.rows.resize(c.limit);
      detail::print_table(out, t, c.format);
    } else if (graph->parsed()) {
      detail::print_graph(out, detail::graph_named(w, name, person, level), c.format);
    } else if (export_cmd->parsed()) {
      const auto f = parse_export_format(c.format);
      if (!f) throw UsageError("export needs --format graphml, dot, pajek, csv or jsonl");
      ExportTarget target{*f, output, {label == "id" ? LabelField::id : LabelField::label, weight}};
      if (detail::is_table_name(name)) {
        export_payload(detail::table_named(w, name), target);
      } else {
        export_payload(detail::graph_named(w, name, person, level), target);
      }
      if (c.verbosity > 0) err << "wrote " << output << "\n";
    } else if (serve->parsed()) {
      ServiceOptions opts;
      opts.rules = detail::load_rules(c);
      if (!static_dir.empty()) opts.static_dir = static_dir;
      Service service(w, std::move(opts));
      const int bound = service.bind(host, port);
      if (bound < 0) throw IoError("cannot bind " + host + ":" + std::to_string(port));
      err << "listening on http://" << host << ":" << bound << "\n";
      if (!service.listen_after_bind()) throw IoError("server stopped unexpectedly");
    }
    return Exit::ok;
  } catch (const UsageError& e) {
    err << "error: " << e.what() << "\n";
    return Exit::usage;
  } catch (const PositionedError& e) {
    err << "error: " << e.what() << " (line " << e.line() << ", column " << e.column() << ")\n";
    return Exit::data;
  } catch (const IoError& e) {
    err << "error: " << e.what() << "\n";
    return Exit::io;
  } catch (const Error& e) {
    err << "error: " << e.what() << "\n";
    return Exit::data;
  } catch (const nlohmann::json::exception& e) {
    err << "error: " << e.what() << "\n";
    return Exit::data;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return Exit::io;
  }
}

}  // namespace mailweave::cli
