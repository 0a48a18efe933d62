#pragma once

#include <filesystem>
#include <mutex>
#include <optional>
#include <shared_mutex>
#include <string>

#include <httplib.h>
#include <json.hpp>

#include "mailweave/analytics.hpp"
#include "mailweave/error.hpp"
#include "mailweave/export.hpp"
#include "mailweave/pipeline.hpp"
#include "mailweave/query.hpp"
#include "mailweave/record_xml.hpp"

namespace mailweave {

// HTTP API. Every body is JSON unless noted; errors are
//   {"code": C, "message": M[, "location": {"line": L, "column": K}]}
// with C one of kApiErrorCodes.

inline constexpr std::string_view kApiErrorCodes[] = {"syntax_error", "query_error", "bad_request",
                                                      "not_found",    "conflict",    "io_error",
                                                      "internal"};

struct ApiError {
  int status = 500;
  std::string code = "internal";
  std::string message;
  std::optional<std::pair<std::size_t, std::size_t>> location;

  nlohmann::json to_json() const {
    nlohmann::json j = {{"code", code}, {"message", message}};
    if (location) j["location"] = {{"line", location->first}, {"column", location->second}};
    return j;
  }
};

/// Maps library exceptions onto API errors.
inline ApiError api_error_of(std::exception_ptr ep) {
  try {
    std::rethrow_exception(ep);
  } catch (const SyntaxError& e) {
    return {400, "syntax_error", e.what(), std::make_pair(e.line(), e.column())};
  } catch (const QueryError& e) {
    return {400, "query_error", e.what(), std::make_pair(e.line(), e.column())};
  } catch (const NotFoundError& e) {
    return {404, "not_found", e.what(), std::nullopt};
  } catch (const ConflictError& e) {
    return {409, "conflict", e.what(), std::nullopt};
  } catch (const IngestError& e) {
    return {400, "bad_request", e.what(), std::nullopt};
  } catch (const IoError& e) {
    return {500, "io_error", e.what(), std::nullopt};
  } catch (const Error& e) {
    return {400, "bad_request", e.what(), std::nullopt};
  } catch (const nlohmann::json::exception& e) {
    return {400, "bad_request", e.what(), std::nullopt};
  } catch (const std::exception& e) {
    return {500, "internal", e.what(), std::nullopt};
  } catch (...) {
    return {500, "internal", "unknown failure", std::nullopt};
  }
}

struct ServiceOptions {
  std::optional<std::filesystem::path> static_dir;  // served under "/"
  std::string cors_origin = "*";
  ResolutionRules rules = ResolutionRules::defaults();
  std::optional<Date> today;  // default valid date; nullopt = the current UTC day
};

/// Routes:
///   POST /query                 DSL text, or a query object (application/json)
///   GET  /persons/{id}          ?asof=DATE&tx=DATE[&format=xml]
///   GET  /graphs/social         ?level=person|institution
///   GET  /graphs/answering      ?person=ID
///   GET  /graphs/coauthors
///   GET  /tables/{name}         posts-per-person, posts-per-domain,
///                               posts-per-institution, posters-per-domain,
///                               report-institutions
///   POST /ingest                multipart: "file" parts, optional "list" field
///   GET  /export                ?kind=(graph or table name)&format=F[&person=&level=]
/// Reads share the warehouse; /ingest is exclusive and answers 409 while
/// another ingest runs.
class Service {
 public:
  explicit Service(Warehouse& w, ServiceOptions options = {}) : w_(w), options_(std::move(options)) {
    routes();
  }

  Service(const Service&) = delete;
  Service& operator=(const Service&) = delete;

  httplib::Server& server() noexcept { return server_; }

  /// Returns the bound port, or -1.
  int bind(const std::string& host = "127.0.0.1", int port = 0) {
    if (port == 0) return server_.bind_to_any_port(host);
    return server_.bind_to_port(host, port) ? port : -1;
  }

  bool listen_after_bind() { return server_.listen_after_bind(); }
  void stop() { server_.stop(); }
  void wait_until_ready() { server_.wait_until_ready(); }

  /// Holds off HTTP ingests while the lock lives.
  std::unique_lock<std::mutex> lock_ingest() { return std::unique_lock<std::mutex>(ingest_mu_); }

 private:
  using Req = httplib::Request;
  using Res = httplib::Response;

  Date today() const { return options_.today.value_or(today_utc()); }

  static Date date_param(const Req& req, const char* name, Date fallback) {
    if (!req.has_param(name)) return fallback;
    return parse_loose_date(req.get_param_value(name));
  }

  static std::optional<Date> optional_date_param(const Req& req, const char* name) {
    if (!req.has_param(name) || req.get_param_value(name).empty()) return std::nullopt;
    return parse_loose_date(req.get_param_value(name));
  }

  static void send_json(Res& res, const nlohmann::json& j, int status = 200) {
    res.status = status;
    res.set_content(j.dump(), "application/json");
  }

  template <class F>
  auto guarded(F f) {
    return [this, f](const Req& req, Res& res) {
      try {
        f(req, res);
      } catch (...) {
        const ApiError e = api_error_of(std::current_exception());
        send_json(res, e.to_json(), e.status);
      }
    };
  }

  ExportPayload payload(const std::string& kind, const Req& req) const {
    if (kind == "social" || kind == "answering" || kind == "coauthors") return graph(kind, req);
    return table(kind);
  }

  SocialGraph graph(const std::string& kind, const Req& req) const {
    if (kind == "coauthors") return coauthor_institution_graph(w_);
    const Corpus c = load_corpus(w_);
    if (kind == "social") {
      const std::string level = req.has_param("level") ? req.get_param_value("level") : "person";
      if (level != "person" && level != "institution") throw Error("level must be person or institution");
      return social_graph(corpus_threads(c), c,
                          level == "person" ? GraphLevel::person : GraphLevel::institution);
    }
    if (kind == "answering") {
      if (!req.has_param("person")) throw Error("answering needs ?person=ID");
      const std::string person = req.get_param_value("person");
      const bool known = w_.find_record(Schema::person, person) ||
                         std::any_of(c.messages.begin(), c.messages.end(),
                                     [&](const EmailMessage& m) { return c.person_of(m) == person; });
      if (!known) throw NotFoundError("unknown person '" + person + "'");
      return answering_profile(c, person);
    }
    throw NotFoundError("unknown graph '" + kind + "'");
  }

  ResultTable table(const std::string& name) const {
    if (name == "report-institutions") return report_institution_table(w_);
    const Corpus c = [&] {
      if (name == "posts-per-person" || name == "posts-per-domain" || name == "posts-per-institution" ||
          name == "posters-per-domain") {
        return load_corpus(w_);
      }
      throw NotFoundError("unknown table '" + name + "'");
    }();
    if (name == "posts-per-person") return posts_per_person(c);
    if (name == "posts-per-domain") return posts_per_domain(c);
    if (name == "posts-per-institution") return posts_per_institution(c);
    return posters_per_domain(c);
  }

  void routes() {
    server_.set_post_routing_handler([this](const Req&, Res& res) {
      res.set_header("Access-Control-Allow-Origin", options_.cors_origin);
      res.set_header("Access-Control-Allow-Headers", "Content-Type");
      res.set_header("Access-Control-Allow-Methods", "GET, POST, OPTIONS");
    });
    server_.Options(".*", [](const Req&, Res& res) { res.status = 204; });
    if (options_.static_dir) server_.set_mount_point("/", options_.static_dir->string());

    server_.Post("/query", guarded([this](const Req& req, Res& res) {
      const std::string_view body = text::trim(req.body);
      const bool object = req.get_header_value("Content-Type").find("json") != std::string::npos ||
                          (!body.empty() && body.front() == '{');
      const QuerySpec q = object ? query_from_json(nlohmann::json::parse(body)) : parse_query(body);
      std::shared_lock lock(mu_);
      send_json(res, table_to_json(QueryEngine(w_).execute(q, today())));
    }));

    server_.Get(R"(/persons/([^/]+))", guarded([this](const Req& req, Res& res) {
      const std::string id = req.matches[1];
      const Date valid = date_param(req, "asof", today());
      const auto tx = optional_date_param(req, "tx");
      std::shared_lock lock(mu_);
      const SnapshotView snap = snapshot_asof(w_.get_record(Schema::person, id), valid, tx);
      if (req.has_param("format") && req.get_param_value("format") == "xml") {
        res.set_content(serialize_snapshot(snap), "application/xml");
        return;
      }
      send_json(res, {{"id", snap.record_id}, {"schema", to_string(snap.schema)}, {"fields", snap.fields}});
    }));

    server_.Get(R"(/graphs/([a-z]+))", guarded([this](const Req& req, Res& res) {
      std::shared_lock lock(mu_);
      send_json(res, graph_to_json(graph(req.matches[1], req)));
    }));

    server_.Get(R"(/tables/([a-z-]+))", guarded([this](const Req& req, Res& res) {
      std::shared_lock lock(mu_);
      send_json(res, table_to_json(table(req.matches[1])));
    }));

    server_.Post("/ingest", guarded([this](const Req& req, Res& res) {
      std::unique_lock ingest(ingest_mu_, std::try_to_lock);
      if (!ingest.owns_lock()) throw ConflictError("another ingest is running");
      if (!req.is_multipart_form_data()) throw Error("multipart/form-data upload expected");
      std::string list_id;
      if (req.has_file("list")) list_id = req.get_file_value("list").content;
      IngestResult parsed;
      std::size_t files = 0;
      for (const auto& [name, part] : req.files) {
        if (name != "file") continue;
        ++files;
        IngestResult one = parse_archive(part.content, part.filename.empty() ? "upload" : part.filename, list_id);
        for (auto& m : one.messages) parsed.messages.push_back(std::move(m));
        parsed.report += one.report;
      }
      if (files == 0) throw Error("no \"file\" part in upload");
      std::unique_lock lock(mu_);
      const IngestReport report = store_messages(w_, std::move(parsed));
      resolve_warehouse(w_, options_.rules);
      send_json(res, report_to_json(report));
    }));

    server_.Get("/export", guarded([this](const Req& req, Res& res) {
      if (!req.has_param("kind") || !req.has_param("format")) throw Error("export needs ?kind=&format=");
      const std::string kind = req.get_param_value("kind");
      const auto format = parse_export_format(req.get_param_value("format"));
      if (!format) throw Error("unknown format '" + req.get_param_value("format") + "'");
      ExportOptions opts;
      if (req.has_param("label") && req.get_param_value("label") == "id") opts.label_field = LabelField::id;
      if (req.has_param("weight")) opts.weight_attribute = req.get_param_value("weight");
      std::shared_lock lock(mu_);
      const std::string body = render_payload(payload(kind, req), *format, opts);
      res.set_header("Content-Disposition",
                     "attachment; filename=\"" + kind + std::string(file_extension(*format)) + "\"");
      res.set_content(body, std::string(media_type(*format)));
    }));
  }

  Warehouse& w_;
  ServiceOptions options_;
  httplib::Server server_;
  mutable std::shared_mutex mu_;
  std::mutex ingest_mu_;
};

}  // namespace mailweave
