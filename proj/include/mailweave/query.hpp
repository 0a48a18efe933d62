#pragma once

#include <algorithm>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include <json.hpp>

#include "mailweave/analytics.hpp"
#include "mailweave/dsl.hpp"
#include "mailweave/result_table.hpp"
#include "mailweave/temporal.hpp"
#include "mailweave/warehouse.hpp"

namespace mailweave {

/// Field path -> values; single-valued fields hold one entry, absent fields none.
using QueryRow = std::map<std::string, std::vector<std::string>>;

namespace detail {

inline std::string quote_literal(const std::string& s) {
  std::string out = "'";
  for (char c : s) {
    out.push_back(c);
    if (c == '\'') out.push_back('\'');
  }
  return out + "'";
}

inline std::string_view op_text(CompareOp op) {
  switch (op) {
    case CompareOp::eq: return "=";
    case CompareOp::ne: return "!=";
    case CompareOp::lt: return "<";
    case CompareOp::le: return "<=";
    case CompareOp::gt: return ">";
    case CompareOp::ge: return ">=";
    case CompareOp::contains: return "CONTAINS";
  }
  return "=";
}

inline const std::vector<std::string_view>& listing_columns(Source s) {
  static const std::vector<std::string_view> messages = {"id", "date", "sender.person", "subject"};
  static const std::vector<std::string_view> persons = {"id", "canonical_name", "posts"};
  static const std::vector<std::string_view> institutions = {"id", "name", "kind"};
  static const std::vector<std::string_view> reports = {"id", "title", "maturity", "pub_date"};
  switch (s) {
    case Source::messages: return messages;
    case Source::persons: return persons;
    case Source::institutions: return institutions;
    case Source::reports: return reports;
  }
  return messages;
}

inline int compare_values(FieldType type, const std::string& a, const std::string& b) {
  if (type == FieldType::integer) {
    const long long x = std::stoll(a), y = std::stoll(b);
    return x < y ? -1 : (x > y ? 1 : 0);
  }
  return a.compare(b) < 0 ? -1 : (a == b ? 0 : 1);
}

inline bool matches(const Predicate& p, FieldType type, const std::vector<std::string>& values) {
  if (p.op == CompareOp::ne) {
    return std::none_of(values.begin(), values.end(),
                        [&](const std::string& v) { return compare_values(type, v, p.literal.text) == 0; });
  }
  const std::string needle = p.op == CompareOp::contains ? text::casefold(p.literal.text) : "";
  return std::any_of(values.begin(), values.end(), [&](const std::string& v) {
    if (p.op == CompareOp::contains) return text::casefold(v).find(needle) != std::string::npos;
    const int c = compare_values(type, v, p.literal.text);
    switch (p.op) {
      case CompareOp::eq: return c == 0;
      case CompareOp::lt: return c < 0;
      case CompareOp::le: return c <= 0;
      case CompareOp::gt: return c > 0;
      case CompareOp::ge: return c >= 0;
      default: return false;
    }
  });
}

inline const std::vector<std::string>& values_of(const QueryRow& row, const std::string& path) {
  static const std::vector<std::string> none;
  auto it = row.find(path);
  return it == row.end() ? none : it->second;
}

inline std::string joined(const std::vector<std::string>& values) {
  std::string out;
  for (const auto& v : values) out += (out.empty() ? "" : "; ") + v;
  return out;
}

}  // namespace detail

/// Canonical DSL spelling; parse_query(to_query_text(q)) == q.
inline std::string to_query_text(const QuerySpec& q) {
  std::string out = "FROM " + std::string(to_string(q.source));
  for (const auto& p : q.predicates) {
    out += " WHERE " + p.path + " " + std::string(detail::op_text(p.op)) + " ";
    out += p.literal.kind == Literal::Kind::text ? detail::quote_literal(p.literal.text) : p.literal.text;
  }
  if (q.asof_valid) {
    out += " ASOF " + q.asof_valid->iso();
    if (q.asof_transaction) out += " TX " + q.asof_transaction->iso();
  }
  if (q.group_by) out += " GROUP BY " + *q.group_by;
  if (q.aggregate) {
    out += " COUNT";
    if (q.aggregate->kind == Aggregate::Kind::count_distinct) out += " DISTINCT " + q.aggregate->path;
  }
  if (q.order) out += " ORDER BY " + q.order->key + (q.order->descending ? " DESC" : " ASC");
  if (q.limit) out += " LIMIT " + std::to_string(*q.limit);
  return out;
}

/// Object form of a query:
///   {"source": "messages",
///    "where": [{"path": "sender.domain", "op": "=", "value": "ibm.com"}],
///    "asof": "2002-06-01", "tx": "2003-01-01", "group_by": "sender.person",
///    "count": true | {"distinct": "sender.person"},
///    "order_by": {"key": "count", "desc": true}, "limit": 15}
/// Validation is that of the text form; error locations refer to to_query_text.
inline QuerySpec query_from_json(const nlohmann::json& j) {
  if (!j.is_object()) throw QueryError(QueryError::Kind::invalid, "query object expected", 1, 1);
  auto str = [&](const char* key) -> std::optional<std::string> {
    auto it = j.find(key);
    if (it == j.end() || it->is_null()) return std::nullopt;
    if (!it->is_string()) throw QueryError(QueryError::Kind::invalid, std::string(key) + " must be a string", 1, 1);
    return it->get<std::string>();
  };
  std::string text = "FROM " + str("source").value_or("");
  if (auto it = j.find("where"); it != j.end()) {
    if (!it->is_array()) throw QueryError(QueryError::Kind::invalid, "where must be an array", 1, 1);
    for (const auto& p : *it) {
      if (!p.is_object() || !p.contains("path") || !p.contains("op") || !p.contains("value")) {
        throw QueryError(QueryError::Kind::invalid, "predicate needs path, op and value", 1, 1);
      }
      text += " WHERE " + p["path"].get<std::string>() + " " + p["op"].get<std::string>() + " ";
      const auto& v = p["value"];
      if (v.is_number_integer()) text += std::to_string(v.get<std::int64_t>());
      else if (v.is_string()) text += detail::quote_literal(v.get<std::string>());
      else throw QueryError(QueryError::Kind::invalid, "predicate value must be a string or integer", 1, 1);
    }
  }
  if (auto d = str("asof")) text += " ASOF " + *d;
  if (auto d = str("tx")) text += " TX " + *d;
  if (auto g = str("group_by")) text += " GROUP BY " + *g;
  if (auto it = j.find("count"); it != j.end()) {
    if (it->is_object()) text += " COUNT DISTINCT " + it->value("distinct", "");
    else if (it->is_boolean() && it->get<bool>()) text += " COUNT";
  }
  if (auto it = j.find("order_by"); it != j.end() && it->is_object()) {
    text += " ORDER BY " + it->value("key", "") + (it->value("desc", false) ? " DESC" : " ASC");
  }
  if (auto it = j.find("limit"); it != j.end() && !it->is_null()) {
    if (!it->is_number_integer()) throw QueryError(QueryError::Kind::invalid, "limit must be an integer", 1, 1);
    text += " LIMIT " + std::to_string(it->get<std::int64_t>());
  }
  return parse_query(text);
}

inline nlohmann::json query_to_json(const QuerySpec& q) {
  nlohmann::json j = {{"source", to_string(q.source)}};
  nlohmann::json where = nlohmann::json::array();
  for (const auto& p : q.predicates) {
    nlohmann::json v = p.literal.kind == Literal::Kind::integer ? nlohmann::json(p.literal.integer)
                                                                : nlohmann::json(p.literal.text);
    where.push_back({{"path", p.path}, {"op", detail::op_text(p.op)}, {"value", v}});
  }
  if (!where.empty()) j["where"] = where;
  if (q.asof_valid) j["asof"] = q.asof_valid->iso();
  if (q.asof_transaction) j["tx"] = q.asof_transaction->iso();
  if (q.group_by) j["group_by"] = *q.group_by;
  if (q.aggregate) {
    j["count"] = q.aggregate->kind == Aggregate::Kind::count ? nlohmann::json(true)
                                                             : nlohmann::json{{"distinct", q.aggregate->path}};
  }
  if (q.order) j["order_by"] = {{"key", q.order->key}, {"desc", q.order->descending}};
  if (q.limit) j["limit"] = *q.limit;
  return j;
}

/// Evaluates queries over one warehouse state. Message-derived fields
/// (sender.person, thread, posts) use the current resolution and threading.
class QueryEngine {
 public:
  explicit QueryEngine(const Warehouse& w) : w_(w), corpus_(load_corpus(w)) {
    const ThreadLinks links = link_messages(corpus_.messages, corpus_.threading);
    for (std::size_t i = 0; i < corpus_.messages.size(); ++i) {
      thread_of_[corpus_.messages[i].message_id] = corpus_.messages[links.root[i]].message_id;
    }
  }

  /// Rows of `source` whose snapshot at (valid, tx) is non-empty.
  std::vector<QueryRow> rows(Source source, Date valid, std::optional<Date> tx) const {
    std::vector<QueryRow> out;
    for (const Record* r : w_.list_records(schema_of(source))) {
      const SnapshotView snap = snapshot_asof(*r, valid, tx);
      if (snap.empty()) continue;
      switch (source) {
        case Source::messages: out.push_back(message_row(snap)); break;
        case Source::persons: out.push_back(person_row(snap, valid, tx)); break;
        case Source::institutions: out.push_back(institution_row(snap)); break;
        case Source::reports: out.push_back(report_row(snap, tx)); break;
      }
    }
    return out;
  }

  ResultTable execute(const QuerySpec& q, Date today = today_utc()) const {
    const Date valid = q.asof_valid.value_or(today);
    std::vector<QueryRow> selected;
    for (auto& row : rows(q.source, valid, q.asof_transaction)) {
      const bool keep = std::all_of(q.predicates.begin(), q.predicates.end(), [&](const Predicate& p) {
        return detail::matches(p, *field_type(q.source, p.path), detail::values_of(row, p.path));
      });
      if (keep) selected.push_back(std::move(row));
    }
    ResultTable t = q.aggregate || q.group_by ? aggregate(q, selected) : listing(q, std::move(selected));
    t.total_row_count = t.rows.size();
    if (q.limit && t.rows.size() > *q.limit) t.rows.resize(*q.limit);
    return t;
  }

  const Corpus& corpus() const noexcept { return corpus_; }

 private:
  static Schema schema_of(Source s) {
    switch (s) {
      case Source::messages: return Schema::email;
      case Source::persons: return Schema::person;
      case Source::institutions: return Schema::institution;
      case Source::reports: return Schema::report;
    }
    return Schema::email;
  }

  static std::vector<std::string> field(const SnapshotView& s, std::string_view name) {
    const auto* v = s.get(name);
    return v ? *v : std::vector<std::string>{};
  }

  QueryRow message_row(const SnapshotView& s) const {
    QueryRow row;
    row["id"] = {s.record_id};
    row["list"] = field(s, "list_id");
    row["subject"] = field(s, "subject");
    row["subject_key"] = field(s, "subject_key");
    for (const auto& ts : field(s, "sent_at")) {
      if (auto t = parse_iso_timestamp(ts)) row["date"].push_back(date_of(*t).iso());
    }
    for (const auto& addr : field(s, "from_address")) {
      const auto at = addr.rfind('@');
      if (at == std::string::npos) continue;
      const std::string key = address_key(addr.substr(0, at), addr.substr(at + 1));
      const std::string domain = addr.substr(at + 1);
      row["sender"].push_back(key);
      row["sender.domain"].push_back(domain);
      auto it = corpus_.person_of_key.find(key);
      row["sender.person"].push_back(it == corpus_.person_of_key.end() ? key : it->second);
      row["sender.institution"].push_back(map_institution(domain, corpus_.registry));
    }
    row["sender.name"] = field(s, "from_name");
    row["in_reply_to"] = field(s, "in_reply_to");
    for (const auto& refs : field(s, "references")) {
      for (auto& r : text::split_whitespace(refs)) row["references"].push_back(std::move(r));
    }
    for (const auto& to : field(s, "to")) {
      try {
        row["recipients"].push_back(normalize_address(to).key);
      } catch (const AddressError&) {
      }
    }
    if (auto it = thread_of_.find(s.record_id); it != thread_of_.end()) row["thread"] = {it->second};
    row["body"] = field(s, "body");
    return row;
  }

  QueryRow person_row(const SnapshotView& s, Date valid, std::optional<Date> tx) const {
    QueryRow row;
    row["id"] = {s.record_id};
    for (auto f : {"name", "firstname", "canonical_name", "addresses", "functions", "affiliations"}) {
      row[f] = field(s, f);
    }
    std::set<std::string> domains;
    for (const auto& a : row["addresses"]) {
      if (auto at = a.rfind('@'); at != std::string::npos) domains.insert(a.substr(at + 1));
    }
    row["domains"].assign(domains.begin(), domains.end());
    std::int64_t posts = 0;
    for (const auto& m : corpus_.messages) {
      const Date d = date_of(m.sent_at);
      if (d <= valid && (!tx || d <= *tx) && corpus_.person_of(m) == s.record_id) ++posts;
    }
    row["posts"] = {std::to_string(posts)};
    return row;
  }

  static QueryRow institution_row(const SnapshotView& s) {
    QueryRow row;
    row["id"] = {s.record_id};
    for (auto f : {"name", "kind", "domains"}) row[f] = field(s, f);
    return row;
  }

  QueryRow report_row(const SnapshotView& s, std::optional<Date> tx) const {
    QueryRow row;
    row["id"] = {s.record_id};
    for (auto f : {"title", "maturity", "pub_date", "authors"}) row[f] = field(s, f);
    std::set<std::string> insts;
    const auto pub = parse_iso_date(row["pub_date"].empty() ? "" : row["pub_date"].front());
    for (const auto& author : row["authors"]) {
      std::vector<std::string> aff;
      if (const Record* p = w_.find_record(Schema::person, author); p && pub) {
        aff = field(snapshot_asof(*p, *pub, tx), "affiliations");
      }
      if (aff.empty()) aff.push_back(detail::kUnknownInstitution);
      insts.insert(aff.begin(), aff.end());
    }
    row["authors.institution"].assign(insts.begin(), insts.end());
    return row;
  }

  static ResultTable aggregate(const QuerySpec& q, const std::vector<QueryRow>& rows) {
    static const std::string kNone = "(none)";
    std::map<std::string, std::set<std::string>> distinct;
    std::map<std::string, std::int64_t> counts;
    for (const auto& row : rows) {
      std::vector<std::string> keys;
      if (q.group_by) {
        keys = detail::values_of(row, *q.group_by);
        if (keys.empty()) keys.push_back(kNone);
      } else {
        keys.push_back("count");
      }
      for (const auto& k : keys) {
        if (q.aggregate && q.aggregate->kind == Aggregate::Kind::count_distinct) {
          for (const auto& v : detail::values_of(row, q.aggregate->path)) distinct[k].insert(v);
          distinct[k];
        } else {
          ++counts[k];
        }
      }
    }
    for (const auto& [k, vals] : distinct) counts[k] = static_cast<std::int64_t>(vals.size());
    if (!q.group_by && counts.empty()) counts["count"] = 0;

    std::vector<std::pair<std::string, std::int64_t>> sorted(counts.begin(), counts.end());
    const bool by_count = q.order && q.order->key == "count";
    const bool desc = q.order && q.order->descending;
    std::stable_sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
      if (by_count) {
        if (a.second != b.second) return desc ? a.second > b.second : a.second < b.second;
        return a.first < b.first;
      }
      return desc ? a.first > b.first : a.first < b.first;
    });
    ResultTable t;
    t.columns = {q.group_by ? *q.group_by : "key", "count"};
    for (auto& [k, v] : sorted) t.rows.push_back({k, v});
    return t;
  }

  static ResultTable listing(const QuerySpec& q, std::vector<QueryRow> rows) {
    const std::string key = q.order ? q.order->key : "id";
    const FieldType type = *field_type(q.source, key);
    const bool desc = q.order && q.order->descending;
    auto first = [](const QueryRow& r, const std::string& path) {
      const auto& v = detail::values_of(r, path);
      return v.empty() ? std::string() : v.front();
    };
    std::stable_sort(rows.begin(), rows.end(), [&](const QueryRow& a, const QueryRow& b) {
      const std::string x = first(a, key), y = first(b, key);
      if (x != y) {
        if (x.empty() || y.empty()) return desc ? y.empty() : x.empty();
        const int c = detail::compare_values(type, x, y);
        return desc ? c > 0 : c < 0;
      }
      return first(a, "id") < first(b, "id");
    });
    ResultTable t;
    const auto& cols = detail::listing_columns(q.source);
    for (auto c : cols) t.columns.emplace_back(c);
    for (const auto& r : rows) {
      std::vector<Cell> out;
      for (auto c : cols) {
        const std::string path(c);
        if (*field_type(q.source, path) == FieldType::integer) {
          out.emplace_back(static_cast<std::int64_t>(std::stoll(first(r, path))));
        } else {
          out.emplace_back(detail::joined(detail::values_of(r, path)));
        }
      }
      t.rows.push_back(std::move(out));
    }
    return t;
  }

  const Warehouse& w_;
  Corpus corpus_;
  std::map<std::string, std::string> thread_of_;
};

inline ResultTable execute(const QuerySpec& q, const Warehouse& w, Date today = today_utc()) {
  return QueryEngine(w).execute(q, today);
}

inline ResultTable execute(std::string_view text, const Warehouse& w, Date today = today_utc()) {
  return execute(parse_query(text), w, today);
}

}  // namespace mailweave
