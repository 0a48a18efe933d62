#pragma once

#include <cstdint>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include "mailweave/date.hpp"
#include "mailweave/error.hpp"
#include "mailweave/text.hpp"

namespace mailweave {

// Query language:
//
//   query  := "FROM" source clause*
//   clause := "WHERE" pred ("AND" pred)*
//           | "ASOF" date ("TX" date)?
//           | "GROUP" "BY" path
//           | "COUNT" ("DISTINCT" path)?
//           | "ORDER" "BY" key ("ASC" | "DESC")?
//           | "LIMIT" int
//   pred   := path op literal
//   op     := "=" | "!=" | "<>" | "≠" | "<" | "<=" | "≤" | ">" | ">=" | "≥" | "CONTAINS"
//   literal:= 'text' | "text" | int | YYYY-MM-DD
//
// Keywords are case-insensitive; each clause other than WHERE may appear once.

enum class Source { messages, persons, institutions, reports };

inline std::string_view to_string(Source s) {
  switch (s) {
    case Source::messages: return "messages";
    case Source::persons: return "persons";
    case Source::institutions: return "institutions";
    case Source::reports: return "reports";
  }
  return "";
}

enum class FieldType { text, date, integer };

struct FieldInfo {
  std::string_view path;
  FieldType type;
};

/// Queryable paths of each source.
inline const std::vector<FieldInfo>& source_fields(Source s) {
  static const std::vector<FieldInfo> messages = {
      {"id", FieldType::text},           {"list", FieldType::text},
      {"subject", FieldType::text},      {"subject_key", FieldType::text},
      {"date", FieldType::date},         {"sender", FieldType::text},
      {"sender.name", FieldType::text},  {"sender.domain", FieldType::text},
      {"sender.person", FieldType::text}, {"sender.institution", FieldType::text},
      {"in_reply_to", FieldType::text},  {"references", FieldType::text},
      {"recipients", FieldType::text},   {"thread", FieldType::text},
      {"body", FieldType::text}};
  static const std::vector<FieldInfo> persons = {
      {"id", FieldType::text},        {"name", FieldType::text},
      {"firstname", FieldType::text}, {"canonical_name", FieldType::text},
      {"addresses", FieldType::text}, {"domains", FieldType::text},
      {"functions", FieldType::text}, {"affiliations", FieldType::text},
      {"posts", FieldType::integer}};
  static const std::vector<FieldInfo> institutions = {
      {"id", FieldType::text}, {"name", FieldType::text},
      {"kind", FieldType::text}, {"domains", FieldType::text}};
  static const std::vector<FieldInfo> reports = {
      {"id", FieldType::text},      {"title", FieldType::text},
      {"maturity", FieldType::text}, {"pub_date", FieldType::date},
      {"authors", FieldType::text}, {"authors.institution", FieldType::text}};
  switch (s) {
    case Source::messages: return messages;
    case Source::persons: return persons;
    case Source::institutions: return institutions;
    case Source::reports: return reports;
  }
  return messages;
}

inline std::optional<FieldType> field_type(Source s, std::string_view path) {
  for (const auto& f : source_fields(s)) {
    if (f.path == path) return f.type;
  }
  return std::nullopt;
}

enum class CompareOp { eq, ne, lt, le, gt, ge, contains };

struct Literal {
  enum class Kind { text, integer, date };
  Kind kind = Kind::text;
  std::string text;  // text value, or the canonical spelling of int/date
  std::int64_t integer = 0;

  friend bool operator==(const Literal&, const Literal&) = default;
};

struct Predicate {
  std::string path;
  CompareOp op = CompareOp::eq;
  Literal literal;

  friend bool operator==(const Predicate&, const Predicate&) = default;
};

struct Aggregate {
  enum class Kind { count, count_distinct };
  Kind kind = Kind::count;
  std::string path;  // count_distinct only

  friend bool operator==(const Aggregate&, const Aggregate&) = default;
};

struct OrderSpec {
  std::string key;
  bool descending = false;

  friend bool operator==(const OrderSpec&, const OrderSpec&) = default;
};

struct QuerySpec {
  Source source = Source::messages;
  std::vector<Predicate> predicates;
  std::optional<Date> asof_valid;
  std::optional<Date> asof_transaction;
  std::optional<std::string> group_by;
  std::optional<Aggregate> aggregate;
  std::optional<OrderSpec> order;
  std::optional<std::size_t> limit;

  friend bool operator==(const QuerySpec&, const QuerySpec&) = default;
};

namespace detail {

struct Token {
  enum class Kind { word, string, number, date, op, end };
  Kind kind = Kind::end;
  std::string text;
  std::size_t line = 1;
  std::size_t column = 1;
};

inline std::vector<Token> tokenize(std::string_view src) {
  std::vector<Token> out;
  std::size_t i = 0, line = 1, col = 1;
  auto bump = [&](std::size_t n) {
    for (std::size_t k = 0; k < n && i < src.size(); ++k, ++i) {
      if (src[i] == '\n') {
        ++line;
        col = 1;
      } else if ((static_cast<unsigned char>(src[i]) & 0xC0) != 0x80) {
        ++col;
      }
    }
  };
  while (true) {
    while (i < src.size() && text::is_space(src[i])) bump(1);
    Token t;
    t.line = line;
    t.column = col;
    if (i >= src.size()) {
      out.push_back(t);
      return out;
    }
    const char c = src[i];
    const std::string_view rest = src.substr(i);
    if (std::isalpha(static_cast<unsigned char>(c)) || c == '_') {
      std::size_t n = 0;
      while (n < rest.size() && (std::isalnum(static_cast<unsigned char>(rest[n])) || rest[n] == '_' ||
                                 rest[n] == '.')) {
        ++n;
      }
      t.kind = Token::Kind::word;
      t.text = std::string(rest.substr(0, n));
      bump(n);
    } else if (std::isdigit(static_cast<unsigned char>(c))) {
      std::size_t n = 0;
      while (n < rest.size() && (std::isdigit(static_cast<unsigned char>(rest[n])) || rest[n] == '-')) ++n;
      t.text = std::string(rest.substr(0, n));
      if (t.text.find('-') != std::string::npos) {
        if (!parse_iso_date(t.text)) throw SyntaxError("invalid date '" + t.text + "'", line, col, {"date"});
        t.kind = Token::Kind::date;
      } else {
        t.kind = Token::Kind::number;
      }
      bump(n);
    } else if (c == '\'' || c == '"') {
      std::string value;
      std::size_t n = 1;
      bool closed = false;
      while (n < rest.size()) {
        if (rest[n] == c) {
          if (n + 1 < rest.size() && rest[n + 1] == c) {
            value.push_back(c);
            n += 2;
            continue;
          }
          closed = true;
          ++n;
          break;
        }
        value.push_back(rest[n++]);
      }
      if (!closed) throw SyntaxError("unterminated string literal", line, col, {"closing quote"});
      t.kind = Token::Kind::string;
      t.text = std::move(value);
      bump(n);
    } else {
      static constexpr std::string_view kOps[] = {"<=", ">=", "!=", "<>", "\xE2\x89\xA0", "\xE2\x89\xA4",
                                                  "\xE2\x89\xA5", "=", "<", ">"};
      bool matched = false;
      for (auto op : kOps) {
        if (rest.substr(0, op.size()) == op) {
          t.kind = Token::Kind::op;
          t.text = std::string(op);
          bump(op.size());
          matched = true;
          break;
        }
      }
      if (!matched) {
        throw SyntaxError("unexpected character '" + std::string(1, c) + "'", line, col, {});
      }
    }
    out.push_back(std::move(t));
  }
}

class QueryParser {
 public:
  explicit QueryParser(std::string_view src) : tokens_(tokenize(src)) {}

  QuerySpec parse() {
    QuerySpec q;
    expect_keyword("FROM");
    const Token& src = peek();
    if (src.kind != Token::Kind::word) fail(src, {"messages", "persons", "institutions", "reports"});
    const std::string name = text::ascii_lower(src.text);
    if (name == "messages") {
      q.source = Source::messages;
    } else if (name == "persons") {
      q.source = Source::persons;
    } else if (name == "institutions") {
      q.source = Source::institutions;
    } else if (name == "reports") {
      q.source = Source::reports;
    } else {
      fail(src, {"messages", "persons", "institutions", "reports"});
    }
    ++pos_;
    std::set<std::string> seen;
    static const std::set<std::string> kClauses = {"WHERE", "ASOF",  "GROUP",
                                                   "COUNT", "ORDER", "LIMIT", "end of input"};
    while (peek().kind != Token::Kind::end) {
      const Token& t = peek();
      if (t.kind != Token::Kind::word) fail(t, kClauses);
      const std::string kw = upper(t.text);
      if (!kClauses.count(kw) || kw == "end of input") fail(t, kClauses);
      if (kw != "WHERE" && !seen.insert(kw).second) {
        throw SyntaxError("repeated " + kw + " clause", t.line, t.column, {});
      }
      ++pos_;
      if (kw == "WHERE") {
        q.predicates.push_back(parse_predicate(q.source));
        while (is_keyword(peek(), "AND")) {
          ++pos_;
          q.predicates.push_back(parse_predicate(q.source));
        }
      } else if (kw == "ASOF") {
        q.asof_valid = parse_date();
        if (is_keyword(peek(), "TX")) {
          ++pos_;
          q.asof_transaction = parse_date();
        }
      } else if (kw == "GROUP") {
        expect_keyword("BY");
        q.group_by = parse_path(q.source);
      } else if (kw == "COUNT") {
        Aggregate a;
        if (is_keyword(peek(), "DISTINCT")) {
          ++pos_;
          a.kind = Aggregate::Kind::count_distinct;
          a.path = parse_path(q.source);
        }
        q.aggregate = a;
      } else if (kw == "ORDER") {
        expect_keyword("BY");
        const Token& k = peek();
        if (k.kind != Token::Kind::word) fail(k, {"order key"});
        order_token_ = pos_;
        OrderSpec o{k.text, false};
        ++pos_;
        if (is_keyword(peek(), "ASC")) {
          ++pos_;
        } else if (is_keyword(peek(), "DESC")) {
          o.descending = true;
          ++pos_;
        }
        q.order = o;
      } else if (kw == "LIMIT") {
        const Token& n = peek();
        if (n.kind != Token::Kind::number) fail(n, {"positive integer"});
        std::size_t value = 0;
        try {
          value = std::stoull(n.text);
        } catch (const std::exception&) {
          fail(n, {"positive integer"});
        }
        if (value == 0) throw QueryError(QueryError::Kind::invalid, "LIMIT must be positive", n.line, n.column);
        q.limit = value;
        ++pos_;
      }
    }
    check_order(q);
    return q;
  }

 private:
  static std::string upper(std::string_view s) {
    std::string out(s);
    for (char& c : out) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
    return out;
  }

  static bool is_keyword(const Token& t, std::string_view kw) {
    return t.kind == Token::Kind::word && upper(t.text) == kw;
  }

  const Token& peek() const { return tokens_[pos_]; }

  [[noreturn]] static void fail(const Token& t, std::set<std::string> expected) {
    std::string found = t.kind == Token::Kind::end ? "end of input" : "'" + t.text + "'";
    std::string list;
    for (const auto& e : expected) list += (list.empty() ? "" : ", ") + e;
    throw SyntaxError("unexpected " + found + (list.empty() ? "" : "; expected one of: " + list), t.line,
                      t.column, std::move(expected));
  }

  void expect_keyword(std::string_view kw) {
    if (!is_keyword(peek(), kw)) fail(peek(), {std::string(kw)});
    ++pos_;
  }

  std::string parse_path(Source source) {
    const Token& t = peek();
    if (t.kind != Token::Kind::word) fail(t, {"field path"});
    if (!field_type(source, t.text)) {
      throw QueryError(QueryError::Kind::unknown_field,
                       "unknown field '" + t.text + "' for " + std::string(to_string(source)), t.line,
                       t.column);
    }
    ++pos_;
    return t.text;
  }

  Date parse_date() {
    const Token& t = peek();
    if (t.kind != Token::Kind::date) fail(t, {"date"});
    ++pos_;
    return *parse_iso_date(t.text);
  }

  Predicate parse_predicate(Source source) {
    Predicate p;
    const Token& path_tok = peek();
    p.path = parse_path(source);
    const FieldType type = *field_type(source, p.path);
    const Token& op = peek();
    static const std::set<std::string> kOps = {"=", "!=", "<", "<=", ">", ">=", "CONTAINS"};
    if (op.kind == Token::Kind::op) {
      if (op.text == "=") p.op = CompareOp::eq;
      else if (op.text == "!=" || op.text == "<>" || op.text == "\xE2\x89\xA0") p.op = CompareOp::ne;
      else if (op.text == "<") p.op = CompareOp::lt;
      else if (op.text == "<=" || op.text == "\xE2\x89\xA4") p.op = CompareOp::le;
      else if (op.text == ">") p.op = CompareOp::gt;
      else p.op = CompareOp::ge;
    } else if (is_keyword(op, "CONTAINS")) {
      p.op = CompareOp::contains;
    } else {
      fail(op, kOps);
    }
    ++pos_;
    const Token& lit = peek();
    switch (lit.kind) {
      case Token::Kind::string: p.literal = {Literal::Kind::text, lit.text, 0}; break;
      case Token::Kind::number: {
        std::int64_t v = 0;
        try {
          v = std::stoll(lit.text);
        } catch (const std::exception&) {
          fail(lit, {"integer"});
        }
        p.literal = {Literal::Kind::integer, std::to_string(v), v};
        break;
      }
      case Token::Kind::date: p.literal = {Literal::Kind::date, lit.text, 0}; break;
      default: fail(lit, {"literal"});
    }
    ++pos_;
    auto mismatch = [&](const std::string& why) {
      throw QueryError(QueryError::Kind::type_mismatch, why, lit.line, lit.column);
    };
    if (type == FieldType::date) {
      if (p.literal.kind == Literal::Kind::text && parse_iso_date(p.literal.text)) {
        p.literal.kind = Literal::Kind::date;
      }
      if (p.literal.kind != Literal::Kind::date) mismatch("field '" + p.path + "' compares with a date");
      if (p.op == CompareOp::contains) mismatch("CONTAINS needs a text field");
    } else if (type == FieldType::integer) {
      if (p.literal.kind != Literal::Kind::integer) mismatch("field '" + p.path + "' compares with an integer");
      if (p.op == CompareOp::contains) mismatch("CONTAINS needs a text field");
    } else if (p.literal.kind != Literal::Kind::text) {
      mismatch("field '" + p.path + "' compares with a quoted string");
    }
    (void)path_tok;
    return p;
  }

  void check_order(const QuerySpec& q) const {
    if (!q.order) return;
    const Token& t = tokens_[order_token_];
    const std::string& key = q.order->key;
    const bool aggregated = q.aggregate || q.group_by;
    if (aggregated) {
      if (key == "count" || key == "key" || (q.group_by && key == *q.group_by)) return;
      throw QueryError(QueryError::Kind::unknown_field,
                       "aggregated results order by count or the group key, not '" + key + "'", t.line,
                       t.column);
    }
    if (!field_type(q.source, key)) {
      throw QueryError(QueryError::Kind::unknown_field, "unknown order key '" + key + "'", t.line, t.column);
    }
  }

  std::vector<Token> tokens_;
  std::size_t pos_ = 0;
  std::size_t order_token_ = 0;
};

}  // namespace detail

/// Throws SyntaxError (with the expected-token set) or QueryError.
inline QuerySpec parse_query(std::string_view text) {
  if (text::trim(text).empty()) throw SyntaxError("empty query", 1, 1, {"FROM"});
  return detail::QueryParser(text).parse();
}

}  // namespace mailweave
