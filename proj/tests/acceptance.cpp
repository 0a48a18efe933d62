// One line per acceptance criterion; exit status 1 if any fails.

#include <chrono>
#include <functional>
#include <iostream>
#include <random>

#include "graph_readers.hpp"
#include "support.hpp"

using namespace mailweave;
using mailweave::testing::d;

namespace {

// Runtime limits. Single-core build machine; these are the published limits.
constexpr double kTemporalExampleLimitSec = 1.0;
constexpr double kRoundTripLimitSec = 30.0;
constexpr double kOracleLimitSec = 5.0;
constexpr int kGeneratedRecords = 1000;
constexpr int kGeneratedHistories = 1000;

/// Collects failed checks of one criterion.
class Check {
 public:
  void expect(bool ok, const std::string& what) {
    if (!ok && failures_.size() < 5) failures_.push_back(what);
    if (!ok) ++failed_;
  }
  template <class A, class B>
  void equal(const A& a, const B& b, const std::string& what) {
    expect(a == b, what);
  }
  bool ok() const { return failed_ == 0; }
  std::string summary() const {
    std::string out = std::to_string(failed_) + " failed check(s)";
    for (const auto& f : failures_) out += "; " + f;
    return out;
  }

 private:
  std::vector<std::string> failures_;
  std::size_t failed_ = 0;
};

struct Criterion {
  std::string name;
  double limit_sec;  // 0 = no runtime limit
  std::function<void(Check&)> body;
};

// ------------------------------------------------------------ temporal example

void john_doe_example(Check& c) {
  Record r{"john.doe@xmlcorp.com", Schema::person, {}};
  Assertion first;
  first.field = "functions";
  first.value = "XML Corp. CEO";
  first.start = d(2001, 1, 1);
  first.end = TemporalBound::on(d(2003, 12, 31));
  first.asserted_at = d(2004, 6, 6);
  const std::string t1 = assert_fact(r, first);
  Assertion second = first;
  second.start = d(2004, 6, 6);
  second.end = TemporalBound::running();
  assert_fact(r, second);
  retract_fact(r, "functions", t1, TemporalBound::on(d(2003, 11, 30)), d(2005, 4, 10));

  const std::vector<std::string> ceo = {"XML Corp. CEO"};
  auto functions = [&](Date valid, std::optional<Date> tx) {
    const SnapshotView v = snapshot_asof(r, valid, tx);
    const auto* f = v.get("functions");
    return f ? *f : std::vector<std::string>{};
  };
  c.equal(functions(d(2002, 6, 1), std::nullopt), ceo, "(2002-06-01, latest) -> CEO");
  c.equal(functions(d(2003, 12, 15), d(2004, 12, 31)), ceo, "(2003-12-15, tx 2004-12-31) -> CEO");
  c.expect(snapshot_asof(r, d(2003, 12, 15), d(2005, 4, 10)).empty(), "(2003-12-15, tx 2005-04-10) -> empty");
  c.equal(functions(d(2004, 7, 1), std::nullopt), ceo, "(2004-07-01, latest) -> CEO");

  // The same history through the fact file and the warehouse.
  Warehouse w;
  std::ifstream facts(mailweave::testing::fixture("facts.jsonl"));
  apply_facts(w, facts);
  c.equal(w.get_record(Schema::person, r.record_id), r, "fact file builds the same record");
}

// ---------------------------------------------------------------- round trips

// Record ids may not hold control characters; values may hold tabs and
// line breaks.
std::string random_text(std::mt19937& rng, bool allow_empty, bool controls = true) {
  static const std::vector<std::string> breaks = {"\t", "\n", "\r\n"};
  static const std::vector<std::string> pieces = {
      "a", "Z", "0", " ", "  ", "<", ">", "&", "&amp;", "\"", "'", "]]>", "<!--", "é",
      "中", "😀", "ß", "CEO", "XML Corp.", "x:y", "=", ";", "\\", "\xC2\xA0", "?>"};
  const std::size_t n = (allow_empty ? 0 : 1) + rng() % 8;
  std::string out;
  for (std::size_t i = 0; i < n; ++i) {
    out += controls && rng() % 6 == 0 ? breaks[rng() % breaks.size()] : pieces[rng() % pieces.size()];
  }
  return out;
}

Date random_date(std::mt19937& rng) { return d(1995, 1, 1).plus_days(static_cast<int>(rng() % 6000)); }

Record random_record(std::mt19937& rng) {
  static const std::vector<std::string> names = {"functions", "affiliations", "name", "x", "_f2", "Title"};
  static const std::vector<std::string> events = {"valid", "transaction", "recorded"};
  Record r{"id-" + random_text(rng, false, false), kAllSchemas[rng() % 4], {}};
  const int ops = static_cast<int>(rng() % 12);
  std::vector<std::pair<std::string, std::string>> made;  // (field, annotation)
  for (int i = 0; i < ops; ++i) {
    if (!made.empty() && rng() % 4 == 0) {
      const auto& [field, id] = made[rng() % made.size()];
      const TemporalAnnotation* target = nullptr;
      for (const auto& v : r.fields[field]) {
        for (const auto& a : v.annotations) {
          if (a.annotation_id == id) target = &a;
        }
      }
      if (target->status == AnnotationStatus::active) {
        const Date start = *target->start.date;
        const Date at = target->asserted_at.plus_days(static_cast<int>(rng() % 400));
        const TemporalBound end =
            rng() % 3 == 0 ? TemporalBound::running() : TemporalBound::on(start.plus_days(rng() % 900));
        made.emplace_back(field, retract_fact(r, field, id, end, at));
      }
      continue;
    }
    Assertion a;
    a.field = names[rng() % names.size()];
    a.value = random_text(rng, true);
    a.start = random_date(rng);
    a.end = rng() % 2 ? TemporalBound::running() : TemporalBound::on(a.start.plus_days(rng() % 2000));
    a.event_type = events[rng() % events.size()];
    a.asserted_at = random_date(rng);
    if (rng() % 3 == 0) a.source = random_text(rng, false);
    if (rng() % 4 == 0) a.ref = kAllSchemas[rng() % 4];
    made.emplace_back(a.field, assert_fact(r, a));
  }
  return r;
}

void record_round_trips(Check& c) {
  std::mt19937 rng(20240229);
  for (int i = 0; i < kGeneratedRecords; ++i) {
    const Record r = random_record(rng);
    try {
      c.equal(parse_record(serialize_record(r)), r, "record " + std::to_string(i) + " round trip");
    } catch (const std::exception& e) {
      c.expect(false, "record " + std::to_string(i) + ": " + e.what());
    }
  }
}

/// Non-decreasing transaction time, as a warehouse sees it.
void bitemporal_histories(Check& c) {
  std::mt19937 rng(1123);
  const std::vector<std::string> values = {"Chair", "Editor", "Member"};
  for (int h = 0; h < kGeneratedHistories; ++h) {
    Record r{"p" + std::to_string(h), Schema::person, {}};
    Date now = d(2000, 1, 1);
    std::vector<std::string> ids;
    const int ops = 1 + static_cast<int>(rng() % 10);
    std::vector<Date> probes_valid;
    for (int k = 0; k < 6; ++k) probes_valid.push_back(d(1999, 1, 1).plus_days(rng() % 4000));

    for (int op = 0; op < ops; ++op) {
      now = now.plus_days(static_cast<int>(rng() % 120));
      const Record before = r;
      struct Probe {
        Date valid, tx;
        SnapshotView seen;
      };
      std::vector<Probe> past;
      for (Date valid : probes_valid) {
        const int span = static_cast<int>((now.days() - d(1999, 6, 1).days()).count());
        const Date tx = d(1999, 6, 1).plus_days(static_cast<int>(rng() % static_cast<unsigned>(span + 1)));
        if (tx < now) past.push_back({valid, tx, snapshot_asof(r, valid, tx)});
      }

      bool retracted = false;
      if (!ids.empty() && rng() % 3 == 0) {
        const std::string& target = ids[rng() % ids.size()];
        try {
          const Date start = [&] {
            for (const auto& v : r.fields["functions"]) {
              for (const auto& a : v.annotations) {
                if (a.annotation_id == target) return *a.start.date;
              }
            }
            return now;
          }();
          const TemporalBound end =
              rng() % 4 == 0 ? TemporalBound::running() : TemporalBound::on(start.plus_days(rng() % 700));
          ids.push_back(retract_fact(r, "functions", target, end, now));
          retracted = true;
        } catch (const AnnotationError&) {
          // Already superseded: nothing changes.
          c.equal(r, before, "failed retraction leaves the record alone");
          continue;
        }
      }
      if (!retracted) {
        Assertion a;
        a.field = "functions";
        a.value = values[rng() % values.size()];
        a.start = d(1999, 1, 1).plus_days(rng() % 3000);
        a.end = rng() % 3 == 0 ? TemporalBound::running() : TemporalBound::on(a.start.plus_days(rng() % 900));
        a.asserted_at = now;
        ids.push_back(assert_fact(r, a));
      }

      // Monotonicity: annotations are only added; old ones keep everything
      // but their status, which only moves from active to superseded.
      std::map<std::string, TemporalAnnotation> old_ann, new_ann;
      if (auto it = before.fields.find("functions"); it != before.fields.end()) {
        for (const auto& v : it->second) {
          for (const auto& a : v.annotations) old_ann.emplace(a.annotation_id, a);
        }
      }
      for (const auto& v : r.fields.at("functions")) {
        for (const auto& a : v.annotations) new_ann.emplace(a.annotation_id, a);
      }
      c.equal(new_ann.size(), old_ann.size() + 1, "one annotation per operation");
      std::size_t newly_superseded = 0;
      for (const auto& [id, a] : old_ann) {
        auto it = new_ann.find(id);
        if (it == new_ann.end()) {
          c.expect(false, "annotation " + id + " vanished");
          continue;
        }
        TemporalAnnotation b = it->second;
        if (a.status == AnnotationStatus::active && b.status == AnnotationStatus::superseded) {
          ++newly_superseded;
          b.status = a.status;
          b.superseded_by = a.superseded_by;
        }
        c.equal(b, a, "annotation " + id + " unchanged");
      }
      c.expect(newly_superseded == (retracted ? 1u : 0u), "only the target is superseded");

      // History preservation: what was known before `now` stays known.
      for (const auto& p : past) {
        c.equal(snapshot_asof(r, p.valid, p.tx), p.seen,
                "history " + std::to_string(h) + ": snapshot at tx " + p.tx.iso() + " unchanged");
      }
    }

    // A knowledge date at or after the last assertion sees the latest state.
    for (Date v : probes_valid) {
      c.equal(snapshot_asof(r, v, now), snapshot_asof(r, v), "tx >= last assertion equals latest");
      c.equal(snapshot_asof(r, v, now.plus_days(365)), snapshot_asof(r, v), "later tx equals latest");
    }
    c.equal(parse_record(serialize_record(r)), r, "history " + std::to_string(h) + " round trip");
  }
}

void round_trip_property(Check& c) {
  record_round_trips(c);
  bitemporal_histories(c);
}

// -------------------------------------------------------------------- oracle

using Pairs = std::vector<std::pair<std::string, std::int64_t>>;

Pairs pairs(const ResultTable& t) {
  Pairs out;
  for (const auto& r : t.rows) out.emplace_back(cell_text(r.front()), std::get<std::int64_t>(r.back()));
  return out;
}

Pairs json_pairs(const nlohmann::json& j) {
  Pairs out;
  for (const auto& row : j) out.emplace_back(row[0].get<std::string>(), row[1].get<std::int64_t>());
  return out;
}

void oracle_equivalence(Check& c) {
  const nlohmann::json oracle = mailweave::testing::oracle();
  Warehouse w;
  store_messages(w, parse_archive_file(mailweave::testing::fixture("corpus.mbox"), "xquery"));
  resolve_warehouse(w, ResolutionRules::defaults());
  const Corpus corpus = load_corpus(w);

  c.equal(corpus.messages.size(), oracle["message_count"].get<std::size_t>(), "message count");
  c.equal(pairs(posts_per_person(corpus)), json_pairs(oracle["posts_per_person"]), "posts_per_person");
  c.equal(pairs(posts_per_domain(corpus)), json_pairs(oracle["posts_per_domain"]), "posts_per_domain");
  c.equal(pairs(posters_per_domain(corpus)), json_pairs(oracle["posters_per_domain"]), "posters_per_domain");

  const auto threads = corpus_threads(corpus);
  std::vector<std::size_t> sizes;
  std::map<std::string, std::vector<std::string>> members;
  for (const auto& t : threads) {
    sizes.push_back(t.message_ids.size());
    members[t.thread_id] = t.message_ids;
  }
  std::sort(sizes.rbegin(), sizes.rend());
  c.equal(sizes, (std::vector<std::size_t>{6, 5, 3, 2, 2}), "thread sizes {6,5,3,2,2}");
  c.equal(sizes, oracle["thread_sizes"].get<std::vector<std::size_t>>(), "thread sizes match oracle");
  c.equal(members, oracle["threads"].get<std::map<std::string, std::vector<std::string>>>(), "thread members");

  std::vector<std::tuple<std::string, std::string, std::int64_t>> edges;
  for (const auto& e : social_graph(threads, corpus).edges) edges.emplace_back(e.source, e.target, e.weight);
  std::vector<std::tuple<std::string, std::string, std::int64_t>> expected_edges;
  for (const auto& e : oracle["social_edges"]) {
    expected_edges.emplace_back(e[0].get<std::string>(), e[1].get<std::string>(), e[2].get<std::int64_t>());
  }
  c.equal(edges, expected_edges, "social graph edges");

  for (const auto& [person, expected] : oracle["answering"].items()) {
    Pairs got;
    const SocialGraph g = answering_profile(corpus, person);
    for (const auto& e : g.edges) {
      c.equal(e.source, person, "answering edges start at " + person);
      got.emplace_back(e.target, e.weight);
    }
    c.equal(got, json_pairs(expected), "answering profile of " + person);
  }
}

// -------------------------------------------------------------- conservation

void check_conservation(Check& c, const Warehouse& w, std::size_t accepted, const std::string& label) {
  const Corpus corpus = load_corpus(w);
  auto sum = [](const ResultTable& t) {
    std::int64_t s = 0;
    for (const auto& r : t.rows) s += std::get<std::int64_t>(r.back());
    return s;
  };
  const auto n = static_cast<std::int64_t>(accepted);
  c.equal(static_cast<std::int64_t>(corpus.messages.size()), n, label + ": stored = accepted");
  c.equal(sum(posts_per_person(corpus)), n, label + ": sum posts_per_person = accepted");
  c.equal(sum(posts_per_domain(corpus)), n, label + ": sum posts_per_domain = accepted");
  c.equal(sum(posts_per_institution(corpus)), n, label + ": sum posts_per_institution = accepted");
  std::map<std::string, std::int64_t> posts;
  for (const auto& [k, v] : pairs(posts_per_domain(corpus))) posts[k] = v;
  for (const auto& [k, v] : pairs(posters_per_domain(corpus))) {
    c.expect(posts.count(k) && v <= posts[k], label + ": posters(" + k + ") <= posts(" + k + ")");
  }
  std::multiset<std::string> seen;
  for (const auto& t : corpus_threads(corpus)) seen.insert(t.message_ids.begin(), t.message_ids.end());
  c.equal(seen.size(), corpus.messages.size(), label + ": threads cover every message once");
  for (const auto& m : corpus.messages) {
    c.equal(seen.count(m.message_id), 1u, label + ": " + m.message_id + " in exactly one thread");
  }
}

void conservation(Check& c) {
  {
    Warehouse w;
    const IngestReport r =
        store_messages(w, parse_archive_file(mailweave::testing::fixture("corpus.mbox"), "xquery"));
    resolve_warehouse(w, ResolutionRules::defaults());
    check_conservation(c, w, r.accepted, "fixture");
  }
  {
    // Two archives of the same list, with skips and a duplicate id.
    Warehouse w;
    std::ifstream reg(mailweave::testing::fixture("registry.jsonl"));
    store_registry(w, read_registry(reg));
    std::size_t accepted = 0;
    for (const char* f : {"list-a.mbox", "list-b.jsonl"}) {
      accepted += store_messages(w, parse_archive_file(mailweave::testing::fixture(f), "xquery")).accepted;
    }
    resolve_warehouse(w, ResolutionRules::defaults());
    check_conservation(c, w, accepted, "list-a+b");
  }
}

// ------------------------------------------------------- report institutions

void table_four(Check& c) {
  Warehouse w;
  mailweave::testing::load_fixture(w);
  // Cross-referenced by hand: Dave is at Oracle for the 2003-05-02 draft and
  // at IBM for the 2004-01-15 note; Gus has no affiliation.
  using Row = std::vector<Cell>;
  const std::vector<Row> expected = {
      {std::string("IBM"), std::string("Corp"), std::int64_t{2}, std::int64_t{1}, std::int64_t{1}, std::int64_t{1}},
      {std::string("Microsoft"), std::string("Corp"), std::int64_t{1}, std::int64_t{1}, std::int64_t{1},
       std::int64_t{0}},
      {std::string("Unknown"), std::string("n.a."), std::int64_t{1}, std::int64_t{1}, std::int64_t{0},
       std::int64_t{0}},
      {std::string("Oracle"), std::string("Corp"), std::int64_t{1}, std::int64_t{0}, std::int64_t{0},
       std::int64_t{1}},
  };
  const ResultTable t = report_institution_table(w);
  c.equal(t.columns, (std::vector<std::string>{"institution", "type", "indiv", "rec", "wg_notes", "drafts"}),
          "columns");
  c.equal(t.rows, expected, "rows");
  const SocialGraph g = coauthor_institution_graph(w);
  c.equal(g.edges, (std::vector<GraphEdge>{{"ibm", "microsoft", 2}, {"ibm", "oracle", 1}}), "coauthor edges");
}

// -------------------------------------------------------------------- export

std::size_t csv_records(const std::string& csv) {
  std::size_t n = 0;
  bool quoted = false;
  for (std::size_t i = 0; i < csv.size(); ++i) {
    if (csv[i] == '"') quoted = !quoted;
    if (!quoted && csv[i] == '\n') ++n;
  }
  return n;
}

void export_round_trip(Check& c) {
  Warehouse w;
  mailweave::testing::load_fixture(w);
  const Corpus corpus = load_corpus(w);
  const std::vector<std::pair<std::string, SocialGraph>> graphs = {
      {"social", social_graph(corpus_threads(corpus), corpus)},
      {"social/institution", social_graph(corpus_threads(corpus), corpus, GraphLevel::institution)},
      {"answering", answering_profile(corpus, "doe@a.com")},
      {"coauthors", coauthor_institution_graph(w)},
  };
  for (const auto& [name, g] : graphs) {
    std::set<std::string> nodes;
    std::multiset<std::tuple<std::string, std::string, std::int64_t>> edges;
    for (const auto& n : g.nodes) nodes.insert(n.id);
    for (const auto& e : g.edges) edges.emplace(e.source, e.target, e.weight);
    ExportOptions by_id;
    by_id.label_field = LabelField::id;
    for (ExportFormat f : {ExportFormat::graphml, ExportFormat::dot, ExportFormat::pajek}) {
      const std::string text = render_graph(g, f, by_id);
      const mailweave::testing::ParsedGraph p = f == ExportFormat::graphml ? mailweave::testing::read_graphml(text)
                                                : f == ExportFormat::dot     ? mailweave::testing::read_dot(text)
                                                                             : mailweave::testing::read_pajek(text);
      const std::string what = name + " as " + std::string(to_string(f));
      std::set<std::string> got_nodes;
      for (const auto& [id, label] : p.labels) got_nodes.insert(id);
      std::multiset<std::tuple<std::string, std::string, std::int64_t>> got_edges;
      for (const auto& [ends, weight] : p.edges) got_edges.emplace(ends.first, ends.second, weight);
      c.equal(got_nodes, nodes, what + ": node set");
      c.equal(got_edges, edges, what + ": weighted edges");
      c.equal(p.directed, g.directed, what + ": directedness");
    }
  }
  const std::vector<std::pair<std::string, ResultTable>> tables = {
      {"posts-per-person", posts_per_person(corpus)},
      {"posts-per-domain", posts_per_domain(corpus)},
      {"posts-per-institution", posts_per_institution(corpus)},
      {"posters-per-domain", posters_per_domain(corpus)},
      {"report-institutions", report_institution_table(w)},
  };
  for (const auto& [name, t] : tables) {
    c.equal(csv_records(render_table(t, ExportFormat::csv)), t.rows.size() + 1, name + ": csv rows");
  }
}

// ----------------------------------------------------------------------- dsl

void dsl(Check& c) {
  Warehouse w;
  mailweave::testing::load_fixture(w);
  const Corpus corpus = load_corpus(w);
  const Date today = d(2026, 1, 1);
  c.equal(pairs(execute("FROM messages GROUP BY sender.person COUNT ORDER BY count DESC", w, today)),
          pairs(posts_per_person(corpus)), "posts per person");
  c.equal(pairs(execute("FROM messages GROUP BY sender.institution COUNT ORDER BY count DESC", w, today)),
          pairs(posts_per_institution(corpus)), "posts per institution");
  c.equal(pairs(execute("FROM messages GROUP BY sender.domain COUNT DISTINCT sender.person ORDER BY count DESC", w,
                        today)),
          pairs(posters_per_domain(corpus)), "posters per domain");
  try {
    parse_query("FROM messages\nWHERE sender.domain = 'ibm.com' GROUP sender.person");
    c.expect(false, "malformed query accepted");
  } catch (const SyntaxError& e) {
    c.equal(e.line(), 2u, "error line");
    c.equal(e.column(), 39u, "error column");
    c.expect(e.expected().count("BY") == 1, "expected set names BY");
  }
}

}  // namespace

int main() {
  const std::vector<Criterion> criteria = {
      {"temporal worked example", kTemporalExampleLimitSec, john_doe_example},
      {"round-trip property (1000 records, 1000 histories)", kRoundTripLimitSec, round_trip_property},
      {"oracle equivalence on the fixture corpus", kOracleLimitSec, oracle_equivalence},
      {"conservation suite", 0, conservation},
      {"report institution table", 0, table_four},
      {"export round-trip", 0, export_round_trip},
      {"query language", 0, dsl},
  };
  bool all = true;
  for (const auto& cr : criteria) {
    Check c;
    const auto t0 = std::chrono::steady_clock::now();
    try {
      cr.body(c);
    } catch (const std::exception& e) {
      c.expect(false, std::string("exception: ") + e.what());
    }
    const double sec = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = cr.limit_sec == 0 || sec < cr.limit_sec;
    const bool ok = c.ok() && in_time;
    all = all && ok;
    std::cout << (ok ? "[PASS] " : "[FAIL] ") << cr.name << " (" << static_cast<long>(sec * 1000) << " ms";
    if (cr.limit_sec > 0) std::cout << ", limit " << cr.limit_sec << " s";
    std::cout << ")";
    if (!c.ok()) std::cout << ": " << c.summary();
    if (!in_time) std::cout << ": over the time limit";
    std::cout << "\n";
  }
  return all ? 0 : 1;
}
