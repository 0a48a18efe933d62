#include <gtest/gtest.h>

#include <map>
#include <random>

#include "support.hpp"

using namespace mailweave;
using mailweave::testing::d;

namespace {

EmailMessage msg(std::string id, std::string from, std::string sent, std::optional<std::string> irt = {},
                 std::vector<std::string> refs = {}, std::string subject = "topic", std::string list = "l") {
  EmailMessage m;
  m.message_id = std::move(id);
  m.list_id = std::move(list);
  m.sender = normalize_address(from);
  m.sent_at = *parse_iso_timestamp(sent);
  m.in_reply_to = std::move(irt);
  m.references = std::move(refs);
  m.subject_raw = std::move(subject);
  m.subject_key = subject_key(m.subject_raw);
  return m;
}

std::vector<std::size_t> sizes(const std::vector<Thread>& threads) {
  std::vector<std::size_t> out;
  for (const auto& t : threads) out.push_back(t.message_ids.size());
  std::sort(out.rbegin(), out.rend());
  return out;
}

}  // namespace

TEST(Identity, FoldName) {
  const NameFolding all;
  EXPECT_EQ(fold_name("Dupré, René", all), "dupre rene");
  EXPECT_EQ(fold_name("  J.  Doe ", all), "doe j");
  EXPECT_EQ(fold_name("René Dupré", NameFolding{true, false, false}), "rené dupré");
}

TEST(Identity, RulesFromJson) {
  const auto rules = rules_from_json(nlohmann::json::parse(
      R"({"rules":["full_name_global"],"case_fold":true,"strip_diacritics":false,"token_sort":true})"));
  EXPECT_TRUE(rules.enabled(Rule::exact_address));
  EXPECT_TRUE(rules.enabled(Rule::full_name_global));
  EXPECT_FALSE(rules.enabled(Rule::name_and_domain));
  EXPECT_FALSE(rules.folding().strip_diacritics);
  EXPECT_THROW(rules_from_json(nlohmann::json::parse(R"({"rules":["psychic"]})")), Error);
}

TEST(Identity, FixturePersons) {
  const auto persons = resolve_persons(mailweave::testing::corpus_messages(), ResolutionRules::defaults());
  const auto expected = mailweave::testing::oracle()["persons"];
  ASSERT_EQ(persons.size(), expected.size());
  for (const auto& p : persons) {
    ASSERT_TRUE(expected.contains(p.person_id)) << p.person_id;
    EXPECT_EQ(std::vector<std::string>(p.addresses.begin(), p.addresses.end()),
              expected[p.person_id].get<std::vector<std::string>>());
  }
  EXPECT_EQ(persons.front().person_id, "alice@ibm.com");
  auto carol = std::find_if(persons.begin(), persons.end(),
                            [](const Person& p) { return p.person_id == "carol@research.microsoft.com"; });
  EXPECT_EQ(carol->canonical_name, "Carol White");
}

TEST(Identity, RuleChoiceChangesMerging) {
  const std::vector<EmailMessage> ms = {
      msg("1", "Ana Lima <ana@x.org>", "2002-01-01T00:00:00Z"),
      msg("2", "Lima, Ana <ana.lima@y.org>", "2002-01-02T00:00:00Z"),
      msg("3", "Ana Lima <al@x.org>", "2002-01-03T00:00:00Z"),
      msg("4", "Ana <ana@z.org>", "2002-01-04T00:00:00Z"),
  };
  const auto exact = resolve_persons(ms, ResolutionRules({Rule::exact_address}));
  EXPECT_EQ(exact.size(), 4u);
  const auto by_domain = resolve_persons(ms, ResolutionRules::defaults());
  EXPECT_EQ(by_domain.size(), 3u);
  const auto global = resolve_persons(ms, ResolutionRules({Rule::full_name_global}));
  ASSERT_EQ(global.size(), 2u);
  EXPECT_EQ(global[0].person_id, "al@x.org");
  EXPECT_EQ(global[0].addresses.size(), 3u);
  // Single-token names never merge globally.
  EXPECT_EQ(global[1].person_id, "ana@z.org");
}

TEST(Identity, CanonicalNameTiesGoToSmallest) {
  const std::vector<EmailMessage> ms = {
      msg("1", "Zed Q <q@x.org>", "2002-01-01T00:00:00Z"),
      msg("2", "Amy Q <q@x.org>", "2002-01-02T00:00:00Z"),
  };
  EXPECT_EQ(resolve_persons(ms, ResolutionRules::defaults())[0].canonical_name, "Amy Q");
}

TEST(Identity, RecipientsDoNotCreatePersons) {
  EmailMessage m = msg("1", "a@x.org", "2002-01-01T00:00:00Z");
  m.recipients.push_back(normalize_address("b@y.org"));
  EXPECT_EQ(resolve_persons({m}, ResolutionRules::defaults()).size(), 1u);
}

TEST(Identity, InstitutionMapping) {
  std::ifstream in(mailweave::testing::fixture("registry.jsonl"));
  const auto registry = read_registry(in);
  EXPECT_EQ(map_institution("research.microsoft.com", registry), "microsoft");
  EXPECT_EQ(map_institution("IBM.com", registry), "ibm");
  EXPECT_EQ(map_institution("inf.ed.ac.uk", registry), "ed");
  const Institution unknown = map_institution_entry("yahoo.com", registry);
  EXPECT_EQ(unknown.institution_id, "yahoo.com");
  EXPECT_EQ(unknown.kind, InstitutionKind::NA);
  EXPECT_EQ(to_string(map_institution_entry("kp.org", registry).kind), "Org");
  EXPECT_EQ(to_string(map_institution_entry("brown.edu", registry).kind), "Uni");
}

TEST(Identity, RegistryDomainsMustBeDisjoint) {
  std::istringstream in(R"({"id":"a","name":"A","kind":"Corp","domains":["x.com"]}
{"id":"b","name":"B","kind":"Corp","domains":["x.com"]})");
  EXPECT_THROW(read_registry(in), SchemaError);
  std::istringstream kind(R"({"id":"a","kind":"Guild"})");
  EXPECT_THROW(read_registry(kind), SchemaError);
}

TEST(Identity, ResolutionKeepsHandEnteredFields) {
  Warehouse w;
  mailweave::testing::load_fixture(w);
  const SnapshotView alice = w.snapshot_asof(Schema::person, "alice@ibm.com", d(2007, 1, 1));
  EXPECT_EQ(*alice.get("affiliations"), std::vector<std::string>{"ibm"});
  EXPECT_EQ(*alice.get("addresses"), std::vector<std::string>{"alice@ibm.com"});
  // Addresses hold from the first day they posted.
  EXPECT_EQ(w.snapshot_asof(Schema::person, "doe@a.com", d(2002, 4, 3)).get("addresses")->size(), 1u);
  EXPECT_EQ(w.snapshot_asof(Schema::person, "doe@a.com", d(2002, 4, 4)).get("addresses")->size(), 2u);
  resolve_warehouse(w, ResolutionRules({Rule::exact_address}));
  EXPECT_NE(w.find_record(Schema::person, "jd@a.com"), nullptr);
  EXPECT_NE(w.find_record(Schema::person, "john.doe@xmlcorp.com"), nullptr);
}

TEST(Threads, SimpleChains) {
  EXPECT_EQ(sizes(build_threads({msg("a", "x@y.org", "2002-01-01T00:00:00Z")})), std::vector<std::size_t>{1});
  const auto t = build_threads({msg("c", "x@y.org", "2002-01-03T00:00:00Z", "b"),
                                msg("a", "x@y.org", "2002-01-01T00:00:00Z"),
                                msg("b", "x@y.org", "2002-01-02T00:00:00Z", "a")});
  ASSERT_EQ(t.size(), 1u);
  EXPECT_EQ(t[0].thread_id, "a");
  EXPECT_EQ(t[0].message_ids, (std::vector<std::string>{"a", "b", "c"}));
}

TEST(Threads, SubjectFallbackWindowAndList) {
  const std::vector<EmailMessage> ms = {
      msg("a", "x@y.org", "2002-01-01T00:00:00Z", {}, {}, "[l] Topic"),
      msg("b", "x@y.org", "2002-03-31T00:00:00Z", {}, {}, "Re: Topic"),  // 89 days
      msg("c", "x@y.org", "2002-04-02T00:00:00Z", {}, {}, "Re: Topic"),  // 91 days from a
      msg("d", "x@y.org", "2002-01-05T00:00:00Z", {}, {}, "Re: Topic", "other-list"),
  };
  const ThreadLinks links = link_messages(ms);
  EXPECT_EQ(links.parent[1], 0u);
  EXPECT_EQ(links.parent[2], 1u);  // the earliest in-window match is b
  EXPECT_FALSE(links.parent[3]);
  ThreadingOptions narrow;
  narrow.subject_window_days = 30;
  EXPECT_FALSE(link_messages(ms, narrow).parent[1]);
}

TEST(Threads, CyclesAreBroken) {
  const std::vector<EmailMessage> ms = {
      msg("a", "x@y.org", "2002-01-01T00:00:00Z", "b", {}, "one"),
      msg("b", "x@y.org", "2002-01-01T00:00:00Z", "a", {}, "two"),
      msg("c", "x@y.org", "2002-01-01T00:00:00Z", "c", {}, "three"),
  };
  const auto t = build_threads(ms);
  std::size_t total = 0;
  for (const auto& th : t) total += th.message_ids.size();
  EXPECT_EQ(total, 3u);
  EXPECT_EQ(sizes(t), (std::vector<std::size_t>{2, 1}));
}

TEST(Threads, FixtureMatchesOracle) {
  const Corpus c = make_corpus(mailweave::testing::corpus_messages(),
                               resolve_persons(mailweave::testing::corpus_messages(), ResolutionRules::defaults()));
  const auto threads = corpus_threads(c);
  const auto oracle = mailweave::testing::oracle();
  EXPECT_EQ(sizes(threads), oracle["thread_sizes"].get<std::vector<std::size_t>>());
  for (const auto& t : threads) {
    EXPECT_EQ(t.message_ids, oracle["threads"][t.thread_id].get<std::vector<std::string>>()) << t.thread_id;
  }
}

TEST(Threads, RandomCorporaArePartitioned) {
  std::mt19937 rng(7);
  for (int round = 0; round < 200; ++round) {
    const int n = 1 + static_cast<int>(rng() % 40);
    std::vector<EmailMessage> ms;
    for (int i = 0; i < n; ++i) {
      std::optional<std::string> irt;
      if (rng() % 2) irt = "r" + std::to_string(rng() % (n + 5));
      std::vector<std::string> refs;
      for (unsigned k = rng() % 3; k > 0; --k) refs.push_back("r" + std::to_string(rng() % (n + 5)));
      ms.push_back(msg("r" + std::to_string(i), "p" + std::to_string(rng() % 5) + "@x.org",
                       "2002-01-" + std::to_string(10 + rng() % 9) + "T00:00:00Z", irt, refs,
                       "s" + std::to_string(rng() % 4)));
    }
    const auto threads = build_threads(ms);
    std::multiset<std::string> seen;
    for (const auto& t : threads) seen.insert(t.message_ids.begin(), t.message_ids.end());
    ASSERT_EQ(seen.size(), ms.size());
    for (const auto& m : ms) ASSERT_EQ(seen.count(m.message_id), 1u);
    const ThreadLinks links = link_messages(ms);
    for (std::size_t i = 0; i < ms.size(); ++i) ASSERT_FALSE(links.parent[links.root[i]]);
  }
}

TEST(Graph, BuilderInvariants) {
  GraphBuilder g(false);
  g.add_edge("b", "a");
  g.add_edge("a", "b", 2);
  g.add_edge("a", "a");
  g.add_node("a", "Alpha");
  const SocialGraph s = g.build();
  ASSERT_EQ(s.edges.size(), 1u);
  EXPECT_EQ(s.edges[0], (GraphEdge{"a", "b", 3}));
  EXPECT_EQ(s.nodes[0].label, "Alpha");
  EXPECT_EQ(s.nodes[1].label, "b");
  EXPECT_EQ(s.edge("b", "a")->weight, 3);
}

TEST(Analytics, FixtureTablesMatchOracle) {
  Warehouse w;
  mailweave::testing::load_fixture(w, false);
  const auto oracle = mailweave::testing::oracle();
  auto rows = [](const ResultTable& t) {
    nlohmann::json out = nlohmann::json::array();
    for (const auto& r : t.rows) out.push_back({cell_text(r[0]), std::get<std::int64_t>(r.back())});
    return out;
  };
  EXPECT_EQ(rows(posts_per_person(w)), oracle["posts_per_person"]);
  EXPECT_EQ(rows(posts_per_domain(w)), oracle["posts_per_domain"]);
  EXPECT_EQ(rows(posters_per_domain(w)), oracle["posters_per_domain"]);
}

TEST(Analytics, InstitutionTableMergesSubdomains) {
  Warehouse w;
  mailweave::testing::load_fixture(w, false);
  const ResultTable t = posts_per_institution(load_corpus(w));
  EXPECT_EQ(t.columns, (std::vector<std::string>{"institution", "kind", "count"}));
  std::map<std::string, std::int64_t> counts;
  for (const auto& r : t.rows) counts[cell_text(r[0])] = std::get<std::int64_t>(r[2]);
  EXPECT_EQ(counts["microsoft"], 5);  // microsoft.com 3 + research.microsoft.com 2
  EXPECT_EQ(counts["yahoo.com"], 2);
  EXPECT_EQ(counts["w3c"], 1);
  EXPECT_EQ(cell_text(t.rows[0][0]), "a.com");
  EXPECT_EQ(cell_text(t.rows[0][1]), "n.a.");
}

TEST(Analytics, AnsweringProfileEdgeCases) {
  Warehouse w;
  mailweave::testing::load_fixture(w, false);
  const SocialGraph erin = answering_profile(w, "erin@yahoo.com");
  EXPECT_TRUE(erin.directed);
  EXPECT_TRUE(erin.edges.empty());
  const SocialGraph doe = answering_profile(w, "doe@a.com");
  std::int64_t out_weight = 0;
  for (const auto& e : doe.edges) out_weight += e.weight;
  EXPECT_LE(out_weight, 5);
}
