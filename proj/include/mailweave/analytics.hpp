#pragma once

#include <algorithm>
#include <map>
#include <set>
#include <string>
#include <vector>

#include "mailweave/graph.hpp"
#include "mailweave/identity.hpp"
#include "mailweave/message.hpp"
#include "mailweave/model.hpp"
#include "mailweave/result_table.hpp"
#include "mailweave/temporal.hpp"
#include "mailweave/threads.hpp"
#include "mailweave/warehouse.hpp"

namespace mailweave {

/// Everything the mail analytics need, read once from a warehouse.
struct Corpus {
  std::vector<EmailMessage> messages;                 // (sent_at, message_id) order
  std::map<std::string, std::string> person_of_key;   // address key -> person id
  std::map<std::string, std::string> person_label;    // person id -> canonical name
  std::vector<Institution> registry;
  ThreadingOptions threading;

  /// Senders that resolution never saw count as their own person.
  std::string person_of(const EmailMessage& m) const {
    auto it = person_of_key.find(m.sender.key);
    return it == person_of_key.end() ? m.sender.key : it->second;
  }

  std::string label_of(const std::string& person_id) const {
    auto it = person_label.find(person_id);
    return it == person_label.end() ? person_id : it->second;
  }

  Institution institution_of(const EmailMessage& m) const {
    return map_institution_entry(domain_of(m.sender), registry);
  }
};

inline Corpus make_corpus(std::vector<EmailMessage> messages, const std::vector<Person>& persons,
                          std::vector<Institution> registry = {}, ThreadingOptions threading = {}) {
  Corpus c;
  std::stable_sort(messages.begin(), messages.end(), [](const EmailMessage& a, const EmailMessage& b) {
    return a.sent_at != b.sent_at ? a.sent_at < b.sent_at : a.message_id < b.message_id;
  });
  c.messages = std::move(messages);
  c.person_of_key = person_index(persons);
  for (const auto& p : persons) {
    if (p.canonical_name) c.person_label[p.person_id] = *p.canonical_name;
  }
  c.registry = std::move(registry);
  c.threading = threading;
  return c;
}

inline Corpus load_corpus(const Warehouse& w, ThreadingOptions threading = {}) {
  std::vector<Person> persons;
  for (const Record* r : w.list_records(Schema::person)) persons.push_back(record_to_person(*r));
  return make_corpus(load_messages(w), persons, load_registry(w), threading);
}

namespace detail {

/// (key, count) rows, count descending then key ascending.
inline ResultTable count_table(std::string key_column, std::string value_column,
                               const std::map<std::string, std::int64_t>& counts) {
  std::vector<std::pair<std::string, std::int64_t>> rows(counts.begin(), counts.end());
  std::stable_sort(rows.begin(), rows.end(),
                   [](const auto& a, const auto& b) { return a.second > b.second; });
  ResultTable t;
  t.columns = {std::move(key_column), std::move(value_column)};
  for (auto& [k, v] : rows) t.rows.push_back({k, v});
  t.total_row_count = t.rows.size();
  return t;
}

}  // namespace detail

inline ResultTable posts_per_person(const Corpus& c) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& m : c.messages) ++counts[c.person_of(m)];
  return detail::count_table("person", "count", counts);
}

inline ResultTable posts_per_domain(const Corpus& c) {
  std::map<std::string, std::int64_t> counts;
  for (const auto& m : c.messages) ++counts[domain_of(m.sender)];
  return detail::count_table("domain", "count", counts);
}

/// Columns institution, kind, count. Unregistered domains appear as
/// themselves with kind n.a.
inline ResultTable posts_per_institution(const Corpus& c, const std::vector<Institution>& registry) {
  std::map<std::string, std::int64_t> counts;
  std::map<std::string, InstitutionKind> kinds;
  for (const auto& m : c.messages) {
    const Institution inst = map_institution_entry(domain_of(m.sender), registry);
    ++counts[inst.institution_id];
    kinds[inst.institution_id] = inst.kind;
  }
  ResultTable base = detail::count_table("institution", "count", counts);
  ResultTable t;
  t.columns = {"institution", "kind", "count"};
  for (auto& row : base.rows) {
    const std::string id = std::get<std::string>(row[0]);
    t.rows.push_back({id, std::string(to_string(kinds[id])), row[1]});
  }
  t.total_row_count = t.rows.size();
  return t;
}

inline ResultTable posts_per_institution(const Corpus& c) { return posts_per_institution(c, c.registry); }

/// Distinct persons per sender domain. A person posting from several domains
/// counts once in each.
inline ResultTable posters_per_domain(const Corpus& c) {
  std::map<std::string, std::set<std::string>> posters;
  for (const auto& m : c.messages) posters[domain_of(m.sender)].insert(c.person_of(m));
  std::map<std::string, std::int64_t> counts;
  for (const auto& [d, people] : posters) counts[d] = static_cast<std::int64_t>(people.size());
  return detail::count_table("domain", "posters", counts);
}

inline std::vector<Thread> corpus_threads(const Corpus& c) {
  return build_threads(
      c.messages, [&](const EmailMessage& m) { return c.person_of(m); }, c.threading);
}

enum class GraphLevel { person, institution };

/// Undirected co-participation: weight(a, b) is the number of threads both
/// posted in. Person-level threads use their participants; the institution
/// level maps each message's sender domain through the registry.
inline SocialGraph social_graph(const std::vector<Thread>& threads, const Corpus& c,
                                GraphLevel level = GraphLevel::person) {
  GraphBuilder g(false);
  std::map<std::string, const EmailMessage*> by_id;
  for (const auto& m : c.messages) by_id.emplace(m.message_id, &m);
  for (const auto& t : threads) {
    std::set<std::string> members;
    if (level == GraphLevel::person) {
      for (const auto& p : t.participants) {
        members.insert(p);
        g.add_node(p, c.label_of(p));
      }
    } else {
      for (const auto& id : t.message_ids) {
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        const Institution inst = c.institution_of(*it->second);
        members.insert(inst.institution_id);
        g.add_node(inst.institution_id, inst.name);
      }
    }
    for (auto a = members.begin(); a != members.end(); ++a) {
      for (auto b = std::next(a); b != members.end(); ++b) g.add_edge(*a, *b);
    }
  }
  return g.build();
}

/// Directed: weight(person -> q) is the number of the person's messages whose
/// parent message was written by q. Self-replies are not counted.
inline SocialGraph answering_profile(const Corpus& c, const std::string& person_id) {
  GraphBuilder g(true);
  const ThreadLinks links = link_messages(c.messages, c.threading);
  bool posted = false;
  for (std::size_t i = 0; i < c.messages.size(); ++i) {
    if (c.person_of(c.messages[i]) != person_id) continue;
    posted = true;
    if (!links.parent[i]) continue;
    const std::string q = c.person_of(c.messages[*links.parent[i]]);
    if (q == person_id) continue;
    g.add_node(q, c.label_of(q));
    g.add_edge(person_id, q);
  }
  if (posted) g.add_node(person_id, c.label_of(person_id));
  return g.build();
}

// ---------------------------------------------------------------- reports

namespace detail {

struct Affiliated {
  std::string id;
  std::string name;
  InstitutionKind kind = InstitutionKind::NA;
};

inline const std::string kUnknownInstitution = "Unknown";

/// Institutions of each author of `rep` as of its publication date;
/// authors without one map to Unknown.
inline std::map<std::string, std::set<std::string>> report_affiliations(
    const Warehouse& w, const Report& rep, std::map<std::string, Affiliated>& info) {
  std::map<std::string, std::set<std::string>> by_institution;  // institution -> authors
  for (const auto& author : rep.authors) {
    std::vector<std::string> insts;
    if (const Record* p = w.find_record(Schema::person, author)) {
      const SnapshotView snap = snapshot_asof(*p, rep.pub_date);
      if (const auto* aff = snap.get("affiliations")) insts = *aff;
    }
    if (insts.empty()) insts.push_back(kUnknownInstitution);
    for (const auto& inst : insts) {
      by_institution[inst].insert(author);
      if (info.count(inst)) continue;
      Affiliated a{inst, inst, InstitutionKind::NA};
      if (const Record* r = w.find_record(Schema::institution, inst)) {
        const Institution i = record_to_institution(*r);
        a.name = i.name;
        a.kind = i.kind;
      }
      info.emplace(inst, a);
    }
  }
  return by_institution;
}

}  // namespace detail

/// Authorship by institution: distinct authors and the number of reports of
/// each maturity with at least one author affiliated (at publication) with the
/// institution. Rows sort by REC, then notes, then drafts (all descending),
/// then name.
inline ResultTable report_institution_table(const Warehouse& w) {
  struct Row {
    std::set<std::string> authors;
    std::int64_t rec = 0, notes = 0, drafts = 0;
  };
  std::map<std::string, Row> rows;
  std::map<std::string, detail::Affiliated> info;
  for (const Record* r : w.list_records(Schema::report)) {
    const Report rep = record_to_report(*r);
    for (const auto& [inst, authors] : detail::report_affiliations(w, rep, info)) {
      Row& row = rows[inst];
      row.authors.insert(authors.begin(), authors.end());
      switch (rep.maturity) {
        case Maturity::REC: ++row.rec; break;
        case Maturity::WG_NOTE: ++row.notes; break;
        case Maturity::DRAFT: ++row.drafts; break;
      }
    }
  }
  std::vector<std::pair<std::string, Row>> sorted(rows.begin(), rows.end());
  std::sort(sorted.begin(), sorted.end(), [&](const auto& a, const auto& b) {
    const Row& x = a.second;
    const Row& y = b.second;
    if (x.rec != y.rec) return x.rec > y.rec;
    if (x.notes != y.notes) return x.notes > y.notes;
    if (x.drafts != y.drafts) return x.drafts > y.drafts;
    return info[a.first].name < info[b.first].name;
  });
  ResultTable t;
  t.columns = {"institution", "type", "indiv", "rec", "wg_notes", "drafts"};
  for (const auto& [id, row] : sorted) {
    const auto& i = info[id];
    t.rows.push_back({i.name, std::string(to_string(i.kind)),
                      static_cast<std::int64_t>(row.authors.size()), row.rec, row.notes, row.drafts});
  }
  t.total_row_count = t.rows.size();
  return t;
}

/// Undirected institution graph: weight(I, J) is the number of reports with
/// authors affiliated with both at publication. Authors without an
/// affiliation are left out.
inline SocialGraph coauthor_institution_graph(const Warehouse& w) {
  GraphBuilder g(false);
  std::map<std::string, detail::Affiliated> info;
  for (const Record* r : w.list_records(Schema::report)) {
    const Report rep = record_to_report(*r);
    std::vector<std::string> insts;
    for (const auto& [inst, authors] : detail::report_affiliations(w, rep, info)) {
      if (inst == detail::kUnknownInstitution) continue;
      insts.push_back(inst);
      g.add_node(inst, info[inst].name);
    }
    for (std::size_t a = 0; a < insts.size(); ++a) {
      for (std::size_t b = a + 1; b < insts.size(); ++b) g.add_edge(insts[a], insts[b]);
    }
  }
  return g.build();
}

// Warehouse conveniences.
inline ResultTable posts_per_person(const Warehouse& w) { return posts_per_person(load_corpus(w)); }
inline ResultTable posts_per_domain(const Warehouse& w) { return posts_per_domain(load_corpus(w)); }
inline ResultTable posters_per_domain(const Warehouse& w) { return posters_per_domain(load_corpus(w)); }
inline ResultTable posts_per_institution(const Warehouse& w, const std::vector<Institution>& registry) {
  return posts_per_institution(load_corpus(w), registry);
}
inline SocialGraph answering_profile(const Warehouse& w, const std::string& person_id) {
  return answering_profile(load_corpus(w), person_id);
}

}  // namespace mailweave
