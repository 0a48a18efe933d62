#pragma once

#include <algorithm>
#include <istream>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "mailweave/address.hpp"
#include "mailweave/error.hpp"
#include "mailweave/message.hpp"
#include "mailweave/temporal.hpp"
#include "mailweave/text.hpp"

namespace mailweave {

enum class Rule { exact_address, name_and_domain, full_name_global };

inline std::string_view to_string(Rule r) {
  switch (r) {
    case Rule::exact_address: return "exact_address";
    case Rule::name_and_domain: return "name_and_domain";
    case Rule::full_name_global: return "full_name_global";
  }
  return "";
}

inline std::optional<Rule> parse_rule(std::string_view s) {
  for (Rule r : {Rule::exact_address, Rule::name_and_domain, Rule::full_name_global}) {
    if (to_string(r) == s) return r;
  }
  return std::nullopt;
}

struct NameFolding {
  bool case_fold = true;
  bool strip_diacritics = true;
  bool token_sort = true;
};

/// Ordered grouping rules. exact_address is always present and first.
class ResolutionRules {
 public:
  ResolutionRules() = default;

  explicit ResolutionRules(std::vector<Rule> rules, NameFolding folding = {}) : folding_(folding) {
    for (Rule r : rules) enable(r);
  }

  static ResolutionRules defaults() { return ResolutionRules({Rule::name_and_domain}); }

  void enable(Rule r) {
    if (!enabled(r)) rules_.push_back(r);
  }

  void disable(Rule r) {
    if (r == Rule::exact_address) return;
    rules_.erase(std::remove(rules_.begin(), rules_.end(), r), rules_.end());
  }

  bool enabled(Rule r) const { return std::find(rules_.begin(), rules_.end(), r) != rules_.end(); }
  const std::vector<Rule>& rules() const noexcept { return rules_; }
  const NameFolding& folding() const noexcept { return folding_; }
  NameFolding& folding() noexcept { return folding_; }

 private:
  std::vector<Rule> rules_{Rule::exact_address};
  NameFolding folding_;
};

/// {"rules": ["name_and_domain", ...], "case_fold": bool,
///  "strip_diacritics": bool, "token_sort": bool}
inline ResolutionRules rules_from_json(const nlohmann::json& j) {
  ResolutionRules rules;
  if (!j.is_object()) throw SchemaError("rules config must be an object");
  if (auto it = j.find("rules"); it != j.end()) {
    for (const auto& name : *it) {
      const auto r = name.is_string() ? parse_rule(name.get<std::string>()) : std::nullopt;
      if (!r) throw SchemaError("unknown resolution rule " + name.dump());
      rules.enable(*r);
    }
  }
  auto flag = [&](const char* key, bool& out) {
    if (auto it = j.find(key); it != j.end()) {
      if (!it->is_boolean()) throw SchemaError(std::string("'") + key + "' must be a boolean");
      out = it->get<bool>();
    }
  };
  flag("case_fold", rules.folding().case_fold);
  flag("strip_diacritics", rules.folding().strip_diacritics);
  flag("token_sort", rules.folding().token_sort);
  return rules;
}

/// A resolved poster.
struct Person {
  std::string person_id;  // smallest member address key
  std::optional<std::string> canonical_name;
  std::set<std::string> addresses;
  std::vector<TemporalValue> functions;
  std::vector<TemporalValue> affiliations;

  friend bool operator==(const Person&, const Person&) = default;
};

enum class InstitutionKind { Corp, Uni, Org, NA };

inline std::string_view to_string(InstitutionKind k) {
  switch (k) {
    case InstitutionKind::Corp: return "Corp";
    case InstitutionKind::Uni: return "Uni";
    case InstitutionKind::Org: return "Org";
    case InstitutionKind::NA: return "n.a.";
  }
  return "";
}

inline std::optional<InstitutionKind> parse_institution_kind(std::string_view s) {
  const std::string k = text::ascii_lower(s);
  if (k == "corp") return InstitutionKind::Corp;
  if (k == "uni") return InstitutionKind::Uni;
  if (k == "org") return InstitutionKind::Org;
  if (k == "na" || k == "n.a." || k == "n/a") return InstitutionKind::NA;
  return std::nullopt;
}

struct Institution {
  std::string institution_id;
  std::string name;
  InstitutionKind kind = InstitutionKind::NA;
  std::set<std::string> domains;

  friend bool operator==(const Institution&, const Institution&) = default;
};

/// Registry file: one JSON object per line {id, name, kind, domains[]}.
/// Domains must be disjoint across institutions.
inline std::vector<Institution> read_registry(std::istream& in) {
  std::vector<Institution> out;
  std::map<std::string, std::string> owner;
  std::string line;
  std::size_t number = 0;
  while (std::getline(in, line)) {
    ++number;
    if (text::trim(line).empty() || text::trim(line).front() == '#') continue;
    const std::string where = "registry line " + std::to_string(number);
    nlohmann::json j;
    try {
      j = nlohmann::json::parse(line);
    } catch (const nlohmann::json::parse_error& e) {
      throw SchemaError(where + ": " + e.what());
    }
    Institution inst;
    try {
      inst.institution_id = j.at("id").get<std::string>();
      inst.name = j.value("name", inst.institution_id);
      const auto kind = parse_institution_kind(j.value("kind", std::string("NA")));
      if (!kind) throw SchemaError(where + ": unknown kind");
      inst.kind = *kind;
      for (const auto& d : j.value("domains", nlohmann::json::array())) {
        inst.domains.insert(text::ascii_lower(d.get<std::string>()));
      }
    } catch (const nlohmann::json::exception& e) {
      throw SchemaError(where + ": " + e.what());
    }
    if (inst.institution_id.empty()) throw SchemaError(where + ": empty id");
    for (const auto& d : inst.domains) {
      auto [it, fresh] = owner.emplace(d, inst.institution_id);
      if (!fresh) {
        throw SchemaError(where + ": domain '" + d + "' already belongs to '" + it->second + "'");
      }
    }
    out.push_back(std::move(inst));
  }
  return out;
}

inline void write_registry(std::ostream& out, const std::vector<Institution>& registry) {
  for (const auto& inst : registry) {
    out << nlohmann::json{{"id", inst.institution_id},
                          {"name", inst.name},
                          {"kind", std::string(to_string(inst.kind))},
                          {"domains", inst.domains}}
               .dump()
        << '\n';
  }
}

/// The registry entry owning `domain` or its nearest parent domain; otherwise
/// a synthetic institution named after the domain with kind NA.
inline Institution map_institution_entry(std::string_view domain,
                                         const std::vector<Institution>& registry) {
  std::string d = text::ascii_lower(domain);
  std::string_view probe = d;
  while (!probe.empty()) {
    for (const auto& inst : registry) {
      if (inst.domains.count(std::string(probe))) return inst;
    }
    const auto dot = probe.find('.');
    if (dot == std::string_view::npos) break;
    probe.remove_prefix(dot + 1);
  }
  return Institution{d, d, InstitutionKind::NA, {d}};
}

inline std::string map_institution(std::string_view domain, const std::vector<Institution>& registry) {
  return map_institution_entry(domain, registry).institution_id;
}

/// Display-name normal form used for matching; empty when the name carries
/// no usable tokens.
inline std::string fold_name(std::string_view name, const NameFolding& folding) {
  std::string s(name);
  if (folding.strip_diacritics) s = text::strip_diacritics(s);
  if (folding.case_fold) s = text::casefold(s);
  for (char& c : s) {
    if (c == ',' || c == '.' || c == '"' || c == '\'' || c == '(' || c == ')' || c == '_') c = ' ';
  }
  auto tokens = text::split_whitespace(s);
  if (folding.token_sort) std::sort(tokens.begin(), tokens.end());
  std::string out;
  for (const auto& t : tokens) {
    if (!out.empty()) out.push_back(' ');
    out += t;
  }
  return out;
}

namespace detail {

class UnionFind {
 public:
  explicit UnionFind(std::size_t n) : parent_(n) { std::iota(parent_.begin(), parent_.end(), 0); }

  std::size_t find(std::size_t x) {
    while (parent_[x] != x) {
      parent_[x] = parent_[parent_[x]];
      x = parent_[x];
    }
    return x;
  }

  void unite(std::size_t a, std::size_t b) {
    a = find(a);
    b = find(b);
    if (a != b) parent_[std::max(a, b)] = std::min(a, b);
  }

 private:
  std::vector<std::size_t> parent_;
};

}  // namespace detail

/// Groups sender addresses into persons. Keys are always merged with
/// themselves; name_and_domain merges keys that share a domain and a folded
/// display name; full_name_global merges keys sharing a folded display name
/// of two or more tokens anywhere. Names containing '@' are ignored.
/// Persons come back ordered by person_id.
inline std::vector<Person> resolve_persons(const std::vector<EmailMessage>& messages,
                                           const ResolutionRules& rules) {
  std::map<std::string, std::size_t> index;  // key -> node; ordered keys keep ids stable
  std::map<std::string, std::string> domain_of_key;
  std::map<std::string, std::map<std::string, std::size_t>> names_of_key;  // raw name -> count
  for (const auto& m : messages) {
    index.emplace(m.sender.key, 0);
    domain_of_key[m.sender.key] = m.sender.domain;
    if (m.sender.display_name) ++names_of_key[m.sender.key][*m.sender.display_name];
  }
  std::vector<std::string> keys;
  for (auto& [key, node] : index) {
    node = keys.size();
    keys.push_back(key);
  }
  detail::UnionFind uf(keys.size());
  auto merge_by = [&](auto&& bucket_of) {
    std::map<std::string, std::size_t> first;
    for (std::size_t i = 0; i < keys.size(); ++i) {
      for (const auto& [raw, count] : names_of_key[keys[i]]) {
        if (raw.find('@') != std::string::npos) continue;
        const std::string folded = fold_name(raw, rules.folding());
        if (folded.empty()) continue;
        const std::optional<std::string> bucket = bucket_of(i, folded);
        if (!bucket) continue;
        auto [it, fresh] = first.emplace(*bucket, i);
        if (!fresh) uf.unite(it->second, i);
      }
    }
  };
  for (Rule rule : rules.rules()) {
    if (rule == Rule::name_and_domain) {
      merge_by([&](std::size_t i, const std::string& folded) -> std::optional<std::string> {
        return domain_of_key[keys[i]] + "\n" + folded;
      });
    } else if (rule == Rule::full_name_global) {
      merge_by([&](std::size_t, const std::string& folded) -> std::optional<std::string> {
        if (folded.find(' ') == std::string::npos) return std::nullopt;
        return folded;
      });
    }
  }
  std::map<std::size_t, Person> groups;
  for (std::size_t i = 0; i < keys.size(); ++i) {
    Person& p = groups[uf.find(i)];
    p.addresses.insert(keys[i]);
  }
  std::vector<Person> out;
  for (auto& [root, p] : groups) {
    p.person_id = *p.addresses.begin();
    std::map<std::string, std::size_t> counts;
    for (const auto& key : p.addresses) {
      for (const auto& [raw, count] : names_of_key[key]) counts[raw] += count;
    }
    std::size_t best = 0;
    for (const auto& [raw, count] : counts) {
      if (count > best) {
        best = count;
        p.canonical_name = raw;
      }
    }
    out.push_back(std::move(p));
  }
  std::sort(out.begin(), out.end(),
            [](const Person& a, const Person& b) { return a.person_id < b.person_id; });
  return out;
}

/// address key -> person_id
inline std::map<std::string, std::string> person_index(const std::vector<Person>& persons) {
  std::map<std::string, std::string> out;
  for (const auto& p : persons) {
    for (const auto& a : p.addresses) out[a] = p.person_id;
  }
  return out;
}

}  // namespace mailweave
