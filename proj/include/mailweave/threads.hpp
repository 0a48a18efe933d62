#pragma once

#include <algorithm>
#include <chrono>
#include <functional>
#include <map>
#include <numeric>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "mailweave/message.hpp"

namespace mailweave {

struct ThreadingOptions {
  /// Subject fallback only joins messages at most this many days older.
  int subject_window_days = 90;
};

struct Thread {
  std::string thread_id;                 // root message id
  std::vector<std::string> message_ids;  // chronological
  std::vector<std::string> participants; // sorted, unique

  friend bool operator==(const Thread&, const Thread&) = default;
};

/// Reply structure of a corpus.
struct ThreadLinks {
  std::vector<std::size_t> order;              // message indexes, chronological
  std::vector<std::optional<std::size_t>> parent;
  std::vector<std::size_t> root;
};

/// Chooses each message's parent: In-Reply-To when that message is in the
/// corpus, else the last References entry that is, else the earliest
/// earlier message on the same list with the same subject key within the
/// window. A link that would close a reply cycle is dropped. Messages are
/// taken in (sent_at, message_id) order; a repeated id resolves to its
/// first occurrence.
inline ThreadLinks link_messages(const std::vector<EmailMessage>& messages,
                                 const ThreadingOptions& options = {}) {
  const std::size_t n = messages.size();
  ThreadLinks links;
  links.order.resize(n);
  std::iota(links.order.begin(), links.order.end(), 0);
  std::stable_sort(links.order.begin(), links.order.end(), [&](std::size_t a, std::size_t b) {
    const auto& x = messages[a];
    const auto& y = messages[b];
    return x.sent_at != y.sent_at ? x.sent_at < y.sent_at : x.message_id < y.message_id;
  });
  std::map<std::string, std::size_t> by_id;
  for (std::size_t i = 0; i < n; ++i) by_id.emplace(messages[i].message_id, i);
  auto resolve = [&](const std::string& id, std::size_t self) -> std::optional<std::size_t> {
    auto it = by_id.find(id);
    if (it == by_id.end() || it->second == self) return std::nullopt;
    return it->second;
  };

  links.parent.assign(n, std::nullopt);
  std::map<std::pair<std::string, std::string>, std::vector<std::size_t>> by_subject;
  const auto window = std::chrono::days{options.subject_window_days};
  for (std::size_t idx : links.order) {
    const EmailMessage& m = messages[idx];
    std::optional<std::size_t> parent;
    if (m.in_reply_to) parent = resolve(*m.in_reply_to, idx);
    for (auto it = m.references.rbegin(); !parent && it != m.references.rend(); ++it) {
      parent = resolve(*it, idx);
    }
    if (!parent && !m.subject_key.empty()) {
      auto found = by_subject.find({m.list_id, m.subject_key});
      if (found != by_subject.end()) {
        for (std::size_t cand : found->second) {
          if (messages[cand].sent_at >= m.sent_at - window) {
            parent = cand;
            break;
          }
        }
      }
    }
    if (parent) {
      std::size_t up = *parent;
      bool cycle = false;
      while (true) {
        if (up == idx) {
          cycle = true;
          break;
        }
        if (!links.parent[up]) break;
        up = *links.parent[up];
      }
      if (!cycle) links.parent[idx] = parent;
    }
    if (!m.subject_key.empty()) by_subject[{m.list_id, m.subject_key}].push_back(idx);
  }
  links.root.resize(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::size_t up = i;
    while (links.parent[up]) up = *links.parent[up];
    links.root[i] = up;
  }
  return links;
}

using ParticipantFn = std::function<std::string(const EmailMessage&)>;

/// Partitions the corpus into threads, ordered by their earliest message.
/// Participants default to sender address keys.
inline std::vector<Thread> build_threads(const std::vector<EmailMessage>& messages,
                                         const ParticipantFn& participant = {},
                                         const ThreadingOptions& options = {}) {
  const ThreadLinks links = link_messages(messages, options);
  std::map<std::size_t, std::size_t> slot;  // root index -> thread position
  std::vector<Thread> threads;
  std::vector<std::set<std::string>> people;
  for (std::size_t idx : links.order) {
    const std::size_t root = links.root[idx];
    auto [it, fresh] = slot.emplace(root, threads.size());
    if (fresh) {
      threads.push_back({messages[root].message_id, {}, {}});
      people.emplace_back();
    }
    threads[it->second].message_ids.push_back(messages[idx].message_id);
    people[it->second].insert(participant ? participant(messages[idx]) : messages[idx].sender.key);
  }
  for (std::size_t i = 0; i < threads.size(); ++i) {
    threads[i].participants.assign(people[i].begin(), people[i].end());
  }
  return threads;
}

}  // namespace mailweave
