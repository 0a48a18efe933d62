#pragma once

#include <algorithm>
#include <cstdint>
#include <map>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

namespace mailweave {

struct GraphNode {
  std::string id;
  std::string label;

  friend bool operator==(const GraphNode&, const GraphNode&) = default;
};

struct GraphEdge {
  std::string source;
  std::string target;
  std::int64_t weight = 1;

  friend bool operator==(const GraphEdge&, const GraphEdge&) = default;
};

/// Nodes sorted by id, edges by (source, target). Undirected edges have
/// source < target. No self-loops, every weight >= 1.
struct SocialGraph {
  bool directed = false;
  std::vector<GraphNode> nodes;
  std::vector<GraphEdge> edges;

  const GraphEdge* edge(const std::string& a, const std::string& b) const {
    std::string s = a, t = b;
    if (!directed && t < s) std::swap(s, t);
    for (const auto& e : edges) {
      if (e.source == s && e.target == t) return &e;
    }
    return nullptr;
  }

  friend bool operator==(const SocialGraph&, const SocialGraph&) = default;
};

/// Accumulates nodes and edge weights in any order.
class GraphBuilder {
 public:
  explicit GraphBuilder(bool directed) : directed_(directed) {}

  void add_node(const std::string& id, const std::string& label) {
    auto [it, fresh] = labels_.emplace(id, label);
    if (!fresh && it->second.empty()) it->second = label;
  }

  void add_edge(const std::string& a, const std::string& b, std::int64_t weight = 1) {
    if (a == b || weight <= 0) return;
    auto key = directed_ || a < b ? std::make_pair(a, b) : std::make_pair(b, a);
    weights_[key] += weight;
    labels_.emplace(a, std::string());
    labels_.emplace(b, std::string());
  }

  SocialGraph build() const {
    SocialGraph g;
    g.directed = directed_;
    for (const auto& [id, label] : labels_) g.nodes.push_back({id, label.empty() ? id : label});
    for (const auto& [key, w] : weights_) g.edges.push_back({key.first, key.second, w});
    return g;
  }

 private:
  bool directed_;
  std::map<std::string, std::string> labels_;
  std::map<std::pair<std::string, std::string>, std::int64_t> weights_;
};

inline nlohmann::json graph_to_json(const SocialGraph& g) {
  nlohmann::json nodes = nlohmann::json::array();
  for (const auto& n : g.nodes) nodes.push_back({{"id", n.id}, {"label", n.label}});
  nlohmann::json edges = nlohmann::json::array();
  for (const auto& e : g.edges) {
    edges.push_back({{"source", e.source}, {"target", e.target}, {"weight", e.weight}});
  }
  return {{"directed", g.directed}, {"nodes", std::move(nodes)}, {"edges", std::move(edges)}};
}

}  // namespace mailweave
