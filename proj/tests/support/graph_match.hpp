#pragma once

// Labelled-graph isomorphism for small flow graphs. Expected graphs are written by hand as
// node kinds plus a text fragment each node must contain, and labelled edges.

#include <string>
#include <vector>

#include "procmine/flow.hpp"

namespace graph_match {

struct Node {
  procmine::NodeKind kind;
  std::string fragment;  // case-insensitive substring of the node text
};

struct Edge {
  int from;
  int to;
  procmine::EdgeLabel label;
};

struct Pattern {
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  int entry = 0;
};

namespace detail {

inline bool node_matches(const Node& want, const procmine::FlowNode& got) {
  return want.kind == got.kind &&
         procmine::to_lower(got.text).find(procmine::to_lower(want.fragment)) != std::string::npos;
}

inline bool extend(const Pattern& p, const procmine::FlowGraph& g, std::vector<int>& map, std::vector<bool>& used,
                   std::size_t k) {
  if (k == p.nodes.size()) {
    // Edge sets must coincide exactly under the mapping.
    std::size_t hits = 0;
    for (const auto& e : p.edges) {
      bool found = false;
      for (const auto& ge : g.edges) found |= ge.from == map[e.from] && ge.to == map[e.to] && ge.label == e.label;
      if (!found) return false;
      ++hits;
    }
    return hits == g.edges.size() && map[p.entry] == g.entry;
  }
  for (std::size_t v = 0; v < g.nodes.size(); ++v) {
    if (used[v] || !node_matches(p.nodes[k], g.nodes[v])) continue;
    used[v] = true;
    map[k] = static_cast<int>(v);
    if (extend(p, g, map, used, k + 1)) return true;
    used[v] = false;
  }
  return false;
}

}  // namespace detail

inline bool isomorphic(const procmine::FlowGraph& g, const Pattern& p) {
  if (g.nodes.size() != p.nodes.size() || g.edges.size() != p.edges.size()) return false;
  std::vector<int> map(p.nodes.size(), -1);
  std::vector<bool> used(g.nodes.size(), false);
  return detail::extend(p, g, map, used, 0);
}

// Readable dump for assertion messages.
inline std::string describe(const procmine::FlowGraph& g) {
  std::string out;
  for (const auto& n : g.nodes) {
    out += std::to_string(n.id) + " " + std::string(procmine::to_string(n.kind)) + " " + n.text + "\n";
  }
  for (const auto& e : g.edges) {
    out += std::to_string(e.from) + " -" + std::string(procmine::to_string(e.label)) + "-> " + std::to_string(e.to) + "\n";
  }
  return out;
}

}  // namespace graph_match
