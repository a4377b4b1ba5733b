#include "obsrec/bipartite.hpp"

#include <algorithm>

namespace obsrec {

std::vector<int> Matching::unmatched_left() const {
  std::vector<int> out;
  for (int v = 0; v < static_cast<int>(left_to_right.size()); ++v)
    if (left_to_right[v] < 0) out.push_back(v);
  return out;
}

bool Matching::valid(const BipartiteGraph& g,
                     const std::vector<std::pair<int, int>>& pairs) {
  std::vector<bool> lused(g.n, false), rused(g.n, false);
  for (const auto& [l, r] : pairs) {
    if (l < 0 || l >= g.n || r < 0 || r >= g.n) return false;
    if (!std::binary_search(g.adj[l].begin(), g.adj[l].end(), r)) return false;
    if (lused[l] || rused[r]) return false;  // shared endpoint
    lused[l] = rused[r] = true;
  }
  return true;
}

BipartiteGraph build_bipartite(const SystemPattern& pattern, Orientation orientation) {
  pattern.validate();
  BipartiteGraph g;
  g.n = pattern.n;
  g.adj.assign(g.n, {});
  for (const auto& [j, i] : pattern.edges) {
    if (orientation == Orientation::transposed)
      g.adj[j - 1].push_back(i - 1);
    else
      g.adj[i - 1].push_back(j - 1);
    ++g.link_count;
  }
  for (auto& v : g.adj) std::sort(v.begin(), v.end());
  return g;
}

namespace {

// One DFS augmentation attempt from free left node `v` (Kuhn's algorithm).
bool try_augment(const std::vector<std::vector<int>>& adj, int v,
                 std::vector<int>& l2r, std::vector<int>& r2l,
                 std::vector<bool>& visited) {
  for (int r : adj[v]) {
    if (visited[r]) continue;
    visited[r] = true;
    if (r2l[r] < 0 || try_augment(adj, r2l[r], l2r, r2l, visited)) {
      l2r[v] = r;
      r2l[r] = v;
      return true;
    }
  }
  return false;
}

}  // namespace

Matching maximum_matching(const BipartiteGraph& graph) {
  Matching m;
  m.left_to_right.assign(graph.n, -1);
  m.right_to_left.assign(graph.n, -1);
  for (int v = 0; v < graph.n; ++v) {
    std::vector<bool> visited(graph.n, false);
    if (try_augment(graph.adj, v, m.left_to_right, m.right_to_left, visited))
      ++m.size;  // each successful augmentation grows the matching by one
  }
  return m;
}

}  // namespace obsrec
