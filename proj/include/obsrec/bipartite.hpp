#ifndef OBSREC_BIPARTITE_HPP
#define OBSREC_BIPARTITE_HPP

#include <utility>
#include <vector>

#include "obsrec/pattern.hpp"

namespace obsrec {

// Which endpoint of an edge (j, i) becomes the left node of the bipartite
// companion graph. Under `transposed` (the default everywhere) a state is
// matched when one of its *outgoing* edges is matched, so unmatched states
// are exactly the ones that need a direct measurement. `paper` keeps the
// construction with left endpoint i, selectable for auditing.
enum class Orientation { transposed, paper };

struct BipartiteGraph {
  int n = 0;                                    // |left| = |right| = n
  std::vector<std::vector<int>> adj;            // adj[left] = sorted right nodes
  int link_count = 0;
};

struct Matching {
  std::vector<int> left_to_right;   // -1 if left node unmatched
  std::vector<int> right_to_left;   // -1 if right node unmatched
  int size = 0;

  std::vector<int> unmatched_left() const;      // sorted, 0-based

  // Disjointness + consistency check against its graph.
  static bool valid(const BipartiteGraph& g,
                    const std::vector<std::pair<int, int>>& pairs);
};

BipartiteGraph build_bipartite(const SystemPattern& pattern,
                               Orientation orientation = Orientation::transposed);

// Canonical maximum matching: augmenting-path search over free left nodes in
// ascending index order, adjacency scanned in ascending order. Deterministic.
Matching maximum_matching(const BipartiteGraph& graph);

}  // namespace obsrec

#endif
