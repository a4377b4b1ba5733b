#include "obsrec/structural.hpp"

#include <algorithm>
#include <numeric>

#include "json.hpp"

namespace obsrec {

std::vector<int> SCCPartition::parent_ids() const {
  std::vector<int> out;
  for (int c = 0; c < static_cast<int>(components.size()); ++c)
    if (parent_flags[c]) out.push_back(c);
  return out;
}

std::vector<std::string> SensorClassification::sensors_of_type(SensorType t) const {
  std::vector<std::string> out;
  for (const auto& [id, label] : labels)
    if (label.type == t) out.push_back(id);
  return out;
}

namespace {

// Left states reachable by alternating paths from `start` in the auxiliary
// graph (matched links reversed). Includes the start node.
std::vector<int> alternating_reach(const BipartiteGraph& g, const Matching& m, int start) {
  std::vector<bool> seen_left(g.n, false), seen_right(g.n, false);
  std::vector<int> stack{start};
  seen_left[start] = true;
  while (!stack.empty()) {
    int v = stack.back();
    stack.pop_back();
    for (int r : g.adj[v]) {
      if (r == m.left_to_right[v] || seen_right[r]) continue;  // unmatched links only
      seen_right[r] = true;
      int w = m.right_to_left[r];  // matched link reversed
      if (w >= 0 && !seen_left[w]) {
        seen_left[w] = true;
        stack.push_back(w);
      }
    }
  }
  std::vector<int> out;
  for (int v = 0; v < g.n; ++v)
    if (seen_left[v]) out.push_back(v);
  return out;
}

}  // namespace

std::vector<ContractionSet> contraction_sets(const SystemPattern& pattern,
                                             Orientation orientation) {
  BipartiteGraph g = build_bipartite(pattern, orientation);
  Matching m = maximum_matching(g);

  // Union-find over states merges overlapping reachability sets.
  std::vector<int> uf(g.n);
  std::iota(uf.begin(), uf.end(), 0);
  auto find = [&](int x) {
    while (uf[x] != x) x = uf[x] = uf[uf[x]];
    return x;
  };
  std::vector<bool> in_some_set(g.n, false);
  for (int u : m.unmatched_left()) {
    int root = -1;
    for (int v : alternating_reach(g, m, u)) {
      in_some_set[v] = true;
      int rv = find(v);
      if (root < 0)
        root = rv;
      else if (rv != root)
        uf[rv] = root;
    }
  }

  std::map<int, ContractionSet> by_root;
  for (int v = 0; v < g.n; ++v)
    if (in_some_set[v]) by_root[find(v)].states.push_back(v);

  std::vector<ContractionSet> sets;
  for (auto& [root, cs] : by_root) sets.push_back(std::move(cs));
  std::sort(sets.begin(), sets.end(),
            [](const ContractionSet& a, const ContractionSet& b) {
              return a.states.front() < b.states.front();
            });
  for (int i = 0; i < static_cast<int>(sets.size()); ++i) {
    sets[i].id = i;
    for (int v : sets[i].states)
      if (m.left_to_right[v] < 0) {
        sets[i].witness_unmatched = v;
        break;
      }
  }
  return sets;
}

SCCPartition scc_partition(const SystemPattern& pattern) {
  Digraph g = build_digraph(pattern);
  SCCPartition part;
  part.component_of.assign(g.n, -1);

  // Iterative Tarjan; explicit stack keeps n ~ 10^4 graphs safe.
  std::vector<int> index(g.n, -1), lowlink(g.n, 0);
  std::vector<bool> on_stack(g.n, false);
  std::vector<int> scc_stack;
  int next_index = 0;

  struct Frame {
    int v;
    size_t child;
  };
  for (int root = 0; root < g.n; ++root) {
    if (index[root] >= 0) continue;
    std::vector<Frame> call{{root, 0}};
    index[root] = lowlink[root] = next_index++;
    scc_stack.push_back(root);
    on_stack[root] = true;
    while (!call.empty()) {
      Frame& f = call.back();
      if (f.child < g.out[f.v].size()) {
        int w = g.out[f.v][f.child++];
        if (index[w] < 0) {
          index[w] = lowlink[w] = next_index++;
          scc_stack.push_back(w);
          on_stack[w] = true;
          call.push_back({w, 0});
        } else if (on_stack[w]) {
          lowlink[f.v] = std::min(lowlink[f.v], index[w]);
        }
      } else {
        if (lowlink[f.v] == index[f.v]) {
          std::vector<int> comp;
          int w;
          do {
            w = scc_stack.back();
            scc_stack.pop_back();
            on_stack[w] = false;
            comp.push_back(w);
          } while (w != f.v);
          std::sort(comp.begin(), comp.end());
          int id = static_cast<int>(part.components.size());
          for (int x : comp) part.component_of[x] = id;
          part.components.push_back(std::move(comp));
        }
        int v = f.v;
        call.pop_back();
        if (!call.empty())
          lowlink[call.back().v] = std::min(lowlink[call.back().v], lowlink[v]);
      }
    }
  }

  // Renumber components by smallest member for stable ids.
  std::vector<int> order(part.components.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    return part.components[a].front() < part.components[b].front();
  });
  std::vector<std::vector<int>> comps(part.components.size());
  std::vector<int> remap(part.components.size());
  for (size_t k = 0; k < order.size(); ++k) {
    comps[k] = std::move(part.components[order[k]]);
    remap[order[k]] = static_cast<int>(k);
  }
  part.components = std::move(comps);
  for (int v = 0; v < g.n; ++v) part.component_of[v] = remap[part.component_of[v]];

  part.parent_flags.assign(part.components.size(), true);
  for (int j = 0; j < g.n; ++j)
    for (int i : g.out[j])
      if (part.component_of[j] != part.component_of[i])
        part.parent_flags[part.component_of[j]] = false;
  return part;
}

std::vector<PlacementRequirement> minimal_sensor_placement(const SystemPattern& pattern,
                                                           Orientation orientation) {
  BipartiteGraph g = build_bipartite(pattern, orientation);
  Matching m = maximum_matching(g);
  std::vector<PlacementRequirement> reqs;
  std::vector<bool> has_alpha(pattern.n, false);
  for (int u : m.unmatched_left()) {
    reqs.push_back({u, SensorType::alpha});
    has_alpha[u] = true;
  }
  SCCPartition part = scc_partition(pattern);
  for (int c : part.parent_ids()) {
    bool covered = false;
    for (int v : part.components[c]) covered = covered || has_alpha[v];
    if (!covered) reqs.push_back({part.components[c].front(), SensorType::beta});
  }
  return reqs;
}

SensorClassification classify_sensors(const SystemPattern& pattern, Orientation orientation) {
  std::vector<ContractionSet> sets = contraction_sets(pattern, orientation);
  SCCPartition part = scc_partition(pattern);

  std::vector<int> contraction_of(pattern.n, -1);
  for (const auto& cs : sets)
    for (int v : cs.states) contraction_of[v] = cs.id;

  SensorClassification cls;
  std::vector<bool> contraction_covered(sets.size(), false);
  std::vector<bool> scc_covered(part.components.size(), false);

  // Pass 1: alpha sensors (alpha precedence over beta). An alpha sensor
  // sitting in a parent SCC also discharges that SCC's coverage.
  for (const auto& [id, states] : pattern.sensors) {
    SensorLabel label;
    for (int s1 : states) {
      int v = s1 - 1;
      if (contraction_of[v] >= 0) {
        label.type = SensorType::alpha;
        if (!label.covered_contraction) label.covered_contraction = contraction_of[v];
        contraction_covered[contraction_of[v]] = true;
      }
    }
    if (label.type != SensorType::alpha) continue;
    for (int s1 : states) {
      int c = part.component_of[s1 - 1];
      if (part.parent_flags[c] && !label.covered_parent_scc) {
        label.covered_parent_scc = c;
        scc_covered[c] = true;
      }
    }
    cls.labels[id] = label;
  }
  // Pass 2: beta sensors, one designated coverer per parent SCC, id order.
  for (const auto& [id, states] : pattern.sensors) {
    if (cls.labels.count(id)) continue;
    SensorLabel label;
    for (int s1 : states) {
      int c = part.component_of[s1 - 1];
      if (part.parent_flags[c] && !scc_covered[c]) {
        label.type = SensorType::beta;
        label.covered_parent_scc = c;
        scc_covered[c] = true;
        break;
      }
    }
    cls.labels[id] = label;
  }

  for (size_t k = 0; k < sets.size(); ++k)
    if (!contraction_covered[k])
      cls.violations.push_back("contraction set " + std::to_string(k) + " uncovered");
  for (int c : part.parent_ids())
    if (!scc_covered[c])
      cls.violations.push_back("parent SCC " + std::to_string(c) + " uncovered");
  return cls;
}

namespace {

// Bipartite graph extended with one right node per sensor; saturation of all
// left states is the matching form of the "every unmatched state measured"
// condition, valid even when one contraction set needs several sensors.
bool sensors_saturate(const SystemPattern& pattern, Orientation orientation,
                      std::vector<int>* unsaturated) {
  BipartiteGraph g = build_bipartite(pattern, orientation);
  int extra = static_cast<int>(pattern.sensors.size());
  BipartiteGraph ext;
  ext.n = g.n;  // left side unchanged
  ext.adj = g.adj;
  int r = g.n;
  for (const auto& [id, states] : pattern.sensors) {
    for (int s1 : states) ext.adj[s1 - 1].push_back(r);
    ++r;
  }
  for (auto& v : ext.adj) std::sort(v.begin(), v.end());

  // maximum_matching assumes square sides; run Kuhn directly on the wider
  // right side here.
  std::vector<int> l2r(ext.n, -1), r2l(g.n + extra, -1);
  struct Kuhn {
    const std::vector<std::vector<int>>& adj;
    std::vector<int>&l2r, &r2l;
    std::vector<bool> visited;
    bool aug(int v) {
      for (int rr : adj[v]) {
        if (visited[rr]) continue;
        visited[rr] = true;
        if (r2l[rr] < 0 || aug(r2l[rr])) {
          l2r[v] = rr;
          r2l[rr] = v;
          return true;
        }
      }
      return false;
    }
  } kuhn{ext.adj, l2r, r2l, {}};
  bool all = true;
  for (int v = 0; v < ext.n; ++v) {
    kuhn.visited.assign(g.n + extra, false);
    if (!kuhn.aug(v)) {
      all = false;
      if (unsaturated) unsaturated->push_back(v);
    }
  }
  return all;
}

}  // namespace

ObservabilityVerdict structural_observability(const SystemPattern& pattern,
                                              Orientation orientation) {
  pattern.validate();
  ObservabilityVerdict verdict;

  std::vector<int> unsaturated;
  bool saturated = sensors_saturate(pattern, orientation, &unsaturated);
  if (!saturated) {
    std::vector<ContractionSet> sets = contraction_sets(pattern, orientation);
    std::vector<int> contraction_of(pattern.n, -1);
    for (const auto& cs : sets)
      for (int v : cs.states) contraction_of[v] = cs.id;
    std::set<int> bad_sets;
    for (int v : unsaturated) {
      if (contraction_of[v] >= 0)
        bad_sets.insert(contraction_of[v]);
      else
        verdict.violations.push_back("state " + std::to_string(v + 1) +
                                     " unmeasured and unmatched");
    }
    for (int k : bad_sets)
      verdict.violations.push_back("contraction set " + std::to_string(k) +
                                   " insufficiently covered");
  }

  SCCPartition part = scc_partition(pattern);
  std::vector<bool> scc_measured(part.components.size(), false);
  for (const auto& [id, states] : pattern.sensors)
    for (int s1 : states) scc_measured[part.component_of[s1 - 1]] = true;
  for (int c : part.parent_ids())
    if (!scc_measured[c])
      verdict.violations.push_back("parent SCC " + std::to_string(c) + " uncovered");

  verdict.observable = saturated && verdict.violations.empty();
  return verdict;
}

AnalysisReport analyze(const SystemPattern& pattern, Orientation orientation) {
  AnalysisReport rep;
  BipartiteGraph g = build_bipartite(pattern, orientation);
  rep.matching = maximum_matching(g);
  rep.unmatched = rep.matching.unmatched_left();
  rep.contractions = contraction_sets(pattern, orientation);
  rep.sccs = scc_partition(pattern);
  rep.classification = classify_sensors(pattern, orientation);
  rep.verdict = structural_observability(pattern, orientation);
  return rep;
}

std::string serialize_report(const AnalysisReport& report, int indent) {
  nlohmann::json doc;
  doc["matching"] = nlohmann::json::array();
  for (int v = 0; v < static_cast<int>(report.matching.left_to_right.size()); ++v)
    if (report.matching.left_to_right[v] >= 0)
      doc["matching"].push_back({v + 1, report.matching.left_to_right[v] + 1});
  doc["unmatched"] = nlohmann::json::array();
  for (int v : report.unmatched) doc["unmatched"].push_back(v + 1);
  doc["contractions"] = nlohmann::json::array();
  for (const auto& cs : report.contractions) {
    nlohmann::json c;
    c["id"] = cs.id;
    c["states"] = nlohmann::json::array();
    for (int v : cs.states) c["states"].push_back(v + 1);
    c["witness_unmatched"] = cs.witness_unmatched + 1;
    doc["contractions"].push_back(c);
  }
  doc["sccs"] = nlohmann::json::array();
  for (int c = 0; c < static_cast<int>(report.sccs.components.size()); ++c) {
    nlohmann::json s;
    s["id"] = c;
    s["states"] = nlohmann::json::array();
    for (int v : report.sccs.components[c]) s["states"].push_back(v + 1);
    s["parent"] = static_cast<bool>(report.sccs.parent_flags[c]);
    doc["sccs"].push_back(s);
  }
  doc["sensors"] = nlohmann::json::object();
  for (const auto& [id, label] : report.classification.labels) {
    nlohmann::json s;
    s["type"] = label.type == SensorType::alpha  ? "alpha"
                : label.type == SensorType::beta ? "beta"
                                                 : "redundant";
    if (label.covered_contraction) s["covered_contraction"] = *label.covered_contraction;
    if (label.covered_parent_scc) s["covered_parent_scc"] = *label.covered_parent_scc;
    doc["sensors"][id] = s;
  }
  doc["observable"] = report.verdict.observable;
  doc["violations"] = report.verdict.violations;
  return doc.dump(indent);
}

}  // namespace obsrec
