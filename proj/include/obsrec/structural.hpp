#ifndef OBSREC_STRUCTURAL_HPP
#define OBSREC_STRUCTURAL_HPP

#include <optional>
#include <string>
#include <vector>

#include "obsrec/bipartite.hpp"
#include "obsrec/pattern.hpp"

namespace obsrec {

// Interchangeability class of states: every member is unmatched under some
// maximum matching, so any member can host the measurement. 0-based states.
struct ContractionSet {
  int id = 0;
  std::vector<int> states;             // sorted
  int witness_unmatched = -1;          // lowest canonical unmatched member
};

struct SCCPartition {
  std::vector<std::vector<int>> components;  // each sorted; 0-based states
  std::vector<bool> parent_flags;            // no outgoing inter-component edge
  std::vector<int> component_of;             // state -> component id

  std::vector<int> parent_ids() const;
};

enum class SensorType { alpha, beta, redundant };

struct SensorLabel {
  SensorType type = SensorType::redundant;
  std::optional<int> covered_contraction;
  std::optional<int> covered_parent_scc;
};

struct SensorClassification {
  std::map<std::string, SensorLabel> labels;
  std::vector<std::string> violations;       // uncovered sets, human-readable

  std::vector<std::string> sensors_of_type(SensorType t) const;
};

struct PlacementRequirement {
  int state = 0;                             // 0-based
  SensorType type = SensorType::alpha;
};

struct ObservabilityVerdict {
  bool observable = false;
  std::vector<std::string> violations;
};

// Alternating-path reachability classes of the canonical maximum matching
// (matched links reversed in the auxiliary graph). Overlapping reachability
// sets from distinct unmatched witnesses are merged. Perfect matching -> {}.
std::vector<ContractionSet> contraction_sets(
    const SystemPattern& pattern, Orientation orientation = Orientation::transposed);

SCCPartition scc_partition(const SystemPattern& pattern);

// One alpha requirement per canonically unmatched state, one beta requirement
// per parent SCC not already holding an alpha requirement.
std::vector<PlacementRequirement> minimal_sensor_placement(
    const SystemPattern& pattern, Orientation orientation = Orientation::transposed);

// Alpha precedence: a sensor touching a contraction set is alpha even if it
// also sits in a parent SCC (the SCC coverage is still recorded).
SensorClassification classify_sensors(
    const SystemPattern& pattern, Orientation orientation = Orientation::transposed);

// True iff (i) the bipartite graph extended with one right node per sensor
// measurement saturates every state and (ii) every parent SCC holds a
// measured state. Violations name the offending contraction sets / SCCs.
ObservabilityVerdict structural_observability(
    const SystemPattern& pattern, Orientation orientation = Orientation::transposed);

// Full analysis bundle serialized by the CLI.
struct AnalysisReport {
  Matching matching;
  std::vector<int> unmatched;                // canonical, 0-based
  std::vector<ContractionSet> contractions;
  SCCPartition sccs;
  SensorClassification classification;
  ObservabilityVerdict verdict;
};

AnalysisReport analyze(const SystemPattern& pattern,
                       Orientation orientation = Orientation::transposed);

std::string serialize_report(const AnalysisReport& report, int indent = 2);

}  // namespace obsrec

#endif
