#include "obsrec/recovery.hpp"

#include <algorithm>

#include "json.hpp"

namespace obsrec {

namespace {

const SensorLabel& label_of(const SensorClassification& cls, const std::string& id) {
  auto it = cls.labels.find(id);
  if (it == cls.labels.end()) throw ValidationError("unknown sensor '" + id + "'");
  return it->second;
}

SystemPattern substitute(const SystemPattern& pattern, const std::string& failed_id,
                         int replacement_state0) {
  SystemPattern next = pattern;
  next.sensors.erase(failed_id);
  next.sensors[failed_id + "_r"] = {replacement_state0 + 1};
  return next;
}

}  // namespace

RecoveryPlan plan_alpha_recovery(const SystemPattern& pattern, const FailureEvent& failed,
                                 Orientation orientation) {
  SensorClassification cls = classify_sensors(pattern, orientation);
  const SensorLabel& label = label_of(cls, failed.sensor_id);
  if (label.type != SensorType::alpha)
    throw ValidationError("sensor '" + failed.sensor_id + "' is not alpha-type");

  std::vector<ContractionSet> sets = contraction_sets(pattern, orientation);
  const ContractionSet& cs = sets.at(*label.covered_contraction);

  const std::set<int>& measured = pattern.sensors.at(failed.sensor_id);
  int failed_state = -1;
  for (int v : cs.states)
    if (measured.count(v + 1)) {
      failed_state = v;
      break;
    }

  RecoveryPlan plan;
  plan.failed_sensor_id = failed.sensor_id;
  plan.failed_type = SensorType::alpha;
  plan.connectivity = ReplacementConnectivity::hub;
  for (int v : cs.states) {
    if (v == failed_state) continue;
    if (structural_observability(substitute(pattern, failed.sensor_id, v), orientation)
            .observable)
      plan.equivalent_states.push_back(v);
  }
  plan.feasible = !plan.equivalent_states.empty();
  if (plan.feasible)
    plan.chosen_state = plan.equivalent_states.front();
  else
    plan.diagnostic = "contraction set " + std::to_string(cs.id) +
                      " has no equivalent state for " + failed.sensor_id;
  return plan;
}

RecoveryPlan plan_beta_recovery(const SystemPattern& pattern, const FailureEvent& failed,
                                Orientation orientation) {
  SensorClassification cls = classify_sensors(pattern, orientation);
  const SensorLabel& label = label_of(cls, failed.sensor_id);
  if (label.type != SensorType::beta)
    throw ValidationError("sensor '" + failed.sensor_id + "' is not beta-type");

  SCCPartition part = scc_partition(pattern);
  int scc = *label.covered_parent_scc;
  const std::set<int>& measured = pattern.sensors.at(failed.sensor_id);
  int failed_state = -1;
  for (int v : part.components[scc])
    if (measured.count(v + 1)) {
      failed_state = v;
      break;
    }

  RecoveryPlan plan;
  plan.failed_sensor_id = failed.sensor_id;
  plan.failed_type = SensorType::beta;
  plan.connectivity = ReplacementConnectivity::strongly_connected;
  for (int v : part.components[scc])
    if (v != failed_state) plan.equivalent_states.push_back(v);
  plan.feasible = !plan.equivalent_states.empty();
  if (plan.feasible)
    plan.chosen_state = plan.equivalent_states.front();
  else
    plan.diagnostic = "parent SCC " + std::to_string(scc) +
                      " is a self-cycle; no equivalent state exists";
  return plan;
}

RecoveryPlan plan_recovery(const SystemPattern& pattern, const FailureEvent& failed,
                           Orientation orientation) {
  SensorClassification cls = classify_sensors(pattern, orientation);
  const SensorLabel& label = label_of(cls, failed.sensor_id);
  switch (label.type) {
    case SensorType::alpha:
      return plan_alpha_recovery(pattern, failed, orientation);
    case SensorType::beta:
      return plan_beta_recovery(pattern, failed, orientation);
    default:
      throw ValidationError("sensor '" + failed.sensor_id +
                            "' is redundant; its failure needs no recovery");
  }
}

SystemPattern apply_plan(const SystemPattern& pattern, const RecoveryPlan& plan,
                         Orientation orientation) {
  if (!plan.feasible)
    throw ValidationError("recovery plan for '" + plan.failed_sensor_id +
                          "' is infeasible: " + plan.diagnostic);
  if (!pattern.sensors.count(plan.failed_sensor_id))
    throw ValidationError("unknown sensor '" + plan.failed_sensor_id + "'");
  if (pattern.sensors.at(plan.failed_sensor_id).count(plan.chosen_state + 1))
    throw ValidationError("replacement state equals a state the failed sensor measured");

  SystemPattern next = substitute(pattern, plan.failed_sensor_id, plan.chosen_state);
  if (!structural_observability(next, orientation).observable)
    throw InternalError("substituted system is not structurally observable; "
                        "recovery analysis is inconsistent");
  return next;
}

std::string serialize_plan(const RecoveryPlan& plan, int indent) {
  nlohmann::json doc;
  doc["failed_sensor"] = plan.failed_sensor_id;
  doc["failed_type"] = plan.failed_type == SensorType::alpha ? "alpha" : "beta";
  doc["equivalent_states"] = nlohmann::json::array();
  for (int v : plan.equivalent_states) doc["equivalent_states"].push_back(v + 1);
  doc["chosen_state"] = plan.feasible ? nlohmann::json(plan.chosen_state + 1)
                                      : nlohmann::json();
  doc["connectivity"] = plan.connectivity == ReplacementConnectivity::hub
                            ? "hub"
                            : "strongly_connected";
  doc["feasible"] = plan.feasible;
  if (!plan.diagnostic.empty()) doc["diagnostic"] = plan.diagnostic;
  return doc.dump(indent);
}

}  // namespace obsrec
