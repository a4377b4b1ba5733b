#ifndef OBSREC_RECOVERY_HPP
#define OBSREC_RECOVERY_HPP

#include <string>
#include <vector>

#include "obsrec/structural.hpp"

namespace obsrec {

struct FailureEvent {
  std::string sensor_id;
  int step = 0;  // simulation step at which measurements stop
};

enum class ReplacementConnectivity { hub, strongly_connected };

struct RecoveryPlan {
  std::string failed_sensor_id;
  SensorType failed_type = SensorType::alpha;
  std::vector<int> equivalent_states;  // 0-based, ascending, substitution-verified
  int chosen_state = -1;               // lowest verified equivalent
  ReplacementConnectivity connectivity = ReplacementConnectivity::hub;
  bool feasible = false;
  std::string diagnostic;              // set when infeasible
};

// Replacement candidates for a failed alpha sensor: the other members of the
// failed state's contraction set, each verified by substituting it and
// re-running the structural test.
RecoveryPlan plan_alpha_recovery(const SystemPattern& pattern, const FailureEvent& failed,
                                 Orientation orientation = Orientation::transposed);

// Replacement candidates for a failed beta sensor: the other members of the
// failed state's parent SCC. A self-cycle parent SCC is infeasible.
RecoveryPlan plan_beta_recovery(const SystemPattern& pattern, const FailureEvent& failed,
                                Orientation orientation = Orientation::transposed);

// Dispatches on the failed sensor's classified type.
RecoveryPlan plan_recovery(const SystemPattern& pattern, const FailureEvent& failed,
                           Orientation orientation = Orientation::transposed);

// New pattern with the failed sensor removed and a replacement sensor
// (id "<failed>_r") measuring chosen_state. Rechecks observability and raises
// InternalError if the substituted system is not observable.
SystemPattern apply_plan(const SystemPattern& pattern, const RecoveryPlan& plan,
                         Orientation orientation = Orientation::transposed);

std::string serialize_plan(const RecoveryPlan& plan, int indent = 2);

}  // namespace obsrec

#endif
