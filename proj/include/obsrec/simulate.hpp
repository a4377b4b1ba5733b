#ifndef OBSREC_SIMULATE_HPP
#define OBSREC_SIMULATE_HPP

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "obsrec/numeric.hpp"
#include "obsrec/recovery.hpp"

namespace obsrec {

struct ScenarioEvent {
  enum class Kind { failure, recovery } kind = Kind::failure;
  std::string sensor_id;   // failing sensor, or failed sensor being recovered
  int step = 0;
};

struct Scenario {
  SystemPattern pattern;
  double target_rho = 1.1;
  double sigma_v = 0.25;
  double sigma_r = 0.25;
  int horizon = 100;
  int trials = 100;
  std::uint64_t seed = 7;
  std::vector<ScenarioEvent> events;              // time-ordered
  std::vector<std::string> expected_verdicts;     // optional, one per phase

  void validate() const;
};

struct PhaseReport {
  int start_step = 0;                             // inclusive
  int end_step = 0;                               // exclusive
  double closed_loop_rho = 0.0;
  bool gain_redesigned = false;
  std::map<std::string, std::string> sensor_verdicts;  // bounded / divergent
  std::string verdict;                                 // divergent if any sensor is
};

struct SimulationReport {
  std::vector<std::string> sensor_ids;            // all sensors ever alive
  // mse[sensor][step]: trial mean of ||x - xhat||^2 / n; NaN while the sensor
  // does not exist (before its recovery event).
  std::map<std::string, std::vector<double>> mse;
  std::vector<PhaseReport> phases;
};

// Monte Carlo run of the scenario. `threads <= 1` forces the serial
// reference path; any thread count produces bit-identical results because
// per-trial streams derive from (seed, trial) and the reduction is ordered.
SimulationReport run(const Scenario& scenario, int threads = 0);

// CSV: header `step,sensor_id,mse,phase`, rows ordered by step then sensor.
std::string emit_csv(const SimulationReport& report);

// Summary JSON: per-phase rho and verdicts; runtime lives under a separate
// key so the rest of the document is reproducible byte for byte.
std::string summarize(const SimulationReport& report, double runtime_seconds,
                      int indent = 2);

// Random pattern with the given edge density, sensors auto-placed by
// minimal_sensor_placement; structurally observable by construction.
Scenario generate_random_scenario(int n, double density, std::uint64_t seed);

// n-state benchmark system in the shape of the failure-recovery experiments:
// three sink SCCs (two cycles plus a dilation component holding a contraction
// of >= 2 states) and the minimal m = 3 placement (one alpha, two beta), so a
// failure of any of the three sensors unmeasures an unstable block.
// Deterministic per seed.
SystemPattern make_benchmark_pattern(std::uint64_t seed, int n = 10);

Scenario parse_scenario(const std::string& json_text);
std::string serialize_scenario(const Scenario& scenario, int indent = 2);

}  // namespace obsrec

#endif
