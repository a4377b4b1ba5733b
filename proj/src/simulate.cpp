#include "obsrec/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <limits>
#include <numeric>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "json.hpp"
#include "obsrec/rng.hpp"

namespace obsrec {

void Scenario::validate() const {
  pattern.validate();
  if (trials < 1) throw ValidationError("trials must be >= 1");
  if (horizon < 1) throw ValidationError("horizon must be >= 1");
  if (sigma_v < 0 || sigma_r < 0) throw ValidationError("noise levels must be >= 0");
  int last = 0;
  for (const auto& ev : events) {
    if (ev.step < last) throw ValidationError("events must be time-ordered");
    if (ev.step < 0 || ev.step >= horizon)
      throw ValidationError("event step " + std::to_string(ev.step) + " outside horizon");
    last = ev.step;
  }
}

namespace {

struct PhaseConfig {
  int start = 0;
  NumericSystem numsys;            // sensor_states filtered to measuring sensors
  EstimatorNetwork network;
  GainMatrix gain;
  bool redesigned = false;
  double rho = 0.0;
};

// Deterministic phase schedule: at each event step the pattern / alive set is
// updated, the network and D_H rebuilt, and the gain redesigned whenever the
// pair is still observable (otherwise the previous gain is carried).
std::vector<PhaseConfig> build_schedule(const Scenario& scenario,
                                        const NumericSystem& base) {
  std::vector<PhaseConfig> phases;
  SystemPattern pattern = scenario.pattern;     // failed sensors stay listed here
  std::set<std::string> failed;
  std::uint64_t wseed = Rng::derive(scenario.seed, 0xBEEF).integer(~0ull);

  GainMatrix carry_gain;
  std::vector<std::string> carry_order;
  bool have_carry = false;

  auto make_phase = [&](int start) {
    PhaseConfig ph;
    ph.start = start;
    ph.numsys = base;
    ph.numsys.sensor_states.clear();
    for (const auto& [id, states] : pattern.sensors) {
      if (failed.count(id)) continue;
      std::vector<int>& v = ph.numsys.sensor_states[id];
      for (int s : states) v.push_back(s - 1);
    }
    ph.network = build_network(ph.numsys, classify_sensors(pattern), wseed);
    Eigen::MatrixXd F = kron_WA(ph.numsys, ph.network);
    Eigen::MatrixXd DH = build_DH(ph.numsys, ph.network);
    if (distributed_observability(F, DH)) {
      ph.gain = design_gain(ph.numsys, ph.network);
      ph.redesigned = true;
    } else {
      if (!have_carry)
        throw ValidationError("initial sensor set is not distributed-observable");
      // Carry the previous gain block-by-block by sensor id; new nodes get a
      // zero block (they cannot appear without a redesign anyway).
      ph.gain.blocks.clear();
      for (const std::string& id : ph.network.sensor_order) {
        int old = -1;
        for (size_t i = 0; i < carry_order.size(); ++i)
          if (carry_order[i] == id) old = static_cast<int>(i);
        ph.gain.blocks.push_back(old >= 0 ? carry_gain.blocks[old]
                                          : Eigen::MatrixXd::Zero(base.n, base.n));
      }
    }
    ph.rho = spectral_radius(F - ph.gain.assembled() * DH * F);
    return ph;
  };

  size_t e = 0;
  int start = 0;
  while (true) {
    // Apply all events scheduled for `start` before building the phase.
    while (e < scenario.events.size() && scenario.events[e].step == start) {
      const ScenarioEvent& ev = scenario.events[e];
      if (ev.kind == ScenarioEvent::Kind::failure) {
        if (!pattern.sensors.count(ev.sensor_id))
          throw ValidationError("failure event for unknown sensor '" + ev.sensor_id + "'");
        if (failed.count(ev.sensor_id))
          throw ValidationError("sensor '" + ev.sensor_id + "' already failed");
        failed.insert(ev.sensor_id);
      } else {
        if (!failed.count(ev.sensor_id))
          throw ValidationError("recovery event for sensor '" + ev.sensor_id +
                                "' which has not failed");
        RecoveryPlan plan = plan_recovery(pattern, {ev.sensor_id, ev.step});
        pattern = apply_plan(pattern, plan);  // raises if infeasible
        failed.erase(ev.sensor_id);
      }
      ++e;
    }
    phases.push_back(make_phase(start));
    carry_gain = phases.back().gain;
    carry_order = phases.back().network.sensor_order;
    have_carry = true;
    if (e >= scenario.events.size()) break;
    start = scenario.events[e].step;
  }
  return phases;
}

double mean_of(const std::vector<double>& v, size_t begin, size_t count) {
  double s = 0.0;
  for (size_t i = begin; i < begin + count; ++i) s += v[i];
  return s / static_cast<double>(count);
}

}  // namespace

SimulationReport run(const Scenario& scenario, int threads) {
  scenario.validate();
  NumericSystem base = instantiate(scenario.pattern, scenario.target_rho, scenario.seed);
  base.sigma_v = scenario.sigma_v;
  base.sigma_r = scenario.sigma_r;
  std::vector<PhaseConfig> phases = build_schedule(scenario, base);

  // Sensor slots: every id that is ever a network node, stable order.
  std::vector<std::string> slots;
  for (const auto& ph : phases)
    for (const std::string& id : ph.network.sensor_order)
      if (std::find(slots.begin(), slots.end(), id) == slots.end()) slots.push_back(id);
  const int S = static_cast<int>(slots.size());
  const int T = scenario.horizon;
  const int n = base.n;

  std::vector<int> phase_of(T);
  for (int p = 0, k = 0; k < T; ++k) {
    while (p + 1 < static_cast<int>(phases.size()) && phases[p + 1].start <= k) ++p;
    phase_of[k] = p;
  }

  // Per-trial buffers, reduced in trial order afterwards, so the result is
  // independent of the thread count and schedule.
  std::vector<double> buffers(static_cast<size_t>(scenario.trials) * S * T,
                              std::numeric_limits<double>::quiet_NaN());

  auto run_trial = [&](int trial) {
    Rng rng = Rng::derive(scenario.seed, static_cast<std::uint64_t>(trial));
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.normal();

    int p = -1;
    std::vector<Eigen::VectorXd> est;
    std::map<std::string, Eigen::VectorXd> est_by_id;
    double* buf = buffers.data() + static_cast<size_t>(trial) * S * T;

    for (int k = 0; k < T; ++k) {
      if (phase_of[k] != p) {
        // Estimates carry over by id; a replacement sensor inherits the
        // estimate of the sensor it replaces.
        if (p >= 0)
          for (size_t i = 0; i < est.size(); ++i)
            est_by_id[phases[p].network.sensor_order[i]] = est[i];
        p = phase_of[k];
        const auto& order = phases[p].network.sensor_order;
        est.assign(order.size(), Eigen::VectorXd::Zero(n));
        for (size_t i = 0; i < order.size(); ++i) {
          auto it = est_by_id.find(order[i]);
          if (it == est_by_id.end() && order[i].size() > 2 &&
              order[i].substr(order[i].size() - 2) == "_r")
            it = est_by_id.find(order[i].substr(0, order[i].size() - 2));
          if (it != est_by_id.end()) est[i] = it->second;
        }
      }
      const PhaseConfig& ph = phases[p];

      Eigen::VectorXd v(n);
      for (int i = 0; i < n; ++i) v(i) = scenario.sigma_v * rng.normal();
      x = (base.A * x + v).eval();

      std::map<std::string, Eigen::VectorXd> y;
      for (const auto& [id, states] : ph.numsys.sensor_states) {
        Eigen::VectorXd yj(states.size());
        for (size_t r = 0; r < states.size(); ++r)
          yj(r) = x(states[r]) + scenario.sigma_r * rng.normal();
        y[id] = yj;
      }
      est = estimator_step(est, y, ph.numsys, ph.network, ph.gain);

      for (size_t i = 0; i < ph.network.sensor_order.size(); ++i) {
        int slot = static_cast<int>(std::find(slots.begin(), slots.end(),
                                              ph.network.sensor_order[i]) -
                                    slots.begin());
        buf[slot * T + k] = (x - est[i]).squaredNorm() / n;
      }
    }
  };

  if (threads == 1) {
    for (int t = 0; t < scenario.trials; ++t) run_trial(t);
  } else {
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic) num_threads(threads > 0 ? threads : omp_get_max_threads())
#endif
    for (int t = 0; t < scenario.trials; ++t) run_trial(t);
  }

  SimulationReport report;
  report.sensor_ids = slots;
  for (int s = 0; s < S; ++s) {
    std::vector<double>& series = report.mse[slots[s]];
    series.assign(T, std::numeric_limits<double>::quiet_NaN());
    for (int k = 0; k < T; ++k) {
      if (std::isnan(buffers[static_cast<size_t>(0) * S * T + s * T + k])) continue;
      double acc = 0.0;
      for (int t = 0; t < scenario.trials; ++t)
        acc += buffers[static_cast<size_t>(t) * S * T + s * T + k];
      series[k] = acc / scenario.trials;
    }
  }

  // Verdicts per phase: trailing-window growth against the opening window,
  // plus a hard overflow bound.
  for (size_t p = 0; p < phases.size(); ++p) {
    PhaseReport pr;
    pr.start_step = phases[p].start;
    pr.end_step = p + 1 < phases.size() ? phases[p + 1].start : T;
    pr.closed_loop_rho = phases[p].rho;
    pr.gain_redesigned = phases[p].redesigned;
    bool any_divergent = false;
    for (const std::string& id : phases[p].network.sensor_order) {
      const std::vector<double>& series = report.mse[id];
      int len = pr.end_step - pr.start_step;
      int w = std::max(1, std::min(10, len / 2));
      double head = mean_of(series, pr.start_step, w);
      double tail = mean_of(series, pr.end_step - w, w);
      bool overflow = false;
      for (int k = pr.start_step; k < pr.end_step; ++k)
        overflow = overflow || !(series[k] < 1e12);
      bool divergent = overflow || (head > 0 && tail > 1e3 * head);
      pr.sensor_verdicts[id] = divergent ? "divergent" : "bounded";
      any_divergent = any_divergent || divergent;
    }
    pr.verdict = any_divergent ? "divergent" : "bounded";
    report.phases.push_back(pr);
  }
  return report;
}

std::string emit_csv(const SimulationReport& report) {
  std::string out = "step,sensor_id,mse,phase\n";
  char num[64];
  int T = report.mse.empty() ? 0 : static_cast<int>(report.mse.begin()->second.size());
  for (int k = 0; k < T; ++k) {
    int phase = 0;
    for (size_t p = 0; p < report.phases.size(); ++p)
      if (k >= report.phases[p].start_step) phase = static_cast<int>(p);
    for (const std::string& id : report.sensor_ids) {
      double v = report.mse.at(id)[k];
      if (std::isnan(v)) continue;
      std::snprintf(num, sizeof(num), "%.17g", v);
      out += std::to_string(k) + "," + id + "," + num + "," + std::to_string(phase) + "\n";
    }
  }
  return out;
}

std::string summarize(const SimulationReport& report, double runtime_seconds, int indent) {
  nlohmann::json doc;
  doc["sensors"] = report.sensor_ids;
  doc["phases"] = nlohmann::json::array();
  for (const auto& p : report.phases) {
    nlohmann::json ph;
    ph["start"] = p.start_step;
    ph["end"] = p.end_step;
    ph["closed_loop_rho"] = p.closed_loop_rho;
    ph["gain_redesigned"] = p.gain_redesigned;
    ph["verdict"] = p.verdict;
    ph["sensor_verdicts"] = p.sensor_verdicts;
    doc["phases"].push_back(ph);
  }
  doc["runtime"]["seconds"] = runtime_seconds;
  return doc.dump(indent);
}

Scenario generate_random_scenario(int n, double density, std::uint64_t seed) {
  if (n < 1) throw ValidationError("n must be >= 1");
  if (density <= 0.0 || density > 1.0) throw ValidationError("density must be in (0,1]");
  Rng rng(seed);
  SystemPattern p;
  p.n = n;
  for (int j = 1; j <= n; ++j)
    for (int i = 1; i <= n; ++i)
      if (rng.uniform01() < density) p.edges.insert({j, i});

  // A cycle-free pattern has spectral radius 0 and cannot be rescaled; a
  // self-loop on state 1 keeps the scenario instantiable.
  SCCPartition part = scc_partition(p);
  bool has_cycle = false;
  for (const auto& comp : part.components) has_cycle = has_cycle || comp.size() > 1;
  for (const auto& [j, i] : p.edges) has_cycle = has_cycle || j == i;
  if (!has_cycle) p.edges.insert({1, 1});

  int k = 0;
  for (const PlacementRequirement& req : minimal_sensor_placement(p))
    p.sensors["s" + std::to_string(++k)] = {req.state + 1};

  Scenario sc;
  sc.pattern = p;
  sc.seed = seed;
  return sc;
}

SystemPattern make_benchmark_pattern(std::uint64_t seed, int n) {
  if (n < 10) throw ValidationError("benchmark pattern needs n >= 10");
  Rng rng(seed);
  // Three sink components so that losing any one sensor unmeasures a whole
  // unstable block: cycle A, cycle B, and the dilation component {u1, u2, c}
  // whose contraction {u1, u2} hosts the alpha sensor. Spare states extend
  // the cycles or the feeder chain.
  int spare = n - 10;
  int extra_a = spare > 0 ? static_cast<int>(rng.integer(spare + 1)) : 0;
  int rem = spare - extra_a;
  int extra_b = rem > 0 ? static_cast<int>(rng.integer(rem + 1)) : 0;
  int a = 3 + extra_a;
  int b = 3 + extra_b;
  int chain = 1 + (rem - extra_b);

  // Random relabeling makes the instance look unstructured.
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 1);
  for (int i = n - 1; i > 0; --i)
    std::swap(perm[i], perm[rng.integer(static_cast<std::uint64_t>(i) + 1)]);

  // Internal layout: [0,a) cycle A, [a,a+b) cycle B, then u1, u2, c and the
  // self-looped feeder chain.
  int u1 = a + b, u2 = a + b + 1, c = a + b + 2, x0 = a + b + 3;
  SystemPattern p;
  p.n = n;
  auto edge = [&](int from, int to) { p.edges.insert({perm[from], perm[to]}); };
  for (int i = 0; i < a; ++i) edge(i, (i + 1) % a);
  for (int i = 0; i < b; ++i) edge(a + (i + 1) % b, a + i);
  edge(u1, c);
  edge(u2, c);
  edge(c, u1);
  edge(c, u2);
  for (int i = 0; i < chain; ++i) {
    edge(x0 + i, x0 + i);                   // self-loop keeps the state matched
    if (i + 1 < chain) edge(x0 + i, x0 + i + 1);
  }
  int xk = x0 + chain - 1;
  edge(xk, 0);                              // feeds parent cycle A
  edge(xk, a);                              // feeds parent cycle B
  edge(xk, u1);                             // feeds the dilation component
  // A couple of chords inside the parent cycles, when they fit.
  if (a >= 4) edge(0, 2);
  if (b >= 4) edge(a + 2, a);

  std::vector<PlacementRequirement> reqs = minimal_sensor_placement(p);
  int alphas = 0, betas = 0;
  for (const auto& r : reqs) (r.type == SensorType::alpha ? alphas : betas)++;
  std::vector<ContractionSet> sets = contraction_sets(p);
  if (alphas != 1 || betas != 2 || sets.size() != 1 || sets[0].states.size() < 2)
    throw InternalError("benchmark pattern construction violated its own shape");
  int bcount = 0;
  for (const auto& r : reqs) {
    if (r.type == SensorType::alpha)
      p.sensors["a1"] = {r.state + 1};
    else
      p.sensors["b" + std::to_string(++bcount)] = {r.state + 1};
  }
  return p;
}

Scenario parse_scenario(const std::string& json_text) {
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(json_text);
  } catch (const nlohmann::json::parse_error& e) {
    throw ValidationError(std::string("scenario file is not valid JSON: ") + e.what());
  }
  Scenario sc;
  try {
    sc.pattern = parse_system(doc.at("system").dump());
    if (doc.contains("rho")) sc.target_rho = doc["rho"].get<double>();
    if (doc.contains("sigma_v")) sc.sigma_v = doc["sigma_v"].get<double>();
    if (doc.contains("sigma_r")) sc.sigma_r = doc["sigma_r"].get<double>();
    if (doc.contains("horizon")) sc.horizon = doc["horizon"].get<int>();
    if (doc.contains("trials")) sc.trials = doc["trials"].get<int>();
    if (doc.contains("seed")) sc.seed = doc["seed"].get<std::uint64_t>();
    if (doc.contains("events"))
      for (const auto& ev : doc["events"]) {
        ScenarioEvent e;
        std::string kind = ev.at("type").get<std::string>();
        if (kind == "failure")
          e.kind = ScenarioEvent::Kind::failure;
        else if (kind == "recovery")
          e.kind = ScenarioEvent::Kind::recovery;
        else
          throw ValidationError("unknown event type '" + kind + "'");
        e.sensor_id = ev.at("sensor").get<std::string>();
        e.step = ev.at("step").get<int>();
        sc.events.push_back(e);
      }
    if (doc.contains("expect"))
      for (const auto& v : doc["expect"])
        sc.expected_verdicts.push_back(v.get<std::string>());
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError(std::string("scenario schema error: ") + e.what());
  }
  sc.validate();
  return sc;
}

std::string serialize_scenario(const Scenario& scenario, int indent) {
  nlohmann::json doc;
  doc["system"] = nlohmann::json::parse(serialize_system(scenario.pattern, -1));
  doc["rho"] = scenario.target_rho;
  doc["sigma_v"] = scenario.sigma_v;
  doc["sigma_r"] = scenario.sigma_r;
  doc["horizon"] = scenario.horizon;
  doc["trials"] = scenario.trials;
  doc["seed"] = scenario.seed;
  doc["events"] = nlohmann::json::array();
  for (const auto& e : scenario.events) {
    nlohmann::json ev;
    ev["type"] = e.kind == ScenarioEvent::Kind::failure ? "failure" : "recovery";
    ev["sensor"] = e.sensor_id;
    ev["step"] = e.step;
    doc["events"].push_back(ev);
  }
  if (!scenario.expected_verdicts.empty()) doc["expect"] = scenario.expected_verdicts;
  return doc.dump(indent);
}

}  // namespace obsrec
