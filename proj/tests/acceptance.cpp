// Acceptance gate: one self-contained check per release criterion, each
// reporting a single [PASS]/[FAIL] line with its tolerance and runtime.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <string>
#include <vector>

#include "obsrec/recovery.hpp"
#include "obsrec/simulate.hpp"
#include "oracles.hpp"

using namespace obsrec;
using Clock = std::chrono::steady_clock;

namespace {

int failures = 0;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

void report(int id, const std::string& what, bool ok, const std::string& detail,
            double secs) {
  std::printf("[%s] criterion %d: %s — %s (%.1fs)\n", ok ? "PASS" : "FAIL", id,
              what.c_str(), detail.c_str(), secs);
  if (!ok) ++failures;
}

// Shared corpus for criteria 1-2: 500 random sensed patterns with n <= 8 at
// mixed densities, plus every edge subset for n <= 4 with a derived sensor set.
std::vector<SystemPattern> build_corpus() {
  std::vector<SystemPattern> corpus;
  for (std::uint64_t s = 0; s < 500; ++s) {
    int n = 1 + static_cast<int>(s % 8);
    double density = 0.08 + 0.07 * static_cast<double>(s % 11);
    corpus.push_back(oracle::random_pattern(n, density, 100000 + s));
  }
  for (int n = 1; n <= 4; ++n) {
    std::uint64_t cells = static_cast<std::uint64_t>(n) * n;
    for (std::uint64_t mask = 0; mask < (1ull << cells); ++mask) {
      SystemPattern p;
      p.n = n;
      for (std::uint64_t b = 0; b < cells; ++b)
        if (mask & (1ull << b))
          p.edges.insert({static_cast<int>(b / n) + 1, static_cast<int>(b % n) + 1});
      Rng rng(mask * 2654435761ull + n);
      int k = 0;
      for (int s = 1; s <= n; ++s)
        if (rng.coin()) p.sensors["s" + std::to_string(++k)] = {s};
      corpus.push_back(p);
    }
  }
  return corpus;
}

void criterion_1_and_2(const std::vector<SystemPattern>& corpus) {
  auto t0 = Clock::now();
  int verdict_mismatch = 0, matching_mismatch = 0;
  std::uint64_t idx = 0;
  for (const SystemPattern& p : corpus) {
    ++idx;
    bool mine = structural_observability(p).observable;
    if (p.sensors.empty()) {
      // No measurements can never be observable for n >= 1.
      if (mine) ++verdict_mismatch;
    } else if (mine != oracle::generic_rank_observable(p, 777000 + idx)) {
      ++verdict_mismatch;
    }
    BipartiteGraph g = build_bipartite(p);
    if (maximum_matching(g).size != oracle::max_matching_backtrack(g))
      ++matching_mismatch;
  }
  double secs = seconds_since(t0);
  char buf[160];
  std::snprintf(buf, sizeof(buf), "%zu instances, %d mismatches, budget 120s",
                corpus.size(), verdict_mismatch);
  report(1, "structural verdict equals generic-rank oracle",
         verdict_mismatch == 0 && secs < 120.0, buf, secs);
  std::snprintf(buf, sizeof(buf), "%zu instances, %d mismatches", corpus.size(),
                matching_mismatch);
  report(2, "matching cardinality equals brute force", matching_mismatch == 0, buf,
         secs);
}

void criterion_3() {
  auto t0 = Clock::now();
  int union_mismatch = 0, substitution_failures = 0, substitutions = 0;
  for (std::uint64_t s = 0; s < 200; ++s) {
    int n = 1 + static_cast<int>(s % 6);
    SystemPattern p = oracle::random_pattern(n, 0.1 + 0.08 * (s % 7), 910000 + s, false);
    std::set<int> mine;
    for (const auto& cs : contraction_sets(p))
      mine.insert(cs.states.begin(), cs.states.end());
    if (mine != oracle::unmatched_union_all_max(build_bipartite(p))) ++union_mismatch;

    // Alpha-candidate substitution check on the minimally sensed version.
    int k = 0;
    for (const auto& r : minimal_sensor_placement(p))
      p.sensors["s" + std::to_string(++k)] = {r.state + 1};
    SensorClassification cls = classify_sensors(p);
    for (const auto& [id, label] : cls.labels) {
      if (label.type != SensorType::alpha) continue;
      RecoveryPlan plan = plan_alpha_recovery(p, {id, 0});
      for (int v : plan.equivalent_states) {
        ++substitutions;
        SystemPattern sub = p;
        sub.sensors.erase(id);
        sub.sensors[id + "_r"] = {v + 1};
        if (!structural_observability(sub).observable ||
            !oracle::generic_rank_observable(sub, 33000 + s))
          ++substitution_failures;
      }
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "200 patterns, %d union mismatches; %d candidates, %d bad substitutions",
                union_mismatch, substitutions, substitution_failures);
  report(3, "contraction sets match all-matchings enumeration",
         union_mismatch == 0 && substitution_failures == 0 && substitutions > 0, buf,
         seconds_since(t0));
}

// One benchmark seed of the experiment reproduction; returns pass/fail of
// checks (a)-(d) and appends any note.
bool reproduce_seed(std::uint64_t seed, std::string& note) {
  Scenario sc;
  sc.pattern = make_benchmark_pattern(seed);
  sc.seed = seed;
  sc.trials = 100;
  sc.horizon = 100;
  NumericSystem sys = instantiate(sc.pattern, sc.target_rho, seed);
  EstimatorNetwork net = build_network(sys, classify_sensors(sc.pattern),
                                       Rng::derive(seed, 0xBEEF).integer(~0ull));
  if (!distributed_observability(kron_WA(sys, net), build_DH(sys, net))) {
    note += " seed " + std::to_string(seed) + ": (a) not observable;";
    return false;
  }
  try {
    GainMatrix gain = design_gain(sys, net);
    if (error_dynamics(sys, net, gain).spectral_radius >= 0.98) {
      note += " seed " + std::to_string(seed) + ": (b) rho >= 0.98;";
      return false;
    }
  } catch (const SynthesisError& e) {
    note += " seed " + std::to_string(seed) + ": (b) synthesis failed, best rho " +
            std::to_string(e.best_rho) + ";";
    return false;
  }
  SimulationReport rep = run(sc);
  if (rep.phases.size() != 1 || rep.phases[0].verdict != "bounded") {
    note += " seed " + std::to_string(seed) + ": (c) divergent;";
    return false;
  }
  for (const std::string& id : rep.sensor_ids) {
    const auto& series = rep.mse.at(id);
    double tail = 0.0;
    for (int k = sc.horizon - 10; k < sc.horizon; ++k) tail += series[k];
    tail /= 10.0;
    if (!(tail < 100 * sc.sigma_r * sc.sigma_r)) {
      note += " seed " + std::to_string(seed) + ": (d) tail MSE " +
              std::to_string(tail) + ";";
      return false;
    }
  }
  return true;
}

void criterion_4() {
  auto t0 = Clock::now();
  int passed = 0;
  std::string note;
  for (std::uint64_t seed = 0; seed < 10; ++seed)
    if (reproduce_seed(seed, note)) ++passed;
  double secs = seconds_since(t0);
  char buf[256];
  std::snprintf(buf, sizeof(buf),
                "n=10 rho=1.1 m=3 sigma=0.25, 100 trials, T=100: %d/10 seeds pass "
                "(need >= 9, budget 300s)%s",
                passed, note.empty() ? "" : note.c_str());
  report(4, "experiment reproduction at desk scale", passed >= 9 && secs < 300.0, buf,
         secs);
}

void criterion_5() {
  auto t0 = Clock::now();
  bool ok = true;
  std::string detail;
  SystemPattern bench = make_benchmark_pattern(5);
  for (const std::string& sensor : {"a1", "b1", "b2"}) {
    Scenario fail_sc;
    fail_sc.pattern = bench;
    fail_sc.seed = 5;
    fail_sc.trials = 50;
    fail_sc.horizon = 160;
    fail_sc.events = {{ScenarioEvent::Kind::failure, sensor, 40}};
    SimulationReport broken = run(fail_sc);
    // gain_redesigned == false in the failed phase certifies that the pair
    // lost distributed observability and the stale gain was carried.
    bool diverges = broken.phases.size() == 2 &&
                    !broken.phases[1].gain_redesigned &&
                    broken.phases[1].verdict == "divergent";

    Scenario rec_sc = fail_sc;
    rec_sc.horizon = 240;
    rec_sc.events.push_back({ScenarioEvent::Kind::recovery, sensor, 60});
    SimulationReport fixed = run(rec_sc);
    bool recovers = fixed.phases.size() == 3 && fixed.phases[2].gain_redesigned &&
                    fixed.phases[2].verdict == "bounded";
    if (!diverges || !recovers) {
      ok = false;
      detail += " " + sensor + (diverges ? "" : ":no-divergence") +
                (recovers ? "" : ":no-recovery");
    }
  }
  report(5, "failure/recovery dichotomy for the alpha and both beta sensors", ok,
         ok ? "divergent without recovery, bounded with sibling substitution"
            : "failed for" + detail,
         seconds_since(t0));
}

void criterion_6() {
  auto t0 = Clock::now();
  int instances = 0, violations = 0;
  double worst = 0.0;
  for (std::uint64_t s = 0; instances < 50 && s < 1200; ++s) {
    SystemPattern p = oracle::random_pattern(2 + s % 5, 0.35, 640000 + s, false);
    int k = 0;
    for (const auto& r : minimal_sensor_placement(p))
      p.sensors["s" + std::to_string(++k)] = {r.state + 1};
    if (p.sensors.size() > 4) continue;
    NumericSystem sys;
    try {
      sys = instantiate(p, 1.05, s);
    } catch (const ValidationError&) {
      continue;
    }
    EstimatorNetwork net = build_network(sys, classify_sensors(p), s);
    if (!distributed_observability(kron_WA(sys, net), build_DH(sys, net))) continue;
    GainMatrix gain;
    try {
      gain = design_gain(sys, net);
    } catch (const SynthesisError&) {
      continue;
    }
    ++instances;

    int m = static_cast<int>(net.sensor_order.size());
    int n = sys.n;
    Rng rng(31 + s);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.normal();
    std::vector<Eigen::VectorXd> est(m, Eigen::VectorXd::Zero(n));
    Eigen::VectorXd stacked(m * n);
    for (int i = 0; i < m; ++i) stacked.segment(i * n, n) = x;
    Eigen::MatrixXd closed = error_dynamics(sys, net, gain).closed_loop;

    for (int step = 0; step < 15; ++step) {
      x = (sys.A * x).eval();
      std::map<std::string, Eigen::VectorXd> y;
      for (const auto& [id, states] : sys.sensor_states) {
        Eigen::VectorXd yj(states.size());
        for (size_t r = 0; r < states.size(); ++r) yj(r) = x(states[r]);
        y[id] = yj;
      }
      est = estimator_step(est, y, sys, net, gain);
      stacked = (closed * stacked).eval();
      Eigen::VectorXd direct(m * n);
      for (int i = 0; i < m; ++i) direct.segment(i * n, n) = x - est[i];
      double rel = (direct - stacked).norm() / std::max(1.0, stacked.norm());
      worst = std::max(worst, rel);
      if (rel > 1e-8) ++violations;
    }
  }
  char buf[160];
  std::snprintf(buf, sizeof(buf),
                "%d instances (n<=6, m<=4), worst relative error %.2e, tol 1e-8",
                instances, worst);
  report(6, "stacked error recursion equals closed-loop matrix powers",
         instances >= 50 && violations == 0, buf, seconds_since(t0));
}

void criterion_7() {
  auto t0 = Clock::now();
  SystemPattern p;
  p.n = 3;
  p.edges = {{1, 2}, {2, 1}, {2, 3}, {3, 3}};
  p.sensors["b"] = {3};
  RecoveryPlan plan = plan_beta_recovery(p, {"b", 0});
  bool plan_ok = !plan.feasible && !plan.diagnostic.empty();

  Scenario sc;
  sc.pattern = p;
  sc.trials = 3;
  sc.horizon = 20;
  sc.events = {{ScenarioEvent::Kind::failure, "b", 5},
               {ScenarioEvent::Kind::recovery, "b", 8}};
  bool refused = false;
  std::string diag;
  try {
    run(sc);
  } catch (const ValidationError& e) {
    refused = true;
    diag = e.what();
  }
  report(7, "singleton self-cycle parent SCC is unrecoverable",
         plan_ok && refused,
         plan_ok && refused ? "plan infeasible; simulate refused: " + diag
                            : "missing refusal or diagnostic",
         seconds_since(t0));
}

void criterion_8() {
  Rng rng(424242);
  SystemPattern p;
  p.n = 2000;
  while (static_cast<int>(p.edges.size()) < 3 * p.n) {
    int j = 1 + static_cast<int>(rng.integer(p.n));
    int i = 1 + static_cast<int>(rng.integer(p.n));
    p.edges.insert({j, i});
  }
  auto t0 = Clock::now();
  SCCPartition part = scc_partition(p);
  double scc_secs = seconds_since(t0);
  t0 = Clock::now();
  std::vector<ContractionSet> sets = contraction_sets(p);
  double con_secs = seconds_since(t0);
  char buf[200];
  std::snprintf(buf, sizeof(buf),
                "n=2000, avg out-degree 3: SCC %.2fs (soft bound 5s, %zu components), "
                "contractions %.2fs (soft bound 30s, %zu sets)",
                scc_secs, part.components.size(), con_secs, sets.size());
  report(8, "scale sanity", scc_secs < 5.0 && con_secs < 30.0, buf,
         scc_secs + con_secs);
}

}  // namespace

int main() {
  std::vector<SystemPattern> corpus = build_corpus();
  criterion_1_and_2(corpus);
  criterion_3();
  criterion_4();
  criterion_5();
  criterion_6();
  criterion_7();
  criterion_8();
  if (failures == 0) {
    std::printf("acceptance: all 8 criteria passed\n");
    return 0;
  }
  std::printf("acceptance: %d criterion(s) failed\n", failures);
  return 1;
}
