#include <cmath>

#include "doctest.h"
#include "obsrec/numeric.hpp"
#include "obsrec/simulate.hpp"
#include "oracles.hpp"

using namespace obsrec;

namespace {

// Benchmark-shaped system with its minimal m=3 sensor set, instantiated.
struct Setup {
  SystemPattern pattern;
  NumericSystem sys;
  SensorClassification cls;
  EstimatorNetwork net;
};

Setup make_setup(std::uint64_t seed, double rho = 1.1) {
  Setup s;
  s.pattern = make_benchmark_pattern(seed);
  s.sys = instantiate(s.pattern, rho, seed);
  s.cls = classify_sensors(s.pattern);
  s.net = build_network(s.sys, s.cls, seed + 1);
  return s;
}

}  // namespace

TEST_CASE("instantiate hits the target spectral radius") {
  for (std::uint64_t seed : {1ull, 2ull, 3ull}) {
    Setup s = make_setup(seed);
    CHECK(spectral_radius(s.sys.A) == doctest::Approx(1.1).epsilon(1e-6));
    // Zero pattern of A matches the edge set exactly.
    for (int i = 0; i < s.sys.n; ++i)
      for (int j = 0; j < s.sys.n; ++j)
        CHECK((s.sys.A(i, j) != 0.0) ==
              (s.pattern.edges.count({j + 1, i + 1}) == 1));
  }
}

TEST_CASE("diagonal pattern scales max |a_ii| to the target") {
  SystemPattern p;
  p.n = 3;
  p.edges = {{1, 1}, {2, 2}, {3, 3}};
  NumericSystem sys = instantiate(p, 1.0, 5);
  double mx = 0;
  for (int i = 0; i < 3; ++i) mx = std::max(mx, std::abs(sys.A(i, i)));
  CHECK(mx == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("instantiate is deterministic and rejects nilpotent patterns") {
  SystemPattern p;
  p.n = 2;
  p.edges = {{1, 2}};
  CHECK_THROWS_AS(instantiate(p, 1.1, 1), ValidationError);

  SystemPattern bench = make_benchmark_pattern(4);
  NumericSystem a = instantiate(bench, 1.1, 9);
  NumericSystem b = instantiate(bench, 1.1, 9);
  CHECK(a.A == b.A);
}

TEST_CASE("network: stochastic rows, ring support, alpha hubs") {
  Setup s = make_setup(6);
  int m = static_cast<int>(s.net.sensor_order.size());
  REQUIRE(m == 3);
  for (int i = 0; i < m; ++i) {
    CHECK(s.net.W.row(i).sum() == doctest::Approx(1.0).epsilon(1e-12));
    for (int j = 0; j < m; ++j) {
      bool on_support = (j == i) || (j == (i + 1) % m);
      CHECK((s.net.W(i, j) != 0.0) == on_support);
    }
  }
  CHECK(s.net.alpha_sensors == std::vector<std::string>{"a1"});

  // Single-sensor network is W = [1].
  SystemPattern single;
  single.n = 1;
  single.edges = {{1, 1}};
  single.sensors["s"] = {1};
  NumericSystem nsys = instantiate(single, 1.0, 1);
  EstimatorNetwork net1 = build_network(nsys, classify_sensors(single), 3);
  CHECK(net1.W(0, 0) == doctest::Approx(1.0));

  EstimatorNetwork again = build_network(s.sys, s.cls, 7);
  EstimatorNetwork again2 = build_network(s.sys, s.cls, 7);
  CHECK(again.W == again2.W);
}

TEST_CASE("D_H blocks follow the hub rule") {
  // Single sensor measuring state 1 of n=2.
  SystemPattern p;
  p.n = 2;
  p.edges = {{1, 1}, {2, 2}};
  p.sensors["s"] = {1};
  NumericSystem sys = instantiate(p, 1.0, 1);
  EstimatorNetwork net = build_network(sys, classify_sensors(p), 1);
  Eigen::MatrixXd dh = build_DH(sys, net);
  CHECK(dh(0, 0) == 1.0);
  CHECK(dh(1, 1) == 0.0);

  // Benchmark: every block contains the alpha sensor's e_u e_u^T plus its own.
  Setup s = make_setup(8);
  int u = s.sys.sensor_states.at("a1")[0];
  Eigen::MatrixXd DH = build_DH(s.sys, s.net);
  int n = s.sys.n;
  for (int i = 0; i < 3; ++i) {
    Eigen::MatrixXd want = s.sys.HtH("a1") + s.sys.HtH(s.net.sensor_order[i]);
    if (s.net.sensor_order[i] == "a1") want = s.sys.HtH("a1");
    CHECK((DH.block(i * n, i * n, n, n) - want).norm() == 0.0);
    CHECK(DH.block(i * n, i * n, n, n)(u, u) >= 1.0);
  }

  // Failed alpha: its term disappears from every block.
  NumericSystem failed = s.sys;
  failed.sensor_states.erase("a1");
  Eigen::MatrixXd DHf = build_DH(failed, s.net);
  for (int i = 0; i < 3; ++i) CHECK(DHf.block(i * n, i * n, n, n)(u, u) == 0.0);
}

TEST_CASE("distributed observability: nominal true, alpha-failed false, identity D_H true") {
  Setup s = make_setup(10);
  Eigen::MatrixXd F = kron_WA(s.sys, s.net);
  CHECK(distributed_observability(F, build_DH(s.sys, s.net)));

  NumericSystem failed = s.sys;
  failed.sensor_states.erase("a1");
  CHECK_FALSE(distributed_observability(F, build_DH(failed, s.net)));

  Eigen::MatrixXd I = Eigen::MatrixXd::Identity(F.rows(), F.cols());
  CHECK(distributed_observability(F, I));
}

TEST_CASE("observability is monotone in D_H support") {
  for (std::uint64_t seed : {21ull, 22ull, 23ull, 24ull}) {
    Setup s = make_setup(seed);
    Eigen::MatrixXd F = kron_WA(s.sys, s.net);
    if (!distributed_observability(F, build_DH(s.sys, s.net))) continue;
    // Add a measurement to every sensor: stays true.
    NumericSystem more = s.sys;
    for (auto& [id, states] : more.sensor_states)
      if (std::find(states.begin(), states.end(), 0) == states.end())
        states.push_back(0);
    CHECK(distributed_observability(F, build_DH(more, s.net)));
  }
}

TEST_CASE("scalar gain closed loop") {
  SystemPattern p;
  p.n = 1;
  p.edges = {{1, 1}};
  p.sensors["s"] = {1};
  NumericSystem sys = instantiate(p, 1.1, 2);
  EstimatorNetwork net = build_network(sys, classify_sensors(p), 2);
  GainMatrix k;
  k.blocks = {Eigen::MatrixXd::Constant(1, 1, 0.5)};
  ErrorDynamics dyn = error_dynamics(sys, net, k);
  CHECK(dyn.spectral_radius == doctest::Approx(0.55).epsilon(1e-12));

  GainMatrix designed = design_gain(sys, net);
  CHECK(error_dynamics(sys, net, designed).spectral_radius < 0.98);
}

TEST_CASE("design_gain certifies rho < 0.98 and is gated by observability") {
  Setup s = make_setup(12);
  GainMatrix gain = design_gain(s.sys, s.net);
  ErrorDynamics dyn = error_dynamics(s.sys, s.net, gain);
  CHECK(dyn.spectral_radius < 0.98);
  // Certificate agrees with the independent power estimate.
  CHECK(std::abs(spectral_radius_power(dyn.closed_loop) - dyn.spectral_radius) < 0.02);

  NumericSystem failed = s.sys;
  failed.sensor_states.erase("a1");
  CHECK_THROWS_AS(design_gain(failed, s.net), ValidationError);
}

TEST_CASE("estimator step: zero error stays zero without noise") {
  Setup s = make_setup(14);
  GainMatrix gain = design_gain(s.sys, s.net);
  Rng rng(99);
  Eigen::VectorXd x(s.sys.n);
  for (int i = 0; i < s.sys.n; ++i) x(i) = rng.normal();
  Eigen::VectorXd xn = s.sys.A * x;
  std::map<std::string, Eigen::VectorXd> y;
  for (const auto& [id, states] : s.sys.sensor_states) {
    Eigen::VectorXd yj(states.size());
    for (size_t r = 0; r < states.size(); ++r) yj(r) = xn(states[r]);
    y[id] = yj;
  }
  std::vector<Eigen::VectorXd> est(3, x);  // exact estimates
  std::vector<Eigen::VectorXd> next = estimator_step(est, y, s.sys, s.net, gain);
  for (const auto& e : next) CHECK((xn - e).norm() < 1e-12);
}

TEST_CASE("noise-free error recursion equals the closed-loop matrix powers") {
  int instances = 0;
  for (std::uint64_t s = 0; instances < 12 && s < 200; ++s) {
    SystemPattern p = oracle::random_pattern(2 + s % 5, 0.35, 46000 + s, false);
    int k = 0;
    for (const auto& r : minimal_sensor_placement(p))
      p.sensors["s" + std::to_string(++k)] = {r.state + 1};
    if (p.sensors.size() > 4) continue;
    NumericSystem sys;
    try {
      sys = instantiate(p, 1.05, s);
    } catch (const ValidationError&) {
      continue;  // nilpotent pattern
    }
    EstimatorNetwork net = build_network(sys, classify_sensors(p), s);
    Eigen::MatrixXd F = kron_WA(sys, net);
    Eigen::MatrixXd DH = build_DH(sys, net);
    if (!distributed_observability(F, DH)) continue;
    GainMatrix gain;
    try {
      gain = design_gain(sys, net);
    } catch (const SynthesisError&) {
      continue;
    }
    ++instances;

    int m = static_cast<int>(net.sensor_order.size());
    int n = sys.n;
    Rng rng(1234 + s);
    Eigen::VectorXd x(n);
    for (int i = 0; i < n; ++i) x(i) = rng.normal();
    std::vector<Eigen::VectorXd> est(m, Eigen::VectorXd::Zero(n));
    Eigen::VectorXd stacked(m * n);
    for (int i = 0; i < m; ++i) stacked.segment(i * n, n) = x;  // e0 = x - 0

    Eigen::MatrixXd closed = error_dynamics(sys, net, gain).closed_loop;
    for (int step = 0; step < 12; ++step) {
      x = (sys.A * x).eval();
      std::map<std::string, Eigen::VectorXd> y;
      for (const auto& [id, states] : sys.sensor_states) {
        Eigen::VectorXd yj(states.size());
        for (size_t r = 0; r < states.size(); ++r) yj(r) = x(states[r]);
        y[id] = yj;
      }
      est = estimator_step(est, y, sys, net, gain);
      stacked = (closed * stacked).eval();
      for (int i = 0; i < m; ++i) {
        Eigen::VectorXd err = x - est[i];
        double scale = std::max(1.0, stacked.norm());
        CHECK((err - stacked.segment(i * n, n)).norm() / scale < 1e-8);
      }
    }
  }
  CHECK(instances >= 10);
}

TEST_CASE("numeric serialization is stable") {
  Setup s = make_setup(17);
  GainMatrix gain = design_gain(s.sys, s.net);
  CHECK(serialize_numeric(s.sys, s.net, gain) == serialize_numeric(s.sys, s.net, gain));
}
