#include "obsrec/numeric.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "json.hpp"
#include "obsrec/rng.hpp"

namespace obsrec {

Eigen::MatrixXd NumericSystem::H(const std::string& id) const {
  const std::vector<int>& states = sensor_states.at(id);
  Eigen::MatrixXd h = Eigen::MatrixXd::Zero(states.size(), n);
  for (size_t r = 0; r < states.size(); ++r) h(r, states[r]) = 1.0;
  return h;
}

Eigen::MatrixXd NumericSystem::HtH(const std::string& id) const {
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(n, n);
  for (int s : sensor_states.at(id)) b(s, s) += 1.0;
  return b;
}

int EstimatorNetwork::index_of(const std::string& id) const {
  for (size_t i = 0; i < sensor_order.size(); ++i)
    if (sensor_order[i] == id) return static_cast<int>(i);
  throw ValidationError("sensor '" + id + "' is not in the network");
}

Eigen::MatrixXd GainMatrix::assembled() const {
  int n = blocks.empty() ? 0 : static_cast<int>(blocks.front().rows());
  int m = static_cast<int>(blocks.size());
  Eigen::MatrixXd k = Eigen::MatrixXd::Zero(m * n, m * n);
  for (int i = 0; i < m; ++i) k.block(i * n, i * n, n, n) = blocks[i];
  return k;
}

double spectral_radius(const Eigen::MatrixXd& M) {
  if (M.rows() == 0) return 0.0;
  Eigen::EigenSolver<Eigen::MatrixXd> es(M, /*computeEigenvectors=*/false);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

double spectral_radius_power(const Eigen::MatrixXd& M, int squarings) {
  // Gelfand: rho = lim ||M^(2^t)||^(1/2^t), normalized squaring avoids
  // overflow for unstable matrices.
  double norm = M.norm();
  if (norm == 0.0) return 0.0;
  Eigen::MatrixXd B = M / norm;
  double log_scale = std::log(norm);
  double power = 1.0;
  for (int t = 0; t < squarings; ++t) {
    B = (B * B).eval();
    double nb = B.norm();
    if (nb == 0.0) return 0.0;
    B /= nb;
    log_scale = 2.0 * log_scale + std::log(nb);
    power *= 2.0;
  }
  return std::exp(log_scale / power);
}

NumericSystem instantiate(const SystemPattern& pattern, double target_rho,
                          std::uint64_t seed) {
  pattern.validate();
  if (target_rho <= 0.0) throw ValidationError("target spectral radius must be positive");
  Rng rng(seed);
  NumericSystem sys;
  sys.n = pattern.n;
  sys.A = Eigen::MatrixXd::Zero(sys.n, sys.n);
  for (const auto& [j, i] : pattern.edges) {
    double mag = rng.uniform(0.1, 1.0);
    sys.A(i - 1, j - 1) = rng.coin() ? mag : -mag;
  }
  // Rescale every strongly connected block with a cycle to the target radius,
  // so rho(A) = target and no essential mode hides below 1 when target > 1.
  SCCPartition part = scc_partition(pattern);
  bool any_cycle = false;
  for (const auto& comp : part.components) {
    const int c = static_cast<int>(comp.size());
    for (int pass = 0; pass < 2; ++pass) {  // second pass tightens to ~1e-15
      Eigen::MatrixXd block(c, c);
      for (int r = 0; r < c; ++r)
        for (int q = 0; q < c; ++q) block(r, q) = sys.A(comp[r], comp[q]);
      double rho = spectral_radius(block);
      if (rho <= 0.0) break;  // acyclic component, nothing to scale
      any_cycle = true;
      double f = target_rho / rho;
      for (int r = 0; r < c; ++r)
        for (int q = 0; q < c; ++q) sys.A(comp[r], comp[q]) *= f;
    }
  }
  if (!any_cycle)
    throw ValidationError("pattern has spectral radius 0; cannot rescale to target");
  for (const auto& [id, states] : pattern.sensors) {
    std::vector<int>& v = sys.sensor_states[id];
    for (int s : states) v.push_back(s - 1);
  }
  return sys;
}

EstimatorNetwork build_network(const NumericSystem& system,
                               const SensorClassification& classification,
                               std::uint64_t seed) {
  EstimatorNetwork net;
  for (const auto& [id, label] : classification.labels) net.sensor_order.push_back(id);
  std::sort(net.sensor_order.begin(), net.sensor_order.end());
  int m = static_cast<int>(net.sensor_order.size());
  if (m == 0) throw ValidationError("cannot build a network with zero sensors");
  for (const std::string& id : net.sensor_order)
    if (classification.labels.at(id).type == SensorType::alpha)
      net.alpha_sensors.push_back(id);

  Rng rng(seed);
  net.W = Eigen::MatrixXd::Zero(m, m);
  for (int i = 0; i < m; ++i) {
    net.W(i, i) = rng.uniform(0.5, 1.5);
    if (m > 1) net.W(i, (i + 1) % m) = rng.uniform(0.5, 1.5);
    net.W.row(i) /= net.W.row(i).sum();
  }
  return net;
}

Eigen::MatrixXd kron_WA(const NumericSystem& system, const EstimatorNetwork& network) {
  int m = static_cast<int>(network.sensor_order.size());
  int n = system.n;
  Eigen::MatrixXd F(m * n, m * n);
  for (int i = 0; i < m; ++i)
    for (int j = 0; j < m; ++j) F.block(i * n, j * n, n, n) = network.W(i, j) * system.A;
  return F;
}

namespace {

// Measurement neighborhood of sensor i: itself plus every alpha hub, kept to
// sensors that still measure (present in sensor_states).
std::vector<std::string> alpha_neighborhood(const NumericSystem& system,
                                            const EstimatorNetwork& network,
                                            const std::string& self) {
  std::vector<std::string> hood;
  if (system.sensor_states.count(self)) hood.push_back(self);
  for (const std::string& a : network.alpha_sensors)
    if (a != self && system.sensor_states.count(a)) hood.push_back(a);
  return hood;
}

}  // namespace

Eigen::MatrixXd build_DH(const NumericSystem& system, const EstimatorNetwork& network) {
  int m = static_cast<int>(network.sensor_order.size());
  int n = system.n;
  Eigen::MatrixXd dh = Eigen::MatrixXd::Zero(m * n, m * n);
  for (int i = 0; i < m; ++i)
    for (const std::string& j : alpha_neighborhood(system, network, network.sensor_order[i]))
      dh.block(i * n, i * n, n, n) += system.HtH(j);
  return dh;
}

namespace {

int numeric_rank(const Eigen::MatrixXd& M, double threshold_scale) {
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M);
  if (svd.singularValues().size() == 0) return 0;
  double tol = threshold_scale * std::numeric_limits<double>::epsilon() *
               svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++rank;
  return rank;
}

int numeric_rank_c(const Eigen::MatrixXcd& M, double threshold_scale) {
  Eigen::JacobiSVD<Eigen::MatrixXcd> svd(M);
  if (svd.singularValues().size() == 0) return 0;
  double tol = threshold_scale * std::numeric_limits<double>::epsilon() *
               svd.singularValues()(0);
  int rank = 0;
  for (int i = 0; i < svd.singularValues().size(); ++i)
    if (svd.singularValues()(i) > tol) ++rank;
  return rank;
}

}  // namespace

bool distributed_observability(const Eigen::MatrixXd& WA, const Eigen::MatrixXd& DH) {
  const int mn = static_cast<int>(WA.rows());
  if (WA.cols() != mn || DH.rows() != mn || DH.cols() != mn)
    throw ValidationError("dimension mismatch between W (x) A and D_H");
  if (mn > 400)
    throw ValidationError("mn > 400: use the structural test at this scale");

  // Observability matrix rank. Blocks are renormalized so an unstable WA
  // cannot drown early blocks in the SVD threshold.
  Eigen::MatrixXd obs(mn * mn, mn);
  Eigen::MatrixXd block = DH;
  for (int k = 0; k < mn; ++k) {
    double norm = block.norm();
    obs.middleRows(k * mn, mn) = norm > 0 ? (block / norm).eval() : block;
    block = (block * WA).eval();
  }
  bool rank_full = numeric_rank(obs, mn) == mn;

  // PBH at every eigenvalue of WA.
  Eigen::EigenSolver<Eigen::MatrixXd> es(WA, /*computeEigenvectors=*/false);
  bool pbh_full = true;
  for (int k = 0; k < mn; ++k) {
    std::complex<double> lambda = es.eigenvalues()(k);
    Eigen::MatrixXcd pencil(2 * mn, mn);
    pencil.topRows(mn) =
        WA.cast<std::complex<double>>() - lambda * Eigen::MatrixXcd::Identity(mn, mn);
    pencil.bottomRows(mn) = DH.cast<std::complex<double>>();
    if (numeric_rank_c(pencil, mn) < mn) {
      pbh_full = false;
      break;
    }
  }

  if (rank_full != pbh_full)
    throw InternalError("observability-matrix rank and PBH test disagree");
  return rank_full;
}

namespace {

// Stationary prediction-form Riccati recursion; converges for an observable
// pair with Q = R = I.
Eigen::MatrixXd stationary_kalman_gain(const Eigen::MatrixXd& F, const Eigen::MatrixXd& C) {
  const int mn = static_cast<int>(F.rows());
  Eigen::MatrixXd P = Eigen::MatrixXd::Identity(mn, mn);
  Eigen::MatrixXd K;
  for (int it = 0; it < 2000; ++it) {
    Eigen::MatrixXd S = C * P * C.transpose() + Eigen::MatrixXd::Identity(mn, mn);
    K = P * C.transpose() * S.inverse();
    Eigen::MatrixXd Ppost = (Eigen::MatrixXd::Identity(mn, mn) - K * C) * P;
    Eigen::MatrixXd Pnext = F * Ppost * F.transpose() + Eigen::MatrixXd::Identity(mn, mn);
    Pnext = 0.5 * (Pnext + Pnext.transpose()).eval();
    double delta = (Pnext - P).norm() / std::max(1.0, P.norm());
    P = Pnext;
    if (delta < 1e-10) break;
  }
  Eigen::MatrixXd S = C * P * C.transpose() + Eigen::MatrixXd::Identity(mn, mn);
  return P * C.transpose() * S.inverse();
}

}  // namespace

GainMatrix design_gain(const NumericSystem& system, const EstimatorNetwork& network,
                       double margin, int budget) {
  const int n = system.n;
  const int m = static_cast<int>(network.sensor_order.size());
  Eigen::MatrixXd F = kron_WA(system, network);
  Eigen::MatrixXd C = build_DH(system, network);
  if (!distributed_observability(F, C))
    throw ValidationError("(W (x) A, D_H) is not observable; no stabilizing gain exists");

  Eigen::MatrixXd K_full = stationary_kalman_gain(F, C);

  int evals = 0;
  auto rho_of = [&](const std::vector<Eigen::MatrixXd>& shapes,
                    const std::vector<double>& c) {
    ++evals;
    Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m * n, m * n);
    for (int i = 0; i < m; ++i) K.block(i * n, i * n, n, n) = c[i] * shapes[i];
    return spectral_radius(F - K * C * F);
  };

  const double grid[] = {0.3, 0.5, 0.7, 0.85, 1.15, 1.4, 2.0, 3.0};
  double best_rho_overall = std::numeric_limits<double>::infinity();
  std::vector<Eigen::MatrixXd> best_shapes;
  std::vector<double> best_c;

  auto descend = [&](std::vector<Eigen::MatrixXd> shapes, std::vector<double> c) {
    double best = rho_of(shapes, c);
    bool improved = true;
    while (improved && evals < budget) {
      improved = false;
      for (int i = 0; i < m && evals < budget; ++i) {
        double base = c[i];
        for (double g : grid) {
          if (evals >= budget) break;
          std::vector<double> cand = c;
          cand[i] = base * g;
          double r = rho_of(shapes, cand);
          if (r < best - 1e-9) {
            best = r;
            c = cand;
            improved = true;
          }
        }
      }
    }
    if (best < best_rho_overall) {
      best_rho_overall = best;
      best_shapes = std::move(shapes);
      best_c = std::move(c);
    }
  };

  std::vector<Eigen::MatrixXd> kalman_shapes(m);
  for (int i = 0; i < m; ++i) kalman_shapes[i] = K_full.block(i * n, i * n, n, n);
  descend(kalman_shapes, std::vector<double>(m, 1.0));

  if (best_rho_overall >= 1.0 - margin && evals < budget) {
    // Joseph-form Riccati iteration with the gain truncated to block diagonal
    // inside the recursion, so the covariance adapts to the truncation.
    const int mn = m * n;
    Eigen::MatrixXd I = Eigen::MatrixXd::Identity(mn, mn);
    Eigen::MatrixXd P = I;
    Eigen::MatrixXd Kbd = Eigen::MatrixXd::Zero(mn, mn);
    for (int it = 0; it < 500; ++it) {
      Eigen::MatrixXd S = C * P * C.transpose() + I;
      Eigen::MatrixXd K = P * C.transpose() * S.inverse();
      Kbd.setZero();
      for (int i = 0; i < m; ++i)
        Kbd.block(i * n, i * n, n, n) = K.block(i * n, i * n, n, n);
      Eigen::MatrixXd IKC = I - Kbd * C;
      Eigen::MatrixXd Ppost = IKC * P * IKC.transpose() + Kbd * Kbd.transpose();
      Eigen::MatrixXd Pnext = F * Ppost * F.transpose() + I;
      Pnext = 0.5 * (Pnext + Pnext.transpose()).eval();
      double delta = (Pnext - P).norm() / std::max(1.0, P.norm());
      P = Pnext;
      if (delta < 1e-10 || P.norm() > 1e14) break;
    }
    std::vector<Eigen::MatrixXd> projected_shapes(m);
    for (int i = 0; i < m; ++i) projected_shapes[i] = Kbd.block(i * n, i * n, n, n);
    descend(projected_shapes, std::vector<double>(m, 1.0));
  }

  if (best_rho_overall >= 1.0 - margin && evals < budget) {
    std::vector<Eigen::MatrixXd> identity_shapes(m, Eigen::MatrixXd::Identity(n, n));
    descend(identity_shapes, std::vector<double>(m, 0.5));
  }

  if (best_rho_overall >= 1.0 - margin)
    throw SynthesisError("gain synthesis budget exhausted; best spectral radius " +
                             std::to_string(best_rho_overall),
                         best_rho_overall);

  // Secondary refinement: among the radius-feasible scalars, reduce the
  // stationary error power the noises inject through the loop. The error
  // recursion is e_k = M e_{k-1} + (I - K D_H)(1 (x) v_k) - K eta_k, so the
  // steady-state covariance solves P = M P M^T + Q with
  //   Q = sv^2 (I - K D_H) (11^T (x) I) (I - K D_H)^T + sr^2 K G K^T,
  // G(i,i') summing H_j^T H_j over shared measurement neighborhoods.
  const double sv2 = system.sigma_v * system.sigma_v;
  const double sr2 = system.sigma_r * system.sigma_r;
  if (sv2 + sr2 > 0.0) {
    Eigen::MatrixXd OnesI(m * n, m * n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        OnesI.block(i * n, j * n, n, n) = Eigen::MatrixXd::Identity(n, n);
    std::vector<std::vector<std::string>> hoods(m);
    for (int i = 0; i < m; ++i)
      hoods[i] = alpha_neighborhood(system, network, network.sensor_order[i]);
    Eigen::MatrixXd G = Eigen::MatrixXd::Zero(m * n, m * n);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j)
        for (const std::string& a : hoods[i])
          if (std::find(hoods[j].begin(), hoods[j].end(), a) != hoods[j].end())
            G.block(i * n, j * n, n, n) += system.HtH(a);

    auto trace_of = [&](const std::vector<double>& c) {
      ++evals;
      Eigen::MatrixXd K = Eigen::MatrixXd::Zero(m * n, m * n);
      for (int i = 0; i < m; ++i) K.block(i * n, i * n, n, n) = c[i] * best_shapes[i];
      Eigen::MatrixXd M = F - K * C * F;
      if (spectral_radius(M) >= 1.0 - margin)
        return std::numeric_limits<double>::infinity();
      Eigen::MatrixXd IKC = Eigen::MatrixXd::Identity(m * n, m * n) - K * C;
      Eigen::MatrixXd P = sv2 * IKC * OnesI * IKC.transpose() +
                          sr2 * K * G * K.transpose();
      Eigen::MatrixXd B = M;
      for (int t = 0; t < 12; ++t) {  // doubling sum of M^k Q M^kT, 4096 terms
        P = (P + B * P * B.transpose()).eval();
        B = (B * B).eval();
      }
      return P.trace();
    };

    double best_trace = trace_of(best_c);
    bool improved = std::isfinite(best_trace);
    while (improved && evals < budget) {
      improved = false;
      for (int i = 0; i < m && evals < budget; ++i) {
        double base = best_c[i];
        for (double g : grid) {
          if (evals >= budget) break;
          std::vector<double> cand = best_c;
          cand[i] = base * g;
          double tr = trace_of(cand);
          if (tr < best_trace * (1.0 - 1e-6)) {
            best_trace = tr;
            best_c = cand;
            improved = true;
          }
        }
      }
    }
  }

  GainMatrix gain;
  gain.blocks.resize(m);
  for (int i = 0; i < m; ++i) gain.blocks[i] = best_c[i] * best_shapes[i];

  // Certificate recheck through two independent routes.
  Eigen::MatrixXd closed = F - gain.assembled() * C * F;
  double rho_eig = spectral_radius(closed);
  double rho_pow = spectral_radius_power(closed);
  if (rho_eig >= 1.0 - margin || rho_pow >= 1.0 - margin / 2.0 ||
      std::abs(rho_eig - rho_pow) > 0.02 * std::max(1.0, rho_eig))
    throw InternalError("gain certificate failed recheck: eig " + std::to_string(rho_eig) +
                        " vs power " + std::to_string(rho_pow));
  return gain;
}

ErrorDynamics error_dynamics(const NumericSystem& system, const EstimatorNetwork& network,
                             const GainMatrix& gain) {
  ErrorDynamics dyn;
  Eigen::MatrixXd F = kron_WA(system, network);
  dyn.closed_loop = F - gain.assembled() * build_DH(system, network) * F;
  dyn.spectral_radius = spectral_radius(dyn.closed_loop);
  return dyn;
}

std::vector<Eigen::VectorXd> estimator_step(
    const std::vector<Eigen::VectorXd>& estimates,
    const std::map<std::string, Eigen::VectorXd>& measurements,
    const NumericSystem& system, const EstimatorNetwork& network, const GainMatrix& gain) {
  const int m = static_cast<int>(network.sensor_order.size());
  if (static_cast<int>(estimates.size()) != m)
    throw ValidationError("expected one estimate per network sensor");

  std::vector<Eigen::VectorXd> next(m);
  for (int i = 0; i < m; ++i) {
    Eigen::VectorXd pred = Eigen::VectorXd::Zero(system.n);
    for (int j = 0; j < m; ++j)
      if (network.W(i, j) != 0.0) pred += network.W(i, j) * (system.A * estimates[j]);

    Eigen::VectorXd innovation = Eigen::VectorXd::Zero(system.n);
    for (const std::string& j :
         alpha_neighborhood(system, network, network.sensor_order[i])) {
      auto it = measurements.find(j);
      if (it == measurements.end()) continue;  // sensor failed this step
      Eigen::MatrixXd Hj = system.H(j);
      innovation += Hj.transpose() * (it->second - Hj * pred);
    }
    next[i] = pred + gain.blocks[i] * innovation;
  }
  return next;
}

std::string serialize_numeric(const NumericSystem& system, const EstimatorNetwork& network,
                              const GainMatrix& gain, int indent) {
  nlohmann::json doc;
  doc["n"] = system.n;
  auto matrix_json = [](const Eigen::MatrixXd& M) {
    nlohmann::json j;
    j["rows"] = M.rows();
    j["cols"] = M.cols();
    j["data"] = nlohmann::json::array();  // row-major
    for (int r = 0; r < M.rows(); ++r)
      for (int c = 0; c < M.cols(); ++c) j["data"].push_back(M(r, c));
    return j;
  };
  doc["A"] = matrix_json(system.A);
  doc["W"] = matrix_json(network.W);
  doc["sensor_order"] = network.sensor_order;
  doc["alpha_sensors"] = network.alpha_sensors;
  doc["gain_blocks"] = nlohmann::json::array();
  for (const auto& b : gain.blocks) doc["gain_blocks"].push_back(matrix_json(b));
  return doc.dump(indent);
}

}  // namespace obsrec
