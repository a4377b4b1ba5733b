#ifndef OBSREC_NUMERIC_HPP
#define OBSREC_NUMERIC_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "obsrec/structural.hpp"

namespace obsrec {

class SynthesisError : public std::runtime_error {
 public:
  SynthesisError(const std::string& what, double best_rho)
      : std::runtime_error(what), best_rho(best_rho) {}
  double best_rho;
};

// Numeric realization of a SystemPattern. Each sensor's H_j is a stack of
// indicator rows, one per measured state.
struct NumericSystem {
  int n = 0;
  Eigen::MatrixXd A;
  std::map<std::string, std::vector<int>> sensor_states;  // id -> 0-based states
  double sigma_v = 0.25;
  double sigma_r = 0.25;

  Eigen::MatrixXd H(const std::string& id) const;   // rows x n indicator matrix
  Eigen::MatrixXd HtH(const std::string& id) const; // n x n, sum of e_s e_s^T
};

// Prediction-fusion network over the alive sensors plus the hub sets. W is
// row-stochastic with ring + self-loop support, so it is strongly connected.
struct EstimatorNetwork {
  std::vector<std::string> sensor_order;             // row/col order of W
  Eigen::MatrixXd W;
  std::vector<std::string> alpha_sensors;            // hub members

  int index_of(const std::string& id) const;
};

struct GainMatrix {
  std::vector<Eigen::MatrixXd> blocks;               // one n x n block per sensor
  Eigen::MatrixXd assembled() const;                 // mn x mn block diagonal
};

struct ErrorDynamics {
  Eigen::MatrixXd closed_loop;                       // (I - K D_H)(W (x) A)
  double spectral_radius = 0.0;
};

double spectral_radius(const Eigen::MatrixXd& M);

// Independent coarse estimate via the norm of repeated squarings; used to
// cross-check gain certificates.
double spectral_radius_power(const Eigen::MatrixXd& M, int squarings = 13);

// Draw nonzero entries of A i.i.d. uniform on [-1,-0.1] U [0.1,1], then scale
// every cyclic strongly connected block to spectral radius target_rho (hence
// rho(A) = target_rho, and every non-nilpotent mode is unstable when the
// target exceeds 1).
NumericSystem instantiate(const SystemPattern& pattern, double target_rho,
                          std::uint64_t seed);

// Alive sensors from the classification; W support = directed ring +
// self-loops with random positive weights, rows normalized.
EstimatorNetwork build_network(const NumericSystem& system,
                               const SensorClassification& classification,
                               std::uint64_t seed);

Eigen::MatrixXd kron_WA(const NumericSystem& system, const EstimatorNetwork& network);

// Block i sums H_j^T H_j over the measurement neighborhood {i} U alpha set.
Eigen::MatrixXd build_DH(const NumericSystem& system, const EstimatorNetwork& network);

// Rank test of the observability matrix of (W (x) A, D_H) with a mandatory
// PBH cross-check at every eigenvalue. Guard: mn <= 400.
bool distributed_observability(const Eigen::MatrixXd& WA, const Eigen::MatrixXd& DH);

// Block-diagonal gain with certified rho(closed loop) < 1 - margin. Shape per
// block comes from the diagonal truncation of the stationary Kalman gain of
// the stacked pair; per-sensor scalars are tuned by coordinate descent over a
// multiplicative grid (budget 5000 spectral-radius evaluations). Once the
// radius constraint holds, the scalars keep descending on the stationary
// error power (Lyapunov trace) without leaving the feasible set.
GainMatrix design_gain(const NumericSystem& system, const EstimatorNetwork& network,
                       double margin = 0.02, int budget = 5000);

ErrorDynamics error_dynamics(const NumericSystem& system, const EstimatorNetwork& network,
                             const GainMatrix& gain);

// One estimator step: prediction fusion over G_beta, then measurement fusion
// over the hub neighborhoods. `measurements` holds y_j for sensors that
// produced one this step (failed sensors are simply absent).
std::vector<Eigen::VectorXd> estimator_step(
    const std::vector<Eigen::VectorXd>& estimates,
    const std::map<std::string, Eigen::VectorXd>& measurements,
    const NumericSystem& system, const EstimatorNetwork& network,
    const GainMatrix& gain);

std::string serialize_numeric(const NumericSystem& system, const EstimatorNetwork& network,
                              const GainMatrix& gain, int indent = 2);

}  // namespace obsrec

#endif
