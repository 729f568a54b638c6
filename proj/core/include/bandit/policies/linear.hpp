#pragma once

#include <Eigen/Core>
#include <vector>

#include "bandit/rng.hpp"

namespace bandit {

// Gaussian linear model: coefficient mean m and covariance P, updated by
// recursive least squares with unit observation noise.
struct LinearGaussian {
  Eigen::VectorXd m;
  Eigen::MatrixXd P;
};

// Logistic model with diagonal Laplace posterior: mean m, per-coordinate
// precision q.
struct LinearLogistic {
  Eigen::VectorXd m;
  Eigen::VectorXd q;
};

LinearGaussian make_gaussian(std::size_t d, double prior_variance);
LinearLogistic make_logistic(std::size_t d, double prior_variance);

double rls_predict(const LinearGaussian& model, const Eigen::VectorXd& x);
LinearGaussian rls_update(LinearGaussian model, const Eigen::VectorXd& x, double y);

struct Observation {
  Eigen::VectorXd x;
  double y = 0.0;  // label in {0,1}
};

double sigmoid(double z);
double blr_predict_proba(const LinearLogistic& model, const Eigen::VectorXd& x);
// Finds the penalized-likelihood mode by damped Newton (gradient norm 1e-6,
// at most 500 iterations), sets m to it, and adds sum_i x_ij^2 p_i (1 - p_i)
// to each q_j.
LinearLogistic blr_update(LinearLogistic model, const std::vector<Observation>& batch);

// The objective blr_update minimizes and its gradient, exposed so tests can
// finite-difference them.
double blr_objective(const LinearLogistic& prior, const std::vector<Observation>& batch,
                     const Eigen::VectorXd& w);
Eigen::VectorXd blr_gradient(const LinearLogistic& prior, const std::vector<Observation>& batch,
                             const Eigen::VectorXd& w);

// Disjoint per-arm models sharing one context dimension.
struct RLSState {
  std::vector<LinearGaussian> arms;
};
struct BLRState {
  std::vector<LinearLogistic> arms;
};

RLSState make_rls_state(std::size_t n_arms, std::size_t d, double prior_variance);
BLRState make_blr_state(std::size_t n_arms, std::size_t d, double prior_variance);

// One posterior score draw per arm. The draw is taken directly in score
// space, score_a ~ N(m_a' x, x' P_a x), which has exactly the law of sampling
// coefficients and then scoring, at one gaussian per arm instead of d.
std::vector<double> ts_scores(const RLSState& state, const Eigen::VectorXd& x, Rng& rng);
std::vector<double> ts_scores(const BLRState& state, const Eigen::VectorXd& x, Rng& rng);

// Thompson selection: argmax of the sampled scores, ties to smallest index.
// argmax sigma(s) = argmax s, so the logistic link needs no evaluation here.
std::size_t linear_ts_sample(const RLSState& state, const Eigen::VectorXd& x, Rng& rng);
std::size_t linear_ts_sample(const BLRState& state, const Eigen::VectorXd& x, Rng& rng);

// Posterior means per arm, for exploit-only serving and epsilon-greedy.
std::vector<double> mean_scores(const RLSState& state, const Eigen::VectorXd& x);
std::vector<double> mean_scores(const BLRState& state, const Eigen::VectorXd& x);

// Full coefficient draw, needed when one shared model scores a combinatorial
// space and the argmax runs as a search over slots.
Eigen::VectorXd sample_weights(const LinearGaussian& model, Rng& rng);
Eigen::VectorXd sample_weights(const LinearLogistic& model, Rng& rng);

// Inverse gap weighting over point scores: with b the best index,
// p_a = 1 / (K + gamma_t (s_b - s_a)) for a != b and p_b takes the remainder.
std::vector<double> igw_distribution(const std::vector<double>& scores, double gamma_t);

}  // namespace bandit
