#include "bandit/policies/linear.hpp"

#include <Eigen/Cholesky>
#include <cmath>

#include "bandit/errors.hpp"
#include "bandit/policies/mab.hpp"

namespace bandit {
namespace {

void check_dim(const Eigen::VectorXd& x, Eigen::Index d) {
  if (x.size() != d) {
    fail(Errc::DimensionMismatch,
         "context has dim " + std::to_string(x.size()) + ", model expects " + std::to_string(d));
  }
  if (!x.allFinite()) fail(Errc::NonFiniteInput, "context vector has non-finite entries");
}

// log(1 + exp(-z)) without overflow for large |z|.
double log1p_exp_neg(double z) {
  if (z > 0.0) return std::log1p(std::exp(-z));
  return -z + std::log1p(std::exp(z));
}

}  // namespace

double sigmoid(double z) { return z >= 0.0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

LinearGaussian make_gaussian(std::size_t d, double prior_variance) {
  if (!(prior_variance > 0.0)) fail(Errc::OutOfRange, "prior_variance must be > 0");
  LinearGaussian model;
  model.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  model.P = prior_variance * Eigen::MatrixXd::Identity(static_cast<Eigen::Index>(d),
                                                       static_cast<Eigen::Index>(d));
  return model;
}

LinearLogistic make_logistic(std::size_t d, double prior_variance) {
  if (!(prior_variance > 0.0)) fail(Errc::OutOfRange, "prior_variance must be > 0");
  LinearLogistic model;
  model.m = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(d));
  model.q = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(d), 1.0 / prior_variance);
  return model;
}

double rls_predict(const LinearGaussian& model, const Eigen::VectorXd& x) {
  check_dim(x, model.m.size());
  return model.m.dot(x);
}

LinearGaussian rls_update(LinearGaussian model, const Eigen::VectorXd& x, double y) {
  check_dim(x, model.m.size());
  if (!std::isfinite(y)) fail(Errc::NonFiniteInput, "target is not finite");
  Eigen::VectorXd Px = model.P * x;
  double denom = 1.0 + x.dot(Px);
  Eigen::VectorXd k = Px / denom;
  model.m += k * (y - model.m.dot(x));
  model.P -= k * Px.transpose();
  model.P = ((model.P + model.P.transpose()) * 0.5).eval();
  return model;
}

double blr_predict_proba(const LinearLogistic& model, const Eigen::VectorXd& x) {
  check_dim(x, model.m.size());
  return sigmoid(model.m.dot(x));
}

double blr_objective(const LinearLogistic& prior, const std::vector<Observation>& batch,
                     const Eigen::VectorXd& w) {
  Eigen::VectorXd delta = w - prior.m;
  double value = 0.5 * delta.dot(prior.q.cwiseProduct(delta));
  for (const Observation& obs : batch) {
    double sign = obs.y == 1.0 ? 1.0 : -1.0;
    value += log1p_exp_neg(sign * w.dot(obs.x));
  }
  return value;
}

Eigen::VectorXd blr_gradient(const LinearLogistic& prior, const std::vector<Observation>& batch,
                             const Eigen::VectorXd& w) {
  Eigen::VectorXd g = prior.q.cwiseProduct(w - prior.m);
  for (const Observation& obs : batch) {
    double sign = obs.y == 1.0 ? 1.0 : -1.0;
    g -= sign * sigmoid(-sign * w.dot(obs.x)) * obs.x;
  }
  return g;
}

LinearLogistic blr_update(LinearLogistic model, const std::vector<Observation>& batch) {
  if (batch.empty()) fail(Errc::EmptyBatch, "blr_update needs at least one observation");
  const Eigen::Index d = model.m.size();
  for (const Observation& obs : batch) {
    check_dim(obs.x, d);
    if (obs.y != 0.0 && obs.y != 1.0) {
      fail(Errc::NonBinaryLabel, "blr_update needs labels in {0,1}, got " + std::to_string(obs.y));
    }
  }

  const Eigen::Index b = static_cast<Eigen::Index>(batch.size());
  Eigen::MatrixXd X(b, d);
  Eigen::VectorXd sign(b);
  for (Eigen::Index i = 0; i < b; ++i) {
    X.row(i) = batch[static_cast<std::size_t>(i)].x.transpose();
    sign[i] = batch[static_cast<std::size_t>(i)].y == 1.0 ? 1.0 : -1.0;
  }

  Eigen::VectorXd w = model.m;
  double value = blr_objective(model, batch, w);
  constexpr int kMaxIter = 500;
  constexpr double kTol = 1e-6;
  bool converged = false;
  for (int iter = 0; iter < kMaxIter; ++iter) {
    Eigen::VectorXd g = blr_gradient(model, batch, w);
    if (g.norm() <= kTol) {
      converged = true;
      break;
    }
    // Newton direction for H = diag(q) + X' C X, with C the per-row logistic
    // curvature. When the batch is smaller than d, Woodbury turns the d x d
    // solve into a b x b one.
    Eigen::VectorXd z = X * w;
    Eigen::VectorXd c(b);
    for (Eigen::Index i = 0; i < b; ++i) {
      double p = sigmoid(z[i]);
      c[i] = std::max(p * (1.0 - p), 1e-12);
    }
    Eigen::VectorXd step;
    if (b < d) {
      Eigen::VectorXd dinv_g = g.cwiseQuotient(model.q);
      Eigen::MatrixXd Xdinv = X * model.q.cwiseInverse().asDiagonal();
      Eigen::MatrixXd S = Xdinv * X.transpose();
      S.diagonal() += c.cwiseInverse();
      Eigen::VectorXd t = S.ldlt().solve(X * dinv_g);
      step = -(dinv_g - Xdinv.transpose() * t);
    } else {
      Eigen::MatrixXd H = X.transpose() * c.asDiagonal() * X;
      H.diagonal() += model.q;
      step = -H.ldlt().solve(g);
    }
    double slope = g.dot(step);
    double t = 1.0;
    bool accepted = false;
    for (int halving = 0; halving < 40; ++halving) {
      double trial = blr_objective(model, batch, w + t * step);
      if (trial <= value + 1e-4 * t * slope) {
        w += t * step;
        value = trial;
        accepted = true;
        break;
      }
      t *= 0.5;
    }
    if (!accepted) {
      // Newton direction failed to improve; fall back to a short gradient step.
      double gt = 1.0 / (1.0 + g.norm());
      for (int halving = 0; halving < 40 && !accepted; ++halving) {
        double trial = blr_objective(model, batch, w - gt * g);
        if (trial < value) {
          w -= gt * g;
          value = trial;
          accepted = true;
        }
        gt *= 0.5;
      }
      if (!accepted) break;
    }
  }
  if (!converged && blr_gradient(model, batch, w).norm() > kTol) {
    fail(Errc::NoConvergence, "blr_update mode finding did not converge");
  }

  Eigen::VectorXd z = X * w;
  for (Eigen::Index i = 0; i < b; ++i) {
    double p = sigmoid(z[i]);
    model.q += p * (1.0 - p) * X.row(i).transpose().cwiseAbs2();
  }
  model.m = w;
  return model;
}

RLSState make_rls_state(std::size_t n_arms, std::size_t d, double prior_variance) {
  RLSState state;
  state.arms.assign(n_arms, make_gaussian(d, prior_variance));
  return state;
}

BLRState make_blr_state(std::size_t n_arms, std::size_t d, double prior_variance) {
  BLRState state;
  state.arms.assign(n_arms, make_logistic(d, prior_variance));
  return state;
}

std::vector<double> ts_scores(const RLSState& state, const Eigen::VectorXd& x, Rng& rng) {
  std::vector<double> scores;
  scores.reserve(state.arms.size());
  for (const LinearGaussian& arm : state.arms) {
    check_dim(x, arm.m.size());
    double var = std::max(x.dot(arm.P * x), 0.0);
    scores.push_back(arm.m.dot(x) + std::sqrt(var) * rng.gaussian());
  }
  return scores;
}

std::vector<double> ts_scores(const BLRState& state, const Eigen::VectorXd& x, Rng& rng) {
  std::vector<double> scores;
  scores.reserve(state.arms.size());
  for (const LinearLogistic& arm : state.arms) {
    check_dim(x, arm.m.size());
    double var = x.cwiseAbs2().dot(arm.q.cwiseInverse());
    scores.push_back(arm.m.dot(x) + std::sqrt(var) * rng.gaussian());
  }
  return scores;
}

std::size_t linear_ts_sample(const RLSState& state, const Eigen::VectorXd& x, Rng& rng) {
  return argmax_index(ts_scores(state, x, rng));
}

std::size_t linear_ts_sample(const BLRState& state, const Eigen::VectorXd& x, Rng& rng) {
  return argmax_index(ts_scores(state, x, rng));
}

std::vector<double> mean_scores(const RLSState& state, const Eigen::VectorXd& x) {
  std::vector<double> scores;
  scores.reserve(state.arms.size());
  for (const LinearGaussian& arm : state.arms) scores.push_back(rls_predict(arm, x));
  return scores;
}

std::vector<double> mean_scores(const BLRState& state, const Eigen::VectorXd& x) {
  std::vector<double> scores;
  scores.reserve(state.arms.size());
  for (const LinearLogistic& arm : state.arms) scores.push_back(blr_predict_proba(arm, x));
  return scores;
}

Eigen::VectorXd sample_weights(const LinearGaussian& model, Rng& rng) {
  const Eigen::Index d = model.m.size();
  Eigen::VectorXd z(d);
  for (Eigen::Index j = 0; j < d; ++j) z[j] = rng.gaussian();
  // P = Pi' L D L' Pi, so S = Pi' L sqrt(D) satisfies S S' = P. LDLT tolerates
  // the tiny negative eigenvalues long RLS runs can accumulate.
  Eigen::LDLT<Eigen::MatrixXd> ldlt(model.P);
  Eigen::VectorXd dsqrt = ldlt.vectorD().cwiseMax(0.0).cwiseSqrt();
  Eigen::VectorXd noise = ldlt.matrixL() * dsqrt.cwiseProduct(z);
  return model.m + ldlt.transpositionsP().transpose() * noise;
}

Eigen::VectorXd sample_weights(const LinearLogistic& model, Rng& rng) {
  const Eigen::Index d = model.m.size();
  Eigen::VectorXd w(d);
  for (Eigen::Index j = 0; j < d; ++j) {
    w[j] = model.m[j] + rng.gaussian() / std::sqrt(model.q[j]);
  }
  return w;
}

std::vector<double> igw_distribution(const std::vector<double>& scores, double gamma_t) {
  const std::size_t k = scores.size();
  if (k == 0) fail(Errc::EmptyArmSet, "igw_distribution over zero scores");
  if (!(gamma_t > 0.0)) fail(Errc::OutOfRange, "igw gamma must be > 0");
  for (double s : scores) {
    if (!std::isfinite(s)) fail(Errc::NonFiniteScore, "igw_distribution got a non-finite score");
  }
  std::size_t b = argmax_index(scores);
  std::vector<double> p(k, 0.0);
  double rest = 0.0;
  for (std::size_t a = 0; a < k; ++a) {
    if (a == b) continue;
    p[a] = 1.0 / (static_cast<double>(k) + gamma_t * (scores[b] - scores[a]));
    rest += p[a];
  }
  p[b] = 1.0 - rest;
  return p;
}

}  // namespace bandit
