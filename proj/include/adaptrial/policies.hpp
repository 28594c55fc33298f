#pragma once

#include <array>
#include <cmath>
#include <cstddef>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "adaptrial/error.hpp"
#include "adaptrial/math.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

// ---------------------------------------------------------------------------
// Policy kinds
// ---------------------------------------------------------------------------

struct MabEpsilonGreedy {
  double epsilon = 0.1;
};

struct GaussianThompson {
  double prior_mean = 0.0;
  double prior_var = 1.0;
  double noise_var = 1.0;
};

// Ridge-fitted linear model on [phi, A*phi]; lambda is the per-individual
// penalty, so the summed normal equations carry n * lambda.
struct ContextualEpsilonGreedy {
  double epsilon = 0.2;
  double lambda = 1.0;
  bool penalty_per_individual = true;  // false: lambda added once to the pooled Gram
};

struct Boltzmann {
  double pi_min = 0.1;
  double steepness = 2.0;
  double lambda = 1.0;
  bool penalty_per_individual = true;
};

// Non-adaptive reference policy (e.g. the 0.5 baseline).
struct FixedProbability {
  double p = 0.5;
};

using PolicyKind =
    std::variant<MabEpsilonGreedy, GaussianThompson, ContextualEpsilonGreedy, Boltzmann, FixedProbability>;

inline void validate_policy(const PolicyKind& kind) {
  if (auto* k = std::get_if<MabEpsilonGreedy>(&kind)) {
    if (!(k->epsilon > 0.0 && k->epsilon < 1.0)) throw ConfigError("policy.epsilon must lie in (0,1)");
  } else if (auto* k = std::get_if<GaussianThompson>(&kind)) {
    if (!(k->prior_var > 0.0 && k->noise_var > 0.0))
      throw ConfigError("policy.prior_var and policy.noise_var must be > 0");
  } else if (auto* k = std::get_if<ContextualEpsilonGreedy>(&kind)) {
    if (!(k->epsilon > 0.0 && k->epsilon < 1.0)) throw ConfigError("policy.epsilon must lie in (0,1)");
    if (!(k->lambda >= 0.0)) throw ConfigError("policy.lambda must be >= 0");
  } else if (auto* k = std::get_if<Boltzmann>(&kind)) {
    if (!(k->pi_min > 0.0 && k->pi_min < 0.5)) throw ConfigError("policy.pi_min must lie in (0,0.5)");
    if (!(k->steepness > 0.0)) throw ConfigError("policy.steepness must be > 0");
    if (!(k->lambda >= 0.0)) throw ConfigError("policy.lambda must be >= 0");
  } else if (auto* k = std::get_if<FixedProbability>(&kind)) {
    if (!(k->p >= 0.0 && k->p <= 1.0)) throw ConfigError("policy.p must lie in [0,1]");
  }
}

inline bool uses_linear_statistic(const PolicyKind& kind) {
  return std::holds_alternative<ContextualEpsilonGreedy>(kind) || std::holds_alternative<Boltzmann>(kind);
}

inline bool is_differentiable(const PolicyKind& kind) {
  return std::holds_alternative<Boltzmann>(kind) || std::holds_alternative<FixedProbability>(kind);
}

inline std::string policy_name(const PolicyKind& kind) {
  static const char* names[] = {"mab_epsilon_greedy", "gaussian_thompson", "contextual_epsilon_greedy",
                                "boltzmann", "fixed"};
  return names[kind.index()];
}

// ---------------------------------------------------------------------------
// Algorithm statistic
// ---------------------------------------------------------------------------

struct TsPosterior {
  std::array<double, 2> mean{0.0, 0.0};
  std::array<double, 2> var{1.0, 1.0};
};

struct PolicySnapshot {
  int update_time = -1;  // last decision index (0-based) in the fit; -1 before any fit
  bool fitted = false;
  Eigen::VectorXd beta;  // stacked [beta0; beta1] for the linear kinds
  Eigen::MatrixXd gram;  // unpenalized stacked Gram sum used in the solve
  double penalty = 0.0;  // total ridge penalty added to the Gram diagonal
  double mab_diff = 0.0;
  TsPosterior posterior;

  Eigen::Index feature_dim() const { return beta.size() / 2; }
  Eigen::VectorXd beta0() const { return beta.head(feature_dim()); }
  Eigen::VectorXd beta1() const { return beta.tail(feature_dim()); }
};

// Empirical arm-1 mean minus arm-0 mean; an empty arm contributes mean 0.
inline double mab_diff_from_sums(const std::array<double, 2>& sum, const std::array<double, 2>& count) {
  const double m1 = count[1] > 0 ? sum[1] / count[1] : 0.0;
  const double m0 = count[0] > 0 ? sum[0] / count[0] : 0.0;
  return m1 - m0;
}

inline double mab_diff_statistic(std::span<const int> actions, std::span<const double> rewards) {
  std::array<double, 2> sum{}, count{};
  for (std::size_t k = 0; k < actions.size(); ++k) {
    sum[actions[k]] += rewards[k];
    count[actions[k]] += 1.0;
  }
  return mab_diff_from_sums(sum, count);
}

inline double mab_epsilon_greedy_prob(double beta_hat, double epsilon) {
  return beta_hat > 0.0 ? 1.0 - epsilon / 2.0 : epsilon / 2.0;
}

inline TsPosterior ts_posterior_from_sums(const GaussianThompson& model, const std::array<double, 2>& sum,
                                          const std::array<double, 2>& count) {
  TsPosterior post;
  for (int a = 0; a < 2; ++a) {
    const double precision = 1.0 / model.prior_var + count[a] / model.noise_var;
    post.var[a] = 1.0 / precision;
    post.mean[a] = post.var[a] * (model.prior_mean / model.prior_var + sum[a] / model.noise_var);
  }
  return post;
}

inline TsPosterior gaussian_ts_posterior(std::span<const int> actions, std::span<const double> rewards,
                                         const GaussianThompson& model = {}) {
  std::array<double, 2> sum{}, count{};
  for (std::size_t k = 0; k < actions.size(); ++k) {
    sum[actions[k]] += rewards[k];
    count[actions[k]] += 1.0;
  }
  return ts_posterior_from_sums(model, sum, count);
}

// P(mu_1 > mu_0) under independent Gaussian posteriors.
inline double ts_prob_superior(const TsPosterior& post) {
  const double v = post.var[0] + post.var[1];
  if (!(post.var[0] > 0.0 && post.var[1] > 0.0)) throw DomainError("ts_prob_superior: variances must be > 0");
  return normal_cdf((post.mean[1] - post.mean[0]) / std::sqrt(v));
}

// Solve (gram + penalty I) beta = xty. With zero penalty a rank-deficient
// Gram is reported rather than silently pseudo-inverted.
inline Eigen::VectorXd ridge_solve(const Eigen::MatrixXd& gram, const Eigen::VectorXd& xty, double penalty) {
  const Eigen::Index d = gram.rows();
  if (penalty > 0.0) {
    Eigen::MatrixXd a = gram;
    a.diagonal().array() += penalty;
    Eigen::LLT<Eigen::MatrixXd> llt(a);
    if (llt.info() != Eigen::Success) throw SingularError("ridge_solve: penalized Gram not positive definite");
    return llt.solve(xty);
  }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(gram);
  if (qr.rank() < d) {
    throw SingularError("ridge_solve: Gram matrix has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(d) + " with lambda = 0");
  }
  return qr.solve(xty);
}

// Stacked feature row [phi, a*phi].
inline void stack_features(std::span<const double> phi, int action, std::span<double> out) {
  const std::size_t d = phi.size();
  for (std::size_t k = 0; k < d; ++k) {
    out[k] = phi[k];
    out[d + k] = action * phi[k];
  }
}

// Running sufficient statistics for every policy kind; fit() turns them into
// an immutable snapshot.
class PolicyLearner {
 public:
  PolicyLearner(std::size_t feature_dim, bool linear)
      : d_(feature_dim),
        linear_(linear),
        gram_(Eigen::MatrixXd::Zero(2 * feature_dim, 2 * feature_dim)),
        xty_(Eigen::VectorXd::Zero(2 * feature_dim)),
        row_(2 * feature_dim) {}

  void add(std::span<const double> phi, int action, double reward) {
    arm_sum_[action] += reward;
    arm_count_[action] += 1.0;
    if (!linear_) return;
    stack_features(phi, action, row_);
    const std::size_t D = 2 * d_;
    for (std::size_t r = 0; r < D; ++r) {
      if (row_[r] == 0.0) continue;
      xty_[r] += row_[r] * reward;
      for (std::size_t c = 0; c <= r; ++c) gram_(r, c) += row_[r] * row_[c];
    }
  }

  PolicySnapshot fit(const PolicyKind& kind, int update_time, std::size_t n_individuals) const {
    PolicySnapshot snap;
    snap.update_time = update_time;
    snap.fitted = true;
    snap.mab_diff = mab_diff_from_sums(arm_sum_, arm_count_);
    if (auto* ts = std::get_if<GaussianThompson>(&kind)) snap.posterior = ts_posterior_from_sums(*ts, arm_sum_, arm_count_);
    if (uses_linear_statistic(kind)) {
      if (!linear_) throw ConfigError("PolicyLearner: linear statistic not accumulated");
      double lambda = 0.0;
      bool per_individual = true;
      if (auto* b = std::get_if<Boltzmann>(&kind)) {
        lambda = b->lambda;
        per_individual = b->penalty_per_individual;
      } else {
        const auto& e = std::get<ContextualEpsilonGreedy>(kind);
        lambda = e.lambda;
        per_individual = e.penalty_per_individual;
      }
      snap.gram = gram_.selfadjointView<Eigen::Lower>();
      snap.penalty = per_individual ? lambda * static_cast<double>(n_individuals) : lambda;
      snap.beta = ridge_solve(snap.gram, xty_, snap.penalty);
    }
    return snap;
  }

  std::size_t feature_dim() const { return d_; }

 private:
  std::size_t d_;
  bool linear_;
  std::array<double, 2> arm_sum_{}, arm_count_{};
  Eigen::MatrixXd gram_;  // lower triangle accumulated
  Eigen::VectorXd xty_;
  std::vector<double> row_;
};

// Ridge fit of reward on [phi, A*phi] from explicit rows (phi row-major, one
// row per observation). `lambda` is added to the Gram diagonal as given.
inline PolicySnapshot ridge_ls_update(std::span<const double> phi_rows, std::size_t feature_dim,
                                      std::span<const int> actions, std::span<const double> rewards,
                                      double lambda, int update_time = 0) {
  if (!(lambda >= 0.0)) throw ConfigError("ridge_ls_update: lambda must be >= 0");
  const std::size_t D = 2 * feature_dim;
  Eigen::MatrixXd gram = Eigen::MatrixXd::Zero(D, D);
  Eigen::VectorXd xty = Eigen::VectorXd::Zero(D);
  Eigen::VectorXd row(D);
  for (std::size_t k = 0; k < actions.size(); ++k) {
    stack_features(phi_rows.subspan(k * feature_dim, feature_dim), actions[k], std::span(row.data(), D));
    if (!row.allFinite() || !std::isfinite(rewards[k])) throw DomainError("ridge_ls_update: non-finite design");
    gram.noalias() += row * row.transpose();
    xty += row * rewards[k];
  }
  PolicySnapshot snap;
  snap.update_time = update_time;
  snap.fitted = true;
  snap.gram = gram;
  snap.penalty = lambda;
  snap.beta = ridge_solve(gram, xty, lambda);
  return snap;
}

// ---------------------------------------------------------------------------
// Action-selection probabilities and gradients
// ---------------------------------------------------------------------------

inline double advantage_score(std::span<const double> phi, const Eigen::VectorXd& beta1) {
  if (static_cast<Eigen::Index>(phi.size()) != beta1.size())
    throw DomainError("policy: feature dimension " + std::to_string(phi.size()) + " does not match beta dimension " +
                      std::to_string(beta1.size()));
  double u = 0.0;
  for (std::size_t k = 0; k < phi.size(); ++k) u += phi[k] * beta1[static_cast<Eigen::Index>(k)];
  return u;
}

inline double contextual_eps_greedy_prob(std::span<const double> phi, const Eigen::VectorXd& beta1, double epsilon) {
  return advantage_score(phi, beta1) > 0.0 ? 1.0 - epsilon / 2.0 : epsilon / 2.0;
}

inline double boltzmann_prob_from_score(double u, double pi_min, double s) {
  return pi_min + (1.0 - 2.0 * pi_min) * sigmoid(s * u);
}

inline double boltzmann_prob(std::span<const double> phi, const Eigen::VectorXd& beta1, double pi_min, double s) {
  return boltzmann_prob_from_score(advantage_score(phi, beta1), pi_min, s);
}

// d pi(x, 1; beta) / d beta1. The action-0 gradient is its negative.
inline Eigen::VectorXd boltzmann_prob_gradient(std::span<const double> phi, const Eigen::VectorXd& beta1,
                                               double pi_min, double s) {
  const double sig = sigmoid(s * advantage_score(phi, beta1));
  const double scale = (1.0 - 2.0 * pi_min) * s * sig * (1.0 - sig);
  Eigen::VectorXd g(static_cast<Eigen::Index>(phi.size()));
  for (std::size_t k = 0; k < phi.size(); ++k) g[static_cast<Eigen::Index>(k)] = scale * phi[k];
  return g;
}

// Probability of action 1 given a snapshot. Before the first fit every
// algorithm randomizes with probability 0.5.
inline double prob_action1(const PolicyKind& kind, const PolicySnapshot& snap, std::span<const double> phi) {
  if (auto* k = std::get_if<FixedProbability>(&kind)) return k->p;
  if (!snap.fitted) return 0.5;
  if (auto* k = std::get_if<MabEpsilonGreedy>(&kind)) return mab_epsilon_greedy_prob(snap.mab_diff, k->epsilon);
  if (std::holds_alternative<GaussianThompson>(kind)) return ts_prob_superior(snap.posterior);
  if (auto* k = std::get_if<ContextualEpsilonGreedy>(&kind))
    return contextual_eps_greedy_prob(phi, snap.beta1(), k->epsilon);
  const auto& b = std::get<Boltzmann>(kind);
  return boltzmann_prob(phi, snap.beta1(), b.pi_min, b.steepness);
}

inline double prob_action(const PolicyKind& kind, const PolicySnapshot& snap, std::span<const double> phi,
                          int action) {
  const double p1 = prob_action1(kind, snap, phi);
  return action == 1 ? p1 : 1.0 - p1;
}

// Gradient of pi(x, action; beta) with respect to the full stacked statistic
// [beta0; beta1] (the baseline block is always zero). Unfitted snapshots and
// fixed policies have zero gradient.
inline Eigen::VectorXd policy_gradient(const PolicyKind& kind, const PolicySnapshot& snap,
                                       std::span<const double> phi, int action) {
  const auto d = static_cast<Eigen::Index>(phi.size());
  if (std::holds_alternative<FixedProbability>(kind)) return Eigen::VectorXd::Zero(2 * d);
  const auto* b = std::get_if<Boltzmann>(&kind);
  if (b == nullptr) throw NotDifferentiable("policy_gradient: " + policy_name(kind) + " is not differentiable");
  Eigen::VectorXd g = Eigen::VectorXd::Zero(2 * d);
  if (!snap.fitted) return g;
  g.tail(d) = boltzmann_prob_gradient(phi, snap.beta1(), b->pi_min, b->steepness);
  if (action == 0) g = -g;
  return g;
}

struct ActionDraw {
  int action = 0;
  double propensity = 0.5;
};

inline ActionDraw select_action(double prob, Stream& stream) {
  if (!(prob >= 0.0 && prob <= 1.0)) throw DomainError("select_action: probability must lie in [0,1]");
  const int a = stream.bernoulli(prob) ? 1 : 0;
  return {a, a == 1 ? prob : 1.0 - prob};
}

}  // namespace adaptrial
