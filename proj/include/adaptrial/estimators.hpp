#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "adaptrial/environments.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/math.hpp"
#include "adaptrial/policies.hpp"
#include "adaptrial/rng.hpp"
#include "adaptrial/trial.hpp"

namespace adaptrial {

enum class OutcomeMap { outcome, reward };

// average: theta is the mean of the mapped outcome over all (i, t).
// least_squares: unregularized pooled regression on [phi, A*phi].
struct EstimandSpec {
  enum class Kind { average, least_squares };
  Kind kind = Kind::average;
  OutcomeMap outcome_map = OutcomeMap::outcome;
  double level = 0.95;
  std::size_t target = 0;  // coordinate compared against theta*
};

inline std::size_t estimand_dim(const TrajectorySet& tr, const EstimandSpec& spec) {
  return spec.kind == EstimandSpec::Kind::average ? 1 : 2 * tr.feature_dim;
}

inline double mapped_outcome(const TrajectorySet& tr, std::size_t c, OutcomeMap m) {
  return m == OutcomeMap::outcome ? tr.outcome[c] : tr.reward[c];
}

inline void inference_row(const TrajectorySet& tr, const EstimandSpec& spec, std::size_t i, std::size_t t,
                          std::span<double> out) {
  if (spec.kind == EstimandSpec::Kind::average) {
    out[0] = 1.0;
    return;
  }
  stack_features(tr.phi_at(i, t), tr.action[tr.cell(i, t)], out);
}

inline double average_reward_estimate(const TrajectorySet& tr, OutcomeMap m = OutcomeMap::reward) {
  if (tr.n == 0 || tr.T == 0) throw DomainError("average_reward_estimate: empty trajectories");
  double total = 0.0;
  for (std::size_t i = 0; i < tr.n; ++i) {
    double s = 0.0;
    for (std::size_t t = 0; t < tr.T; ++t) s += mapped_outcome(tr, tr.cell(i, t), m);
    total += s / static_cast<double>(tr.T);
  }
  return total / static_cast<double>(tr.n);
}

namespace detail {

inline Eigen::MatrixXd checked_inverse(const Eigen::MatrixXd& a, const char* what) {
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(a);
  if (qr.rank() < a.rows())
    throw SingularError(std::string(what) + ": matrix has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(a.rows()));
  return qr.inverse();
}

// (1/n) sum_i sum_t x x^T for the inference rows.
inline Eigen::MatrixXd bread(const TrajectorySet& tr, const EstimandSpec& spec) {
  const std::size_t d = estimand_dim(tr, spec);
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd x(d);
  for (std::size_t i = 0; i < tr.n; ++i)
    for (std::size_t t = 0; t < tr.T; ++t) {
      inference_row(tr, spec, i, t, std::span(x.data(), d));
      L.noalias() += x * x.transpose();
    }
  return L / static_cast<double>(tr.n);
}

}  // namespace detail

inline Eigen::VectorXd least_squares_estimate(const TrajectorySet& tr, const EstimandSpec& spec) {
  const std::size_t d = estimand_dim(tr, spec);
  Eigen::MatrixXd G = Eigen::MatrixXd::Zero(d, d);
  Eigen::VectorXd b = Eigen::VectorXd::Zero(d);
  Eigen::VectorXd x(d);
  for (std::size_t i = 0; i < tr.n; ++i)
    for (std::size_t t = 0; t < tr.T; ++t) {
      inference_row(tr, spec, i, t, std::span(x.data(), d));
      G.noalias() += x * x.transpose();
      b += x * mapped_outcome(tr, tr.cell(i, t), spec.outcome_map);
    }
  Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(G);
  if (qr.rank() < static_cast<Eigen::Index>(d))
    throw SingularError("least_squares_estimate: design has rank " + std::to_string(qr.rank()) + " < " +
                        std::to_string(d));
  return qr.solve(b);
}

// Per-individual estimating-function values l_i = sum_t x (Y - x^T theta),
// returned as the columns of a d x n matrix.
inline Eigen::MatrixXd individual_scores(const TrajectorySet& tr, const Eigen::VectorXd& theta,
                                         const EstimandSpec& spec) {
  const std::size_t d = estimand_dim(tr, spec);
  if (static_cast<std::size_t>(theta.size()) != d) throw DomainError("individual_scores: theta dimension mismatch");
  Eigen::MatrixXd scores = Eigen::MatrixXd::Zero(d, tr.n);
  Eigen::VectorXd x(d);
  for (std::size_t i = 0; i < tr.n; ++i)
    for (std::size_t t = 0; t < tr.T; ++t) {
      inference_row(tr, spec, i, t, std::span(x.data(), d));
      const double resid = mapped_outcome(tr, tr.cell(i, t), spec.outcome_map) - x.dot(theta);
      scores.col(static_cast<Eigen::Index>(i)) += x * resid;
    }
  return scores;
}

// Asymptotic sandwich L^-1 [(1/n) sum l l^T] L^-1; Var(theta_hat) ~ this / n.
inline Eigen::MatrixXd standard_sandwich_variance(const TrajectorySet& tr, const Eigen::VectorXd& theta,
                                                  const EstimandSpec& spec) {
  const Eigen::MatrixXd Linv = detail::checked_inverse(detail::bread(tr, spec), "standard_sandwich_variance");
  const Eigen::MatrixXd scores = individual_scores(tr, theta, spec);
  const Eigen::MatrixXd meat = scores * scores.transpose() / static_cast<double>(tr.n);
  Eigen::MatrixXd V = Linv * meat * Linv.transpose();
  return 0.5 * (V + V.transpose());
}

// Influence of the algorithm statistic at each update time actually used by
// a later decision. For update k fitted through decision u_k with total
// penalty P, lambda_eff = P/n and
//   psi_i = (G/n + lambda_eff I)^-1 (sum_{t<=u_k} x (R - x^T beta) - lambda_eff beta),
// which averages to exactly zero over individuals.
struct InfluenceSet {
  std::vector<std::size_t> snapshot_index;  // which snapshots the blocks belong to
  std::size_t block_dim = 0;
  Eigen::MatrixXd psi;  // (K * block_dim) x n

  Eigen::Block<const Eigen::MatrixXd> block(std::size_t k) const {
    return psi.block(static_cast<Eigen::Index>(k * block_dim), 0, static_cast<Eigen::Index>(block_dim), psi.cols());
  }
};

inline std::vector<std::size_t> used_fitted_snapshots(const TrajectorySet& tr) {
  std::vector<std::size_t> out;
  for (std::size_t t = 0; t < tr.T; ++t) {
    const std::size_t k = tr.snapshot_at[t];
    if (tr.snapshots[k].fitted && (out.empty() || out.back() != k)) out.push_back(k);
  }
  return out;
}

inline InfluenceSet psi_influence(const TrajectorySet& tr) {
  if (!uses_linear_statistic(tr.policy))
    throw ConfigError("psi_influence: policy " + policy_name(tr.policy) + " has no least-squares statistic");
  InfluenceSet out;
  out.snapshot_index = used_fitted_snapshots(tr);
  const std::size_t D = 2 * tr.feature_dim;
  out.block_dim = D;
  out.psi = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(out.snapshot_index.size() * D),
                                  static_cast<Eigen::Index>(tr.n));
  const double nd = static_cast<double>(tr.n);
  Eigen::VectorXd x(D), s(D);
  for (std::size_t k = 0; k < out.snapshot_index.size(); ++k) {
    const PolicySnapshot& snap = tr.snapshots[out.snapshot_index[k]];
    const double lam = snap.penalty / nd;
    Eigen::MatrixXd M = snap.gram / nd;
    M.diagonal().array() += lam;
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success || ldlt.rcond() < 1e-14)
      throw SingularError("psi_influence: singular Gram at update time " + std::to_string(snap.update_time));
    const auto u = static_cast<std::size_t>(snap.update_time);
    for (std::size_t i = 0; i < tr.n; ++i) {
      s.setZero();
      for (std::size_t t = 0; t <= u; ++t) {
        const std::size_t c = tr.cell(i, t);
        stack_features(tr.phi_at(i, t), tr.action[c], std::span(x.data(), D));
        s += x * (tr.reward[c] - x.dot(snap.beta));
      }
      s -= lam * snap.beta;
      out.psi.block(static_cast<Eigen::Index>(k * D), static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(D), 1) =
          ldlt.solve(s);
    }
  }
  return out;
}

// Sign of the policy-learning correction in the adaptive meat. The default
// (+1) follows from expanding the mean of the estimating function in the
// algorithm statistic; -1 is kept for comparison studies.
struct AdaptiveSandwichOptions {
  double correction_sign = 1.0;
};

inline Eigen::MatrixXd adaptive_sandwich_variance(const TrajectorySet& tr, const Eigen::VectorXd& theta,
                                                  const EstimandSpec& spec, AdaptiveSandwichOptions opt = {}) {
  if (!is_differentiable(tr.policy))
    throw NotDifferentiable("adaptive_sandwich_variance: " + policy_name(tr.policy) + " is not differentiable");
  const Eigen::MatrixXd Linv = detail::checked_inverse(detail::bread(tr, spec), "adaptive_sandwich_variance");
  const Eigen::MatrixXd scores = individual_scores(tr, theta, spec);
  Eigen::MatrixXd corrected = scores;
  const double nd = static_cast<double>(tr.n);

  if (uses_linear_statistic(tr.policy)) {
    const InfluenceSet inf = psi_influence(tr);
    const std::size_t D = inf.block_dim;
    for (std::size_t k = 0; k < inf.snapshot_index.size(); ++k) {
      const std::size_t sk = inf.snapshot_index[k];
      const PolicySnapshot& snap = tr.snapshots[sk];
      // Per-individual sum of score-function terms pi_dot / pi over the
      // decisions that used this snapshot.
      Eigen::MatrixXd W = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(D), static_cast<Eigen::Index>(tr.n));
      for (std::size_t i = 0; i < tr.n; ++i)
        for (std::size_t t = 0; t < tr.T; ++t) {
          if (tr.snapshot_at[t] != sk) continue;
          const std::size_t c = tr.cell(i, t);
          W.col(static_cast<Eigen::Index>(i)) +=
              policy_gradient(tr.policy, snap, tr.phi_at(i, t), tr.action[c]) / tr.propensity[c];
        }
      const Eigen::MatrixXd Q = scores * W.transpose() / nd;  // d x D
      corrected.noalias() += opt.correction_sign * Q * inf.block(k);
    }
  }
  const Eigen::MatrixXd meat = corrected * corrected.transpose() / nd;
  Eigen::MatrixXd V = Linv * meat * Linv.transpose();
  return 0.5 * (V + V.transpose());
}

// ---------------------------------------------------------------------------
// Intervals and reports
// ---------------------------------------------------------------------------

struct Interval {
  double lo = 0.0;
  double hi = 0.0;
};

inline Interval confidence_interval(double theta_hat, double variance, std::size_t n, double level) {
  if (!(variance >= 0.0)) throw DomainError("confidence_interval: variance must be >= 0");
  if (n < 1) throw DomainError("confidence_interval: n must be >= 1");
  const double half = normal_critical_value(level) * std::sqrt(variance / static_cast<double>(n));
  return {theta_hat - half, theta_hat + half};
}

inline bool covers(const Interval& ci, double theta_star) { return ci.lo <= theta_star && theta_star <= ci.hi; }

struct EstimateReport {
  Eigen::VectorXd theta_hat;
  std::size_t n = 0;
  double level = 0.95;
  std::size_t target = 0;
  std::optional<Eigen::MatrixXd> var_standard;
  std::optional<Eigen::MatrixXd> var_adaptive;
  std::string adaptive_na_reason;  // set when var_adaptive is absent
  std::vector<Interval> ci_standard, ci_adaptive;
  std::optional<bool> covered_standard, covered_adaptive;

  double target_theta() const { return theta_hat[static_cast<Eigen::Index>(target)]; }
  // Estimated variance of theta_hat[target] (asymptotic variance / n).
  std::optional<double> target_var_standard() const {
    if (!var_standard) return std::nullopt;
    return (*var_standard)(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(target)) /
           static_cast<double>(n);
  }
  std::optional<double> target_var_adaptive() const {
    if (!var_adaptive) return std::nullopt;
    return (*var_adaptive)(static_cast<Eigen::Index>(target), static_cast<Eigen::Index>(target)) /
           static_cast<double>(n);
  }
};

inline std::vector<Interval> coordinate_intervals(const Eigen::VectorXd& theta, const Eigen::MatrixXd& V,
                                                  std::size_t n, double level) {
  std::vector<Interval> out;
  for (Eigen::Index k = 0; k < theta.size(); ++k)
    out.push_back(confidence_interval(theta[k], std::max(0.0, V(k, k)), n, level));
  return out;
}

inline EstimateReport estimate(const TrajectorySet& tr, const EstimandSpec& spec,
                               std::optional<double> theta_star = std::nullopt, bool with_variances = true) {
  EstimateReport rep;
  rep.n = tr.n;
  rep.level = spec.level;
  rep.target = spec.target;
  rep.theta_hat = least_squares_estimate(tr, spec);
  if (spec.target >= static_cast<std::size_t>(rep.theta_hat.size()))
    throw ConfigError("estimand.target " + std::to_string(spec.target) + " out of range");
  if (!with_variances) {
    rep.adaptive_na_reason = "not_computed";
    return rep;
  }
  rep.var_standard = standard_sandwich_variance(tr, rep.theta_hat, spec);
  rep.ci_standard = coordinate_intervals(rep.theta_hat, *rep.var_standard, tr.n, spec.level);
  if (is_differentiable(tr.policy)) {
    rep.var_adaptive = adaptive_sandwich_variance(tr, rep.theta_hat, spec);
    rep.ci_adaptive = coordinate_intervals(rep.theta_hat, *rep.var_adaptive, tr.n, spec.level);
  } else {
    rep.adaptive_na_reason = "not_differentiable";
  }
  if (theta_star) {
    rep.covered_standard = covers(rep.ci_standard[spec.target], *theta_star);
    if (rep.var_adaptive) rep.covered_adaptive = covers(rep.ci_adaptive[spec.target], *theta_star);
  }
  return rep;
}

// ---------------------------------------------------------------------------
// Replicability metric
// ---------------------------------------------------------------------------

// Algorithm feature vectors at which policies are compared.
using ContextGrid = std::vector<std::vector<double>>;

inline ContextGrid constant_grid() { return {{1.0}}; }

// phi = [1, x] for x on an equally spaced grid.
inline ContextGrid scalar_context_grid(double lo, double hi, std::size_t points) {
  if (points < 1) throw ConfigError("grid: points must be >= 1");
  if (!(lo <= hi)) throw ConfigError("grid: requires lo <= hi");
  ContextGrid g;
  for (std::size_t k = 0; k < points; ++k) {
    const double x = points == 1 ? lo : lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(points - 1);
    g.push_back({1.0, x});
  }
  return g;
}

// Latin hypercube over the Oralytics algorithm features: intercept fixed at
// 1, time of day and app flag on [0,1], normalized brushing and prompts on
// [-1,1].
inline ContextGrid oralytics_lhs_grid(std::size_t points, Stream& s) {
  if (points < 1) throw ConfigError("grid: points must be >= 1");
  const double lo[kOralyticsAlgDim] = {1.0, 0.0, -1.0, -1.0, 0.0};
  const double hi[kOralyticsAlgDim] = {1.0, 1.0, 1.0, 1.0, 1.0};
  ContextGrid g(points, std::vector<double>(kOralyticsAlgDim));
  std::vector<std::size_t> perm(points);
  for (std::size_t k = 0; k < kOralyticsAlgDim; ++k) {
    for (std::size_t j = 0; j < points; ++j) perm[j] = j;
    for (std::size_t j = points; j > 1; --j) {
      const auto r = static_cast<std::size_t>(s.uniform() * static_cast<double>(j));
      std::swap(perm[j - 1], perm[std::min(r, j - 1)]);
    }
    for (std::size_t j = 0; j < points; ++j) {
      const double u = (static_cast<double>(perm[j]) + s.uniform()) / static_cast<double>(points);
      g[j][k] = lo[k] + (hi[k] - lo[k]) * u;
    }
  }
  return g;
}

struct PolicyAt {
  PolicyKind kind;
  PolicySnapshot snapshot;
};

// Sup over the grid of |pi(x,1) - pi~(x,1)| (the action-0 gap is identical).
inline double policy_sup_distance(const PolicyAt& a, const PolicyAt& b, const ContextGrid& grid) {
  if (a.kind.index() != b.kind.index()) throw DomainError("replicability_metric: policy kinds differ within a pair");
  if (grid.empty()) throw DomainError("replicability_metric: empty grid");
  double sup = 0.0;
  for (const auto& x : grid)
    sup = std::max(sup, std::abs(prob_action1(a.kind, a.snapshot, x) - prob_action1(b.kind, b.snapshot, x)));
  return sup;
}

inline double replicability_metric(const std::vector<std::pair<PolicyAt, PolicyAt>>& pairs, const ContextGrid& grid) {
  if (pairs.empty()) throw DomainError("replicability_metric: no pairs");
  double total = 0.0;
  for (const auto& [a, b] : pairs) total += policy_sup_distance(a, b, grid);
  return total / static_cast<double>(pairs.size());
}

// ---------------------------------------------------------------------------
// Analytic theta* oracles
// ---------------------------------------------------------------------------

struct ThetaStar {
  std::optional<double> value;
  double mc_standard_error = 0.0;
  std::string provenance;  // "analytic", "monte_carlo", "configured", or why unavailable
};

// Closed forms where one exists. Under a policy that randomizes with 0.5 at
// the first decision and picks each arm with limiting probability 1/2 on
// average at the second (both MAB algorithms here), the mean reward limit is
// mu0 + (delta1 + delta2) / 4.
inline ThetaStar theta_star_oracle(const EnvKind& env, const PolicyKind& policy, const EstimandSpec& spec,
                                   std::size_t T) {
  if (spec.kind == EstimandSpec::Kind::average) {
    if (auto* e = std::get_if<NonstationaryMab>(&env)) {
      if (std::holds_alternative<MabEpsilonGreedy>(policy) || std::holds_alternative<GaussianThompson>(policy))
        return {e->mu0 + (e->delta1 + e->delta2) / 4.0, 0.0, "analytic"};
      if (auto* f = std::get_if<FixedProbability>(&policy))
        return {e->mu0 + f->p * (e->delta1 + e->delta2) / 2.0, 0.0, "analytic"};
    }
    const auto* f = std::get_if<FixedProbability>(&policy);
    if (auto* e = std::get_if<SyntheticDosage>(&env); e && f)
      return {synthetic_fixed_policy_mean(*e, T, f->p), 0.0, "analytic"};
  }
  return {std::nullopt, 0.0, "unavailable"};
}

}  // namespace adaptrial
