#pragma once

#include <chrono>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptrial/config.hpp"
#include "adaptrial/csv.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/estimators.hpp"
#include "adaptrial/limit_laws.hpp"
#include "adaptrial/parallel.hpp"
#include "adaptrial/stats.hpp"
#include "adaptrial/trial.hpp"

namespace adaptrial {

struct ReplicationRecord {
  std::uint32_t rep = 0;
  double theta_hat = 0.0;              // target coordinate
  std::optional<double> var_standard;  // estimated Var(theta_hat), i.e. asymptotic / n
  std::optional<double> var_adaptive;
  std::optional<bool> covered_standard, covered_adaptive;
  std::optional<PolicySnapshot> metric_snapshot;
};

struct ReplicationSummary {
  std::string name;
  std::size_t R = 0, n = 0, T = 0;
  double mean_theta_hat = 0.0;
  double empirical_variance = 0.0;
  std::optional<double> mean_var_standard, mean_var_adaptive;
  std::string adaptive_na_reason;
  std::optional<double> coverage_standard, coverage_adaptive;
  ThetaStar theta_star;
  std::optional<double> replicability;
  std::size_t replicability_pairs = 0;
  std::size_t metric_time = 0;
  PolicyKind policy;
  std::vector<ReplicationRecord> records;
  double wall_seconds = 0.0;

  std::vector<double> theta_hats() const {
    std::vector<double> v;
    v.reserve(records.size());
    for (const auto& r : records) v.push_back(r.theta_hat);
    return v;
  }
};

using WarningSink = std::function<void(const std::string&)>;

// Pairs replications (2k, 2k+1). An odd count drops the last replication.
inline std::vector<std::pair<PolicyAt, PolicyAt>> replication_pairing(const std::vector<ReplicationRecord>& records,
                                                                      const PolicyKind& kind,
                                                                      const WarningSink& warn = {}) {
  if (records.size() % 2 == 1 && warn)
    warn("odd replication count " + std::to_string(records.size()) + ": dropping replication " +
         std::to_string(records.back().rep) + " from pairing");
  std::vector<std::pair<PolicyAt, PolicyAt>> pairs;
  for (std::size_t k = 0; k + 1 < records.size(); k += 2) {
    if (!records[k].metric_snapshot || !records[k + 1].metric_snapshot)
      throw DomainError("replication_pairing: replication without a recorded snapshot");
    pairs.push_back({{kind, *records[k].metric_snapshot}, {kind, *records[k + 1].metric_snapshot}});
  }
  return pairs;
}

namespace detail {

inline SeedSpec oracle_seed(std::uint64_t master) { return SeedSpec{mix64(master ^ 0x6f7261636c65ull), 0, ""}; }

}  // namespace detail

// Mean of theta_hat over `reps` trials at size n, with its Monte Carlo
// standard error. Streams are disjoint from those of the main replications.
inline ThetaStar monte_carlo_theta_star(const ExperimentConfig& cfg, std::size_t n, std::size_t reps,
                                        std::size_t threads) {
  if (n < 1 || reps < 2) throw ConfigError("monte_carlo_theta_star: requires n >= 1 and reps >= 2");
  std::vector<double> values(reps);
  TrialConfig base = cfg.trial;
  base.n = n;
  base.record_full_probs = false;
  base.seed = detail::oracle_seed(cfg.trial.seed.master_seed);
  parallel_for(reps, threads, [&](std::size_t r) {
    TrialConfig tc = base;
    tc.seed.replication_index = static_cast<std::uint32_t>(r);
    const TrajectorySet tr = run_trial(tc);
    values[r] = least_squares_estimate(tr, cfg.estimand)[static_cast<Eigen::Index>(cfg.estimand.target)];
  });
  return {mean(values), std::sqrt(sample_variance(values) / static_cast<double>(reps)), "monte_carlo"};
}

// Limit-law mean of the target coefficient for the misspecified environment
// under epsilon-greedy with a plain least-squares first-step fit.
inline ThetaStar misspecified_limit_theta_star(const ExperimentConfig& cfg, std::size_t draws = 4000) {
  const auto* env = std::get_if<MisspecifiedLinear>(&cfg.trial.env);
  const auto* pol = std::get_if<ContextualEpsilonGreedy>(&cfg.trial.policy);
  if (!env || !pol || pol->lambda != 0.0 || cfg.trial.T != 2 || cfg.trial.update_every != 1 ||
      cfg.estimand.kind != EstimandSpec::Kind::least_squares || cfg.estimand.outcome_map != OutcomeMap::reward)
    return {std::nullopt, 0.0, "unavailable"};
  MisspecifiedLaw law;
  law.env = *env;
  law.epsilon = pol->epsilon;
  law.S = compute_misspecified_S(*env, law.resolution);
  law.target = cfg.estimand.target;
  Stream s = derive_stream(detail::oracle_seed(cfg.trial.seed.master_seed));
  const auto v = limiting_law_sample(law, draws, s);
  return {mean(v), std::sqrt(sample_variance(v) / static_cast<double>(draws)), "limit_law"};
}

inline ThetaStar resolve_theta_star(const ExperimentConfig& cfg, std::size_t threads) {
  switch (cfg.theta_star.source) {
    case ThetaStarSpec::Source::none:
      return {std::nullopt, 0.0, "none"};
    case ThetaStarSpec::Source::value:
      return {cfg.theta_star.value, 0.0, "configured"};
    case ThetaStarSpec::Source::monte_carlo:
      return monte_carlo_theta_star(cfg, cfg.theta_star.n, cfg.theta_star.reps, threads);
    case ThetaStarSpec::Source::analytic:
      break;
  }
  ThetaStar ts = theta_star_oracle(cfg.trial.env, cfg.trial.policy, cfg.estimand, cfg.trial.T);
  if (!ts.value) ts = misspecified_limit_theta_star(cfg);
  if (!ts.value)
    throw ConfigError("theta_star: no analytic oracle for " + env_name(cfg.trial.env) + " + " +
                      policy_name(cfg.trial.policy) + "; use source=monte_carlo or value");
  return ts;
}

struct HarnessOptions {
  std::size_t threads = 1;
  bool variances = true;
  WarningSink warn;
  std::optional<ThetaStar> theta_star;  // skips resolution when set
};

inline ReplicationSummary run_replications(const ExperimentConfig& cfg, const HarnessOptions& opt = {}) {
  validate(cfg.trial);
  if (cfg.reps < 1) throw ConfigError("reps must be >= 1");
  const auto start = std::chrono::steady_clock::now();

  ReplicationSummary sum;
  sum.name = cfg.name;
  sum.R = cfg.reps;
  sum.n = cfg.trial.n;
  sum.T = cfg.trial.T;
  sum.policy = cfg.trial.policy;
  sum.metric_time = cfg.metric.time;
  sum.theta_star = opt.theta_star ? *opt.theta_star : resolve_theta_star(cfg, opt.threads);
  sum.records.resize(cfg.reps);

  parallel_for(cfg.reps, opt.threads, [&](std::size_t r) {
    TrialConfig tc = cfg.trial;
    tc.seed.replication_index = static_cast<std::uint32_t>(r);
    try {
      const TrajectorySet tr = run_trial(tc);
      const EstimateReport rep = estimate(tr, cfg.estimand, sum.theta_star.value, opt.variances);
      ReplicationRecord& rec = sum.records[r];
      rec.rep = static_cast<std::uint32_t>(r);
      rec.theta_hat = rep.target_theta();
      rec.var_standard = rep.target_var_standard();
      rec.var_adaptive = rep.target_var_adaptive();
      rec.covered_standard = rep.covered_standard;
      rec.covered_adaptive = rep.covered_adaptive;
      if (cfg.metric.time > 0) rec.metric_snapshot = tr.snapshots[tr.snapshot_at[cfg.metric.time - 1]];
    } catch (const Error& e) {
      throw Error("replication " + std::to_string(r) + ": " + e.what());
    }
  });

  const std::vector<double> th = sum.theta_hats();
  sum.mean_theta_hat = mean(th);
  sum.empirical_variance = sample_variance(th);
  auto average = [&](auto getter) -> std::optional<double> {
    double s = 0.0;
    for (const auto& rec : sum.records) {
      const auto v = getter(rec);
      if (!v) return std::nullopt;
      s += static_cast<double>(*v);
    }
    return s / static_cast<double>(sum.records.size());
  };
  sum.mean_var_standard = average([](const ReplicationRecord& r) { return r.var_standard; });
  sum.mean_var_adaptive = average([](const ReplicationRecord& r) { return r.var_adaptive; });
  sum.coverage_standard = average([](const ReplicationRecord& r) { return r.covered_standard; });
  sum.coverage_adaptive = average([](const ReplicationRecord& r) { return r.covered_adaptive; });
  if (!sum.mean_var_adaptive)
    sum.adaptive_na_reason = !opt.variances                          ? "not_computed"
                             : is_differentiable(cfg.trial.policy) ? "unavailable"
                                                                   : "not_differentiable";

  if (cfg.metric.time > 0 && cfg.reps >= 2) {
    const auto pairs = replication_pairing(sum.records, cfg.trial.policy, opt.warn);
    sum.replicability = replicability_metric(pairs, build_grid(cfg.metric.grid));
    sum.replicability_pairs = pairs.size();
  }
  sum.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return sum;
}

// ---------------------------------------------------------------------------
// Output
// ---------------------------------------------------------------------------

namespace detail {

inline json opt_number(const std::optional<double>& v, const std::string& reason) {
  if (v) return *v;
  return json{{"na", reason}};
}

inline std::string opt_csv(const std::optional<double>& v) { return v ? format_double(*v) : "NA"; }

}  // namespace detail

// Deterministic summary (no timing), suitable for byte comparison.
inline json summary_to_json(const ReplicationSummary& s) {
  const std::string reason = s.adaptive_na_reason.empty() ? "unavailable" : s.adaptive_na_reason;
  json j{{"name", s.name},
         {"R", s.R},
         {"n", s.n},
         {"T", s.T},
         {"policy", policy_to_json(s.policy)},
         {"mean_theta_hat", s.mean_theta_hat},
         {"empirical_variance", s.empirical_variance},
         {"mean_var_standard", detail::opt_number(s.mean_var_standard, "unavailable")},
         {"mean_var_adaptive", detail::opt_number(s.mean_var_adaptive, reason)},
         {"coverage_standard", detail::opt_number(s.coverage_standard, "no_theta_star")},
         {"coverage_adaptive",
          detail::opt_number(s.coverage_adaptive, s.mean_var_adaptive ? "no_theta_star" : reason)},
         {"theta_star",
          {{"value", detail::opt_number(s.theta_star.value, s.theta_star.provenance)},
           {"mc_standard_error", s.theta_star.mc_standard_error},
           {"provenance", s.theta_star.provenance}}}};
  if (s.metric_time > 0)
    j["replicability"] = {{"time", s.metric_time},
                          {"pairs", s.replicability_pairs},
                          {"value", detail::opt_number(s.replicability, "too_few_replications")}};
  j["theta_hat"] = s.theta_hats();
  return j;
}

inline const char* summary_csv_header() {
  return "name,R,n,T,theta_star,expected_theta_hat,empirical_variance,estimated_variance_as,"
         "estimated_variance_s,coverage_as,coverage_s,replicability";
}

inline void write_summary_csv(std::ostream& os, const ReplicationSummary& s, bool header = true) {
  if (header) os << summary_csv_header() << '\n';
  os << s.name << ',' << s.R << ',' << s.n << ',' << s.T << ',' << detail::opt_csv(s.theta_star.value) << ','
     << format_double(s.mean_theta_hat) << ',' << format_double(s.empirical_variance) << ','
     << detail::opt_csv(s.mean_var_adaptive) << ',' << detail::opt_csv(s.mean_var_standard) << ','
     << detail::opt_csv(s.coverage_adaptive) << ',' << detail::opt_csv(s.coverage_standard) << ','
     << detail::opt_csv(s.replicability) << '\n';
}

inline void write_theta_csv(std::ostream& os, const ReplicationSummary& s) {
  auto flag = [](const std::optional<bool>& b) -> std::string { return b ? (*b ? "1" : "0") : "NA"; };
  os << "rep,theta_hat,var_standard,var_adaptive,covered_standard,covered_adaptive\n";
  for (const auto& r : s.records)
    os << r.rep << ',' << format_double(r.theta_hat) << ',' << detail::opt_csv(r.var_standard) << ','
       << detail::opt_csv(r.var_adaptive) << ',' << flag(r.covered_standard) << ',' << flag(r.covered_adaptive)
       << '\n';
}

}  // namespace adaptrial
