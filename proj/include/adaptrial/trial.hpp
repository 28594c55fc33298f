#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "adaptrial/environments.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/policies.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

// ---------------------------------------------------------------------------
// Per-environment simulators
//
// Each simulator exposes the same shape:
//   context_dim(), feature_dim()
//   State init(i, env_stream)
//   void context(State&, t, env_stream, ctx)     (t is 0-based)
//   void features(ctx, phi)
//   StepResult step(State&, ctx, action, t, env_stream)
// ---------------------------------------------------------------------------

class MabSimulator {
 public:
  struct State {};

  MabSimulator(const NonstationaryMab& env, std::size_t T) : env_(env) {
    if (T != 2) throw ConfigError("nonstationary environment requires T = 2");
  }

  std::size_t context_dim() const { return 0; }
  std::size_t feature_dim() const { return 1; }
  State init(std::size_t, Stream&) const { return {}; }
  void context(State&, std::size_t, Stream&, std::span<double>) const {}
  void features(std::span<const double>, std::span<double> phi) const { phi[0] = 1.0; }

  StepResult step(State&, std::span<const double>, int action, std::size_t t, Stream& s) const {
    const double r = nonstationary_reward(env_, action, static_cast<int>(t) + 1, s.normal());
    return {r, r};
  }

 private:
  NonstationaryMab env_;
};

class MisspecifiedSimulator {
 public:
  struct State {};

  MisspecifiedSimulator(const MisspecifiedLinear& env, std::size_t) : env_(env) {}

  std::size_t context_dim() const { return 1; }
  std::size_t feature_dim() const { return 2; }
  State init(std::size_t, Stream&) const { return {}; }
  void context(State&, std::size_t, Stream& s, std::span<double> ctx) const { ctx[0] = s.uniform(); }

  void features(std::span<const double> ctx, std::span<double> phi) const {
    phi[0] = 1.0;
    phi[1] = ctx[0];
  }

  StepResult step(State&, std::span<const double> ctx, int action, std::size_t, Stream& s) const {
    const double r = misspecified_reward(env_, ctx[0], action, s.normal());
    return {r, r};
  }

 private:
  MisspecifiedLinear env_;
};

// Context X_t is the previous reward (0 at the first decision).
class SyntheticSimulator {
 public:
  struct State {
    double dosage = 0.0;
    double previous_reward = 0.0;
    std::vector<double> noise;
  };

  SyntheticSimulator(const SyntheticDosage& env, std::size_t T) : env_(env), T_(T) {
    if (!(env.gamma >= 0.0 && env.gamma < 1.0)) throw ConfigError("env.gamma must lie in [0,1)");
    if (!(env.rho >= 0.0 && env.rho < 1.0)) throw ConfigError("env.rho must lie in [0,1)");
    if (!(env.noise_sd > 0.0)) throw ConfigError("env.noise_sd must be > 0");
  }

  std::size_t context_dim() const { return 1; }
  std::size_t feature_dim() const { return 2; }

  State init(std::size_t, Stream& s) const {
    State st;
    st.noise = sample_ar1_noise(s, T_, env_.rho, env_.noise_sd).values;
    return st;
  }

  void context(State& st, std::size_t, Stream&, std::span<double> ctx) const { ctx[0] = st.previous_reward; }

  void features(std::span<const double> ctx, std::span<double> phi) const {
    phi[0] = 1.0;
    phi[1] = ctx[0];
  }

  StepResult step(State& st, std::span<const double>, int action, std::size_t t, Stream&) const {
    const double y = synthetic_reward(env_, st.dosage, action, st.noise[t]);
    st.dosage = dosage_advance(st.dosage, action, env_.gamma);
    st.previous_reward = y;
    return {y, y};
  }

 private:
  SyntheticDosage env_;
  std::size_t T_;
};

// Two decision points per day (even t morning, odd t evening). The
// algorithm sees the first five environment features.
class OralyticsSimulator {
 public:
  struct State {
    IndividualParams params;
    WeeklyWindow brushing{13.0 / 14.0};
    WeeklyWindow prompts{13.0 / 14.0};
    ResponsivityState responsivity;
    bool prior_day_app = false;
  };

  OralyticsSimulator(const OralyticsZip& env, std::size_t T) : env_(env), T_(T) {
    if (env.population.empty()) throw ConfigError("env.population is empty");
    if (!(env.gamma_window > 0.0 && env.gamma_window < 1.0)) throw ConfigError("env.gamma_window must lie in (0,1)");
    if (!(env.shrink_factor > 0.0 && env.shrink_factor <= 1.0))
      throw ConfigError("env.shrink_factor must lie in (0,1]");
    if (env.shrink_check_interval < 1) throw ConfigError("env.shrink_check_interval must be >= 1");
    if (!(env.cost.a1 < env.cost.a2)) throw ConfigError("env.cost requires a1 < a2");
    days_ = std::max<std::size_t>(1, (T + 1) / 2);
  }

  std::size_t context_dim() const { return kOralyticsEnvDim; }
  std::size_t feature_dim() const { return kOralyticsAlgDim; }

  State init(std::size_t, Stream& s) const {
    State st{sample_population(env_.population, 1, s).front(), WeeklyWindow(env_.gamma_window),
             WeeklyWindow(env_.gamma_window), {}, false};
    return st;
  }

  void context(State& st, std::size_t t, Stream&, std::span<double> g) const {
    const std::size_t day = t / 2;  // 0-based
    g[0] = 1.0;
    g[1] = static_cast<double>(t % 2);
    g[2] = 2.0 * st.brushing.value() / kMaxBrushSeconds - 1.0;
    g[3] = 2.0 * st.prompts.value() - 1.0;
    g[4] = st.prior_day_app ? 1.0 : 0.0;
    g[5] = (day % 7 == 5 || day % 7 == 6) ? 1.0 : 0.0;
    g[6] = days_ > 1 ? 2.0 * static_cast<double>(day) / static_cast<double>(days_ - 1) - 1.0 : 0.0;
  }

  void features(std::span<const double> g, std::span<double> phi) const {
    for (std::size_t k = 0; k < kOralyticsAlgDim; ++k) phi[k] = g[k];
  }

  StepResult step(State& st, std::span<const double> g, int action, std::size_t t, Stream& s) const {
    EnvFeatures ge{};
    std::copy(g.begin(), g.end(), ge.begin());
    const double shrink = st.responsivity.shrink(env_.shrink_factor);
    const long long raw = oralytics_outcome(st.params, ge, action, shrink, s);
    const double quality = std::min(kMaxBrushSeconds, static_cast<double>(raw));
    const double bar_B = st.brushing.value();
    const double bar_A = st.prompts.value();
    const double cost = oralytics_cost(bar_B, bar_A, action, env_.cost);
    const ShrinkThresholds th{env_.cost.b, env_.cost.a1, env_.cost.a2};
    st.responsivity =
        responsivity_shrink_step(st.responsivity, static_cast<int>(t), bar_B, bar_A, th, env_.shrink_check_interval);
    st.brushing.push(quality);
    st.prompts.push(static_cast<double>(action));
    if (t % 2 == 1) st.prior_day_app = app_engagement_step(st.params.p_app, s);
    return {quality, quality - cost};
  }

 private:
  OralyticsZip env_;
  std::size_t T_;
  std::size_t days_ = 1;
};

template <class Env>
struct SimulatorFor;
template <>
struct SimulatorFor<NonstationaryMab> {
  using type = MabSimulator;
};
template <>
struct SimulatorFor<MisspecifiedLinear> {
  using type = MisspecifiedSimulator;
};
template <>
struct SimulatorFor<SyntheticDosage> {
  using type = SyntheticSimulator;
};
template <>
struct SimulatorFor<OralyticsZip> {
  using type = OralyticsSimulator;
};

inline std::string env_name(const EnvKind& env) {
  static const char* names[] = {"nonstationary_mab", "misspecified_linear", "synthetic_dosage", "oralytics_zip"};
  return names[env.index()];
}

inline std::size_t env_feature_dim(const EnvKind& env) {
  static const std::size_t dims[] = {1, 2, 2, kOralyticsAlgDim};
  return dims[env.index()];
}

inline std::size_t env_context_dim(const EnvKind& env) {
  static const std::size_t dims[] = {0, 1, 1, kOralyticsEnvDim};
  return dims[env.index()];
}

// ---------------------------------------------------------------------------
// Trial configuration and trajectories
// ---------------------------------------------------------------------------

struct TrialConfig {
  std::size_t n = 100;
  std::size_t T = 2;
  EnvKind env = NonstationaryMab{};
  PolicyKind policy = MabEpsilonGreedy{};
  std::size_t update_every = 1;
  SeedSpec seed{};  // role_tag is ignored; roles are fixed per draw site
  bool record_full_probs = false;
};

inline void validate(const TrialConfig& c) {
  if (c.n < 1) throw ConfigError("n must be >= 1");
  if (c.T < 1) throw ConfigError("T must be >= 1");
  if (c.update_every < 1 || c.update_every > c.T) throw ConfigError("update_every must lie in [1, T]");
  validate_policy(c.policy);
  std::visit([&](const auto& e) { typename SimulatorFor<std::decay_t<decltype(e)>>::type sim(e, c.T); }, c.env);
}

// Columnar trajectories; cell (i, t) lives at i * T + t.
struct TrajectorySet {
  std::size_t n = 0;
  std::size_t T = 0;
  std::size_t context_dim = 0;
  std::size_t feature_dim = 0;
  std::uint32_t replication_index = 0;
  PolicyKind policy;

  std::vector<double> context;  // n*T*context_dim
  std::vector<double> phi;      // n*T*feature_dim
  std::vector<int> action;
  std::vector<double> propensity;  // probability of the realized action
  std::vector<double> prob1;       // probability of action 1; empty unless recorded
  std::vector<double> outcome;
  std::vector<double> reward;

  std::vector<PolicySnapshot> snapshots;  // [0] is the initial, unfitted policy
  std::vector<std::size_t> snapshot_at;   // decision t -> index into snapshots

  std::size_t cell(std::size_t i, std::size_t t) const { return i * T + t; }

  std::span<const double> phi_at(std::size_t i, std::size_t t) const {
    return std::span<const double>(phi).subspan(cell(i, t) * feature_dim, feature_dim);
  }
  std::span<const double> context_at(std::size_t i, std::size_t t) const {
    return std::span<const double>(context).subspan(cell(i, t) * context_dim, context_dim);
  }
};

namespace detail {

template <class Sim>
TrajectorySet run_trial_with(const Sim& sim, const TrialConfig& cfg) {
  const std::size_t n = cfg.n, T = cfg.T;
  const std::size_t cd = sim.context_dim(), fd = sim.feature_dim();

  TrajectorySet tr;
  tr.n = n;
  tr.T = T;
  tr.context_dim = cd;
  tr.feature_dim = fd;
  tr.replication_index = cfg.seed.replication_index;
  tr.policy = cfg.policy;
  tr.context.resize(n * T * cd);
  tr.phi.resize(n * T * fd);
  tr.action.resize(n * T);
  tr.propensity.resize(n * T);
  if (cfg.record_full_probs) tr.prob1.resize(n * T);
  tr.outcome.resize(n * T);
  tr.reward.resize(n * T);
  tr.snapshot_at.resize(T);
  tr.snapshots.emplace_back();

  SeedSpec env_spec = cfg.seed, pol_spec = cfg.seed;
  env_spec.role_tag = "env";
  pol_spec.role_tag = "policy";

  std::vector<Stream> env_streams, pol_streams;
  std::vector<typename Sim::State> states;
  env_streams.reserve(n);
  pol_streams.reserve(n);
  states.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    env_streams.push_back(derive_stream(env_spec, i));
    pol_streams.push_back(derive_stream(pol_spec, i));
    states.push_back(sim.init(i, env_streams.back()));
  }

  PolicyLearner learner(fd, uses_linear_statistic(cfg.policy));
  for (std::size_t t = 0; t < T; ++t) {
    const std::size_t snap_idx = tr.snapshots.size() - 1;
    tr.snapshot_at[t] = snap_idx;
    const PolicySnapshot& snap = tr.snapshots[snap_idx];
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = tr.cell(i, t);
      std::span<double> ctx(tr.context.data() + c * cd, cd);
      std::span<double> phi(tr.phi.data() + c * fd, fd);
      sim.context(states[i], t, env_streams[i], ctx);
      sim.features(ctx, phi);
      const double p1 = prob_action1(cfg.policy, snap, phi);
      const ActionDraw a = select_action(p1, pol_streams[i]);
      const StepResult r = sim.step(states[i], ctx, a.action, t, env_streams[i]);
      tr.action[c] = a.action;
      tr.propensity[c] = a.propensity;
      if (cfg.record_full_probs) tr.prob1[c] = p1;
      tr.outcome[c] = r.outcome;
      tr.reward[c] = r.reward;
    }
    for (std::size_t i = 0; i < n; ++i) {
      const std::size_t c = tr.cell(i, t);
      learner.add(tr.phi_at(i, t), tr.action[c], tr.reward[c]);
    }
    if ((t + 1) % cfg.update_every == 0) tr.snapshots.push_back(learner.fit(cfg.policy, static_cast<int>(t), n));
  }
  return tr;
}

}  // namespace detail

inline TrajectorySet run_trial(const TrialConfig& cfg) {
  validate(cfg);
  return std::visit(
      [&](const auto& e) {
        using Sim = typename SimulatorFor<std::decay_t<decltype(e)>>::type;
        return detail::run_trial_with(Sim(e, cfg.T), cfg);
      },
      cfg.env);
}

struct TrialSummary {
  std::vector<double> mean_reward_per_individual;
  std::vector<double> action1_frequency;  // per decision time
  double mean_reward = 0.0;
  double mean_outcome = 0.0;
  PolicySnapshot final_snapshot;
};

inline TrialSummary summarize_trial(const TrajectorySet& tr) {
  TrialSummary s;
  s.mean_reward_per_individual.assign(tr.n, 0.0);
  s.action1_frequency.assign(tr.T, 0.0);
  double total_r = 0.0, total_y = 0.0;
  for (std::size_t i = 0; i < tr.n; ++i) {
    double ri = 0.0;
    for (std::size_t t = 0; t < tr.T; ++t) {
      const std::size_t c = tr.cell(i, t);
      ri += tr.reward[c];
      total_y += tr.outcome[c];
      s.action1_frequency[t] += tr.action[c];
    }
    s.mean_reward_per_individual[i] = ri / static_cast<double>(tr.T);
    total_r += ri;
  }
  const double cells = static_cast<double>(tr.n * tr.T);
  for (auto& f : s.action1_frequency) f /= static_cast<double>(tr.n);
  s.mean_reward = total_r / cells;
  s.mean_outcome = total_y / cells;
  if (!tr.snapshots.empty()) s.final_snapshot = tr.snapshots.back();
  return s;
}

}  // namespace adaptrial
