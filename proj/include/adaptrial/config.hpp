#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptrial/environments.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/estimators.hpp"
#include "adaptrial/policies.hpp"
#include "adaptrial/trial.hpp"

namespace adaptrial {

using json = nlohmann::json;

inline constexpr int kSchemaVersion = 1;

struct PopulationSpec {
  enum class Source { synthetic, file };
  Source source = Source::synthetic;
  std::size_t pool_size = 9;
  std::uint64_t seed = 9;
  std::string path;
};

struct ThetaStarSpec {
  enum class Source { analytic, value, monte_carlo, none };
  Source source = Source::analytic;
  double value = 0.0;
  std::size_t n = 4000;
  std::size_t reps = 200;
};

struct GridSpec {
  enum class Kind { none, constant, scalar, lhs };
  Kind kind = Kind::none;
  double lo = -3.0;
  double hi = 3.0;
  std::size_t points = 201;
  std::uint64_t seed = 1;
};

struct MetricSpec {
  std::size_t time = 0;  // 1-based decision time; 0 disables the metric
  GridSpec grid;
};

struct ExperimentConfig {
  std::string name = "custom";
  TrialConfig trial;
  PopulationSpec population;  // used when the environment is oralytics_zip
  std::size_t reps = 1;
  EstimandSpec estimand;
  ThetaStarSpec theta_star;
  MetricSpec metric;
};

// ---------------------------------------------------------------------------
// Strict JSON readers
// ---------------------------------------------------------------------------

namespace detail {

inline void check_keys(const json& j, std::initializer_list<std::string_view> allowed, const std::string& path) {
  if (!j.is_object()) throw ConfigError(path + ": expected object");
  for (const auto& [key, _] : j.items()) {
    bool ok = false;
    for (auto a : allowed) ok = ok || key == a;
    if (!ok) throw ConfigError(path + (path.empty() ? "" : ".") + key + ": unknown key");
  }
}

inline std::string join(const std::string& path, const char* key) { return path.empty() ? key : path + "." + key; }

inline double get_double(const json& j, const char* key, double def, const std::string& path) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_number()) throw ConfigError(join(path, key) + ": expected number");
  const double d = v.get<double>();
  if (!std::isfinite(d)) throw ConfigError(join(path, key) + ": must be finite");
  return d;
}

inline std::uint64_t get_uint(const json& j, const char* key, std::uint64_t def, const std::string& path) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (v.is_number_unsigned()) return v.get<std::uint64_t>();
  if (v.is_number_integer()) {
    if (v.get<long long>() < 0) throw ConfigError(join(path, key) + ": must be >= 0");
    return static_cast<std::uint64_t>(v.get<long long>());
  }
  if (v.is_number_float()) {
    const double d = v.get<double>();
    if (d >= 0.0 && d == std::floor(d) && d < 1.8e19) return static_cast<std::uint64_t>(d);
  }
  throw ConfigError(join(path, key) + ": expected nonnegative integer");
}

inline bool get_bool(const json& j, const char* key, bool def, const std::string& path) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_boolean()) throw ConfigError(join(path, key) + ": expected boolean");
  return j.at(key).get<bool>();
}

inline std::string get_string(const json& j, const char* key, const std::string& def, const std::string& path) {
  if (!j.contains(key)) return def;
  if (!j.at(key).is_string()) throw ConfigError(join(path, key) + ": expected string");
  return j.at(key).get<std::string>();
}

template <std::size_t N>
std::array<double, N> get_array(const json& j, const char* key, std::array<double, N> def, const std::string& path) {
  if (!j.contains(key)) return def;
  const auto& v = j.at(key);
  if (!v.is_array() || v.size() != N)
    throw ConfigError(join(path, key) + ": expected array of " + std::to_string(N) + " numbers");
  for (std::size_t k = 0; k < N; ++k) {
    if (!v[k].is_number()) throw ConfigError(join(path, key) + ": expected numbers");
    def[k] = v[k].get<double>();
  }
  return def;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Policy
// ---------------------------------------------------------------------------

inline json policy_to_json(const PolicyKind& kind) {
  json j{{"kind", policy_name(kind)}};
  if (auto* k = std::get_if<MabEpsilonGreedy>(&kind)) {
    j["epsilon"] = k->epsilon;
  } else if (auto* k = std::get_if<GaussianThompson>(&kind)) {
    j["prior_mean"] = k->prior_mean;
    j["prior_var"] = k->prior_var;
    j["noise_var"] = k->noise_var;
  } else if (auto* k = std::get_if<ContextualEpsilonGreedy>(&kind)) {
    j["epsilon"] = k->epsilon;
    j["lambda"] = k->lambda;
    j["penalty_per_individual"] = k->penalty_per_individual;
  } else if (auto* k = std::get_if<Boltzmann>(&kind)) {
    j["pi_min"] = k->pi_min;
    j["steepness"] = k->steepness;
    j["lambda"] = k->lambda;
    j["penalty_per_individual"] = k->penalty_per_individual;
  } else if (auto* k = std::get_if<FixedProbability>(&kind)) {
    j["p"] = k->p;
  }
  return j;
}

inline PolicyKind policy_from_json(const json& j, const std::string& path = "policy") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(path + ": expected object");
  const std::string kind = get_string(j, "kind", "", path);
  PolicyKind out;
  if (kind == "mab_epsilon_greedy") {
    check_keys(j, {"kind", "epsilon"}, path);
    out = MabEpsilonGreedy{get_double(j, "epsilon", 0.1, path)};
  } else if (kind == "gaussian_thompson") {
    check_keys(j, {"kind", "prior_mean", "prior_var", "noise_var"}, path);
    out = GaussianThompson{get_double(j, "prior_mean", 0.0, path), get_double(j, "prior_var", 1.0, path),
                           get_double(j, "noise_var", 1.0, path)};
  } else if (kind == "contextual_epsilon_greedy") {
    check_keys(j, {"kind", "epsilon", "lambda", "penalty_per_individual"}, path);
    out = ContextualEpsilonGreedy{get_double(j, "epsilon", 0.2, path), get_double(j, "lambda", 1.0, path),
                                  get_bool(j, "penalty_per_individual", true, path)};
  } else if (kind == "boltzmann") {
    check_keys(j, {"kind", "pi_min", "steepness", "lambda", "penalty_per_individual"}, path);
    out = Boltzmann{get_double(j, "pi_min", 0.1, path), get_double(j, "steepness", 2.0, path),
                    get_double(j, "lambda", 1.0, path), get_bool(j, "penalty_per_individual", true, path)};
  } else if (kind == "fixed") {
    check_keys(j, {"kind", "p"}, path);
    out = FixedProbability{get_double(j, "p", 0.5, path)};
  } else {
    throw ConfigError(path + ".kind: unknown policy '" + kind +
                      "' (expected mab_epsilon_greedy, gaussian_thompson, contextual_epsilon_greedy, boltzmann, fixed)");
  }
  try {
    validate_policy(out);
  } catch (const ConfigError& e) {
    throw ConfigError(std::string(e.what()));
  }
  return out;
}

// ---------------------------------------------------------------------------
// Environment
// ---------------------------------------------------------------------------

inline json population_spec_to_json(const PopulationSpec& p) {
  if (p.source == PopulationSpec::Source::file) return {{"source", "file"}, {"path", p.path}};
  return {{"source", "synthetic"}, {"pool_size", p.pool_size}, {"seed", p.seed}};
}

inline PopulationSpec population_spec_from_json(const json& j, const std::string& path) {
  using namespace detail;
  PopulationSpec p;
  const std::string src = get_string(j, "source", "synthetic", path);
  if (src == "synthetic") {
    check_keys(j, {"source", "pool_size", "seed"}, path);
    p.pool_size = get_uint(j, "pool_size", 9, path);
    p.seed = get_uint(j, "seed", 9, path);
    if (p.pool_size < 1) throw ConfigError(path + ".pool_size: must be >= 1");
  } else if (src == "file") {
    check_keys(j, {"source", "path"}, path);
    p.source = PopulationSpec::Source::file;
    p.path = get_string(j, "path", "", path);
    if (p.path.empty()) throw ConfigError(path + ".path: required for source=file");
  } else {
    throw ConfigError(path + ".source: expected 'synthetic' or 'file'");
  }
  return p;
}

inline std::vector<IndividualParams> resolve_population(const PopulationSpec& p) {
  if (p.source == PopulationSpec::Source::file) return load_population_file(p.path);
  Stream s = derive_stream(SeedSpec{p.seed, 0, "population"});
  return sample_population(PopulationPrior{}, p.pool_size, s);
}

inline json env_to_json(const EnvKind& env, const PopulationSpec& pop) {
  json j{{"kind", env_name(env)}};
  if (auto* e = std::get_if<NonstationaryMab>(&env)) {
    j["mu0"] = e->mu0;
    j["delta1"] = e->delta1;
    j["delta2"] = e->delta2;
  } else if (auto* e = std::get_if<MisspecifiedLinear>(&env)) {
    j["alpha0"] = e->alpha0;
    j["alpha1"] = e->alpha1;
  } else if (auto* e = std::get_if<SyntheticDosage>(&env)) {
    j["alpha0"] = e->alpha0;
    j["alpha1"] = e->alpha1;
    j["alpha2"] = e->alpha2;
    j["gamma"] = e->gamma;
    j["rho"] = e->rho;
    j["noise_sd"] = e->noise_sd;
  } else if (auto* e = std::get_if<OralyticsZip>(&env)) {
    j["population"] = population_spec_to_json(pop);
    j["gamma_window"] = e->gamma_window;
    j["cost"] = {{"xi1", e->cost.xi1}, {"xi2", e->cost.xi2}, {"b", e->cost.b}, {"a1", e->cost.a1}, {"a2", e->cost.a2}};
    j["shrink_factor"] = e->shrink_factor;
    j["shrink_check_interval"] = e->shrink_check_interval;
  }
  return j;
}

inline EnvKind env_from_json(const json& j, PopulationSpec& pop, const std::string& path = "env") {
  using namespace detail;
  if (!j.is_object()) throw ConfigError(path + ": expected object");
  const std::string kind = get_string(j, "kind", "", path);
  if (kind == "nonstationary_mab") {
    check_keys(j, {"kind", "mu0", "delta1", "delta2"}, path);
    return NonstationaryMab{get_double(j, "mu0", 0.0, path), get_double(j, "delta1", 0.0, path),
                            get_double(j, "delta2", -0.25, path)};
  }
  if (kind == "misspecified_linear") {
    check_keys(j, {"kind", "alpha0", "alpha1"}, path);
    MisspecifiedLinear e;
    e.alpha0 = get_array<3>(j, "alpha0", e.alpha0, path);
    e.alpha1 = get_array<3>(j, "alpha1", e.alpha1, path);
    return e;
  }
  if (kind == "synthetic_dosage") {
    check_keys(j, {"kind", "alpha0", "alpha1", "alpha2", "gamma", "rho", "noise_sd"}, path);
    SyntheticDosage e;
    e.alpha0 = get_double(j, "alpha0", e.alpha0, path);
    e.alpha1 = get_double(j, "alpha1", e.alpha1, path);
    e.alpha2 = get_double(j, "alpha2", e.alpha2, path);
    e.gamma = get_double(j, "gamma", e.gamma, path);
    e.rho = get_double(j, "rho", e.rho, path);
    e.noise_sd = get_double(j, "noise_sd", e.noise_sd, path);
    if (!(e.gamma >= 0.0 && e.gamma < 1.0)) throw ConfigError(path + ".gamma: must lie in [0,1)");
    if (!(e.rho >= 0.0 && e.rho < 1.0)) throw ConfigError(path + ".rho: must lie in [0,1)");
    if (!(e.noise_sd > 0.0)) throw ConfigError(path + ".noise_sd: must be > 0");
    return e;
  }
  if (kind == "oralytics_zip") {
    check_keys(j, {"kind", "population", "gamma_window", "cost", "shrink_factor", "shrink_check_interval"}, path);
    OralyticsZip e;
    pop = j.contains("population") ? population_spec_from_json(j.at("population"), path + ".population")
                                   : PopulationSpec{};
    e.gamma_window = get_double(j, "gamma_window", e.gamma_window, path);
    if (j.contains("cost")) {
      const auto& c = j.at("cost");
      const std::string cp = path + ".cost";
      check_keys(c, {"xi1", "xi2", "b", "a1", "a2"}, cp);
      e.cost = {get_double(c, "xi1", 100.0, cp), get_double(c, "xi2", 100.0, cp), get_double(c, "b", 111.0, cp),
                get_double(c, "a1", 0.5, cp), get_double(c, "a2", 0.8, cp)};
      if (!(e.cost.a1 < e.cost.a2)) throw ConfigError(cp + ": requires a1 < a2");
    }
    e.shrink_factor = get_double(j, "shrink_factor", e.shrink_factor, path);
    e.shrink_check_interval = static_cast<int>(get_uint(j, "shrink_check_interval", 14, path));
    if (!(e.gamma_window > 0.0 && e.gamma_window < 1.0)) throw ConfigError(path + ".gamma_window: must lie in (0,1)");
    if (!(e.shrink_factor > 0.0 && e.shrink_factor <= 1.0))
      throw ConfigError(path + ".shrink_factor: must lie in (0,1]");
    if (e.shrink_check_interval < 1) throw ConfigError(path + ".shrink_check_interval: must be >= 1");
    e.population = resolve_population(pop);
    return e;
  }
  throw ConfigError(path + ".kind: unknown environment '" + kind +
                    "' (expected nonstationary_mab, misspecified_linear, synthetic_dosage, oralytics_zip)");
}

// ---------------------------------------------------------------------------
// Estimand, theta*, metric
// ---------------------------------------------------------------------------

inline json estimand_to_json(const EstimandSpec& e) {
  return {{"kind", e.kind == EstimandSpec::Kind::average ? "average" : "least_squares"},
          {"outcome", e.outcome_map == OutcomeMap::outcome ? "outcome" : "reward"},
          {"level", e.level},
          {"target", e.target}};
}

inline EstimandSpec estimand_from_json(const json& j, const std::string& path = "estimand") {
  using namespace detail;
  check_keys(j, {"kind", "outcome", "level", "target"}, path);
  EstimandSpec e;
  const std::string kind = get_string(j, "kind", "average", path);
  if (kind == "average")
    e.kind = EstimandSpec::Kind::average;
  else if (kind == "least_squares")
    e.kind = EstimandSpec::Kind::least_squares;
  else
    throw ConfigError(path + ".kind: expected 'average' or 'least_squares'");
  const std::string out = get_string(j, "outcome", "outcome", path);
  if (out == "outcome")
    e.outcome_map = OutcomeMap::outcome;
  else if (out == "reward")
    e.outcome_map = OutcomeMap::reward;
  else
    throw ConfigError(path + ".outcome: expected 'outcome' or 'reward'");
  e.level = get_double(j, "level", 0.95, path);
  if (!(e.level > 0.0 && e.level < 1.0)) throw ConfigError(path + ".level: must lie in (0,1)");
  e.target = get_uint(j, "target", 0, path);
  return e;
}

inline json theta_star_to_json(const ThetaStarSpec& t) {
  static const char* names[] = {"analytic", "value", "monte_carlo", "none"};
  json j{{"source", names[static_cast<int>(t.source)]}};
  if (t.source == ThetaStarSpec::Source::value) j["value"] = t.value;
  if (t.source == ThetaStarSpec::Source::monte_carlo) {
    j["n"] = t.n;
    j["reps"] = t.reps;
  }
  return j;
}

inline ThetaStarSpec theta_star_from_json(const json& j, const std::string& path = "theta_star") {
  using namespace detail;
  check_keys(j, {"source", "value", "n", "reps"}, path);
  ThetaStarSpec t;
  const std::string src = get_string(j, "source", "analytic", path);
  if (src == "analytic")
    t.source = ThetaStarSpec::Source::analytic;
  else if (src == "value")
    t.source = ThetaStarSpec::Source::value;
  else if (src == "monte_carlo")
    t.source = ThetaStarSpec::Source::monte_carlo;
  else if (src == "none")
    t.source = ThetaStarSpec::Source::none;
  else
    throw ConfigError(path + ".source: expected analytic, value, monte_carlo or none");
  t.value = get_double(j, "value", 0.0, path);
  t.n = get_uint(j, "n", t.n, path);
  t.reps = get_uint(j, "reps", t.reps, path);
  if (t.source == ThetaStarSpec::Source::monte_carlo && (t.n < 1 || t.reps < 2))
    throw ConfigError(path + ": monte_carlo requires n >= 1 and reps >= 2");
  return t;
}

inline json metric_to_json(const MetricSpec& m) {
  static const char* kinds[] = {"none", "constant", "scalar", "lhs"};
  json g{{"kind", kinds[static_cast<int>(m.grid.kind)]}};
  if (m.grid.kind == GridSpec::Kind::scalar) {
    g["lo"] = m.grid.lo;
    g["hi"] = m.grid.hi;
    g["points"] = m.grid.points;
  } else if (m.grid.kind == GridSpec::Kind::lhs) {
    g["points"] = m.grid.points;
    g["seed"] = m.grid.seed;
  }
  return {{"time", m.time}, {"grid", g}};
}

inline MetricSpec metric_from_json(const json& j, const std::string& path = "metric") {
  using namespace detail;
  check_keys(j, {"time", "grid"}, path);
  MetricSpec m;
  m.time = get_uint(j, "time", 0, path);
  if (j.contains("grid")) {
    const auto& g = j.at("grid");
    const std::string gp = path + ".grid";
    check_keys(g, {"kind", "lo", "hi", "points", "seed"}, gp);
    const std::string kind = get_string(g, "kind", "none", gp);
    if (kind == "none")
      m.grid.kind = GridSpec::Kind::none;
    else if (kind == "constant")
      m.grid.kind = GridSpec::Kind::constant;
    else if (kind == "scalar")
      m.grid.kind = GridSpec::Kind::scalar;
    else if (kind == "lhs")
      m.grid.kind = GridSpec::Kind::lhs;
    else
      throw ConfigError(gp + ".kind: expected none, constant, scalar or lhs");
    m.grid.lo = get_double(g, "lo", m.grid.lo, gp);
    m.grid.hi = get_double(g, "hi", m.grid.hi, gp);
    m.grid.points = get_uint(g, "points", m.grid.kind == GridSpec::Kind::lhs ? 10000 : 201, gp);
    m.grid.seed = get_uint(g, "seed", 1, gp);
    if (m.grid.points < 1) throw ConfigError(gp + ".points: must be >= 1");
    if (!(m.grid.lo <= m.grid.hi)) throw ConfigError(gp + ": requires lo <= hi");
  }
  if (m.time > 0 && m.grid.kind == GridSpec::Kind::none) throw ConfigError(path + ": time set but grid.kind is none");
  return m;
}

inline ContextGrid build_grid(const GridSpec& g) {
  switch (g.kind) {
    case GridSpec::Kind::constant:
      return constant_grid();
    case GridSpec::Kind::scalar:
      return scalar_context_grid(g.lo, g.hi, g.points);
    case GridSpec::Kind::lhs: {
      Stream s = derive_stream(SeedSpec{g.seed, 0, "grid"});
      return oralytics_lhs_grid(g.points, s);
    }
    case GridSpec::Kind::none:
      break;
  }
  return {};
}

// ---------------------------------------------------------------------------
// Experiment
// ---------------------------------------------------------------------------

inline json config_to_json(const ExperimentConfig& c) {
  return {{"schema_version", kSchemaVersion},
          {"name", c.name},
          {"n", c.trial.n},
          {"T", c.trial.T},
          {"update_every", c.trial.update_every},
          {"seed", c.trial.seed.master_seed},
          {"reps", c.reps},
          {"record_full_probs", c.trial.record_full_probs},
          {"env", env_to_json(c.trial.env, c.population)},
          {"policy", policy_to_json(c.trial.policy)},
          {"estimand", estimand_to_json(c.estimand)},
          {"theta_star", theta_star_to_json(c.theta_star)},
          {"metric", metric_to_json(c.metric)}};
}

inline ExperimentConfig config_from_json(const json& j) {
  using namespace detail;
  check_keys(j,
             {"schema_version", "name", "n", "T", "update_every", "seed", "reps", "record_full_probs", "env", "policy",
              "estimand", "theta_star", "metric"},
             "");
  const auto version = get_uint(j, "schema_version", 0, "");
  if (version != static_cast<std::uint64_t>(kSchemaVersion))
    throw ConfigError("schema_version: expected " + std::to_string(kSchemaVersion) + ", got " +
                      std::to_string(version));
  ExperimentConfig c;
  c.name = get_string(j, "name", "custom", "");
  c.trial.n = get_uint(j, "n", 100, "");
  c.trial.T = get_uint(j, "T", 2, "");
  c.trial.update_every = get_uint(j, "update_every", 1, "");
  c.trial.seed.master_seed = get_uint(j, "seed", 1, "");
  c.reps = get_uint(j, "reps", 1, "");
  c.trial.record_full_probs = get_bool(j, "record_full_probs", false, "");
  if (!j.contains("env")) throw ConfigError("env: required");
  if (!j.contains("policy")) throw ConfigError("policy: required");
  c.trial.env = env_from_json(j.at("env"), c.population);
  c.trial.policy = policy_from_json(j.at("policy"));
  if (j.contains("estimand")) c.estimand = estimand_from_json(j.at("estimand"));
  if (j.contains("theta_star")) c.theta_star = theta_star_from_json(j.at("theta_star"));
  if (j.contains("metric")) c.metric = metric_from_json(j.at("metric"));
  if (c.reps < 1) throw ConfigError("reps: must be >= 1");
  if (c.trial.n < 1) throw ConfigError("n: must be >= 1");
  if (c.trial.T < 1) throw ConfigError("T: must be >= 1");
  if (c.trial.update_every < 1 || c.trial.update_every > c.trial.T)
    throw ConfigError("update_every: must lie in [1, T]");
  if (c.metric.time > c.trial.T) throw ConfigError("metric.time: must be <= T");
  const std::size_t dim = c.estimand.kind == EstimandSpec::Kind::average ? 1 : 2 * env_feature_dim(c.trial.env);
  if (c.estimand.target >= dim)
    throw ConfigError("estimand.target: must be < " + std::to_string(dim) + " for this estimand");
  if (c.metric.grid.kind == GridSpec::Kind::scalar && env_feature_dim(c.trial.env) != 2)
    throw ConfigError("metric.grid.kind: scalar grid needs a two-feature environment");
  if (c.metric.grid.kind == GridSpec::Kind::constant && env_feature_dim(c.trial.env) != 1)
    throw ConfigError("metric.grid.kind: constant grid needs a one-feature environment");
  if (c.metric.grid.kind == GridSpec::Kind::lhs && env_feature_dim(c.trial.env) != kOralyticsAlgDim)
    throw ConfigError("metric.grid.kind: lhs grid needs the oralytics environment");
  validate(c.trial);
  return c;
}

// Apply a dotted-path override, e.g. "policy.pi_min=0.2" or "n=100000".
// The value is parsed as JSON when possible and kept as a string otherwise.
// Changing env.kind or policy.kind resets that block to the new kind's
// defaults.
inline void apply_override(json& doc, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos || eq == 0) throw ConfigError("--set: expected key=value, got '" + assignment + "'");
  const std::string key = assignment.substr(0, eq);
  const std::string raw = assignment.substr(eq + 1);
  json value;
  try {
    value = json::parse(raw);
  } catch (const json::parse_error&) {
    value = raw;
  }
  std::vector<std::string> parts;
  for (std::size_t start = 0;;) {
    const auto dot = key.find('.', start);
    parts.push_back(key.substr(start, dot - start));
    if (dot == std::string::npos) break;
    start = dot + 1;
  }
  json* node = &doc;
  for (std::size_t k = 0; k + 1 < parts.size(); ++k) {
    if (!node->is_object() || !node->contains(parts[k])) throw ConfigError(key + ": unknown key");
    node = &(*node)[parts[k]];
  }
  const std::string& leaf = parts.back();
  if (!node->is_object()) throw ConfigError(key + ": unknown key");
  if (leaf == "kind" && parts.size() >= 2) {
    *node = json{{"kind", value}};
    return;
  }
  (*node)[leaf] = value;  // unknown leaves are rejected when the document is parsed
}

// ---------------------------------------------------------------------------
// Presets
// ---------------------------------------------------------------------------

struct PresetInfo {
  const char* name;
  const char* description;
};

inline const std::vector<PresetInfo>& preset_list() {
  static const std::vector<PresetInfo> list = {
      {"fig2-epsgreedy", "two-step nonstationary bandit, epsilon-greedy eps=0.1, n=1e5, R=500"},
      {"fig2-ts", "two-step nonstationary bandit, Gaussian Thompson sampling, n=1e5, R=1000"},
      {"fig3", "misspecified linear contextual bandit, epsilon-greedy eps=0.1, n=1e5, R=500"},
      {"table1-boltzmann", "synthetic dosage env, Boltzmann pi_min=0.1 s=2 lambda=1, n=1000, T=50, R=1000"},
      {"table1-epsgreedy", "synthetic dosage env, epsilon-greedy eps=0.2 lambda=1, n=1000, T=50, R=1000"},
      {"table2-boltzmann", "oralytics ZIP env, Boltzmann pi_min=0.2 s=0.05 lambda=3838, n=100, T=140, weekly updates, R=1000"},
      {"table2-epsgreedy", "oralytics ZIP env, epsilon-greedy eps=0.4 lambda=3838, n=100, T=140, weekly updates, R=1000"},
  };
  return list;
}

inline ExperimentConfig preset(const std::string& name) {
  ExperimentConfig c;
  c.name = name;
  c.trial.seed.master_seed = 20240;
  if (name == "fig2-epsgreedy" || name == "fig2-ts") {
    c.trial.n = 100000;
    c.trial.T = 2;
    c.trial.update_every = 1;
    c.trial.env = NonstationaryMab{};
    if (name == "fig2-ts") {
      c.trial.policy = GaussianThompson{};
      c.reps = 1000;
    } else {
      c.trial.policy = MabEpsilonGreedy{0.1};
      c.reps = 500;
    }
    c.estimand = {EstimandSpec::Kind::average, OutcomeMap::reward, 0.95, 0};
    c.theta_star.source = ThetaStarSpec::Source::analytic;
    c.metric = {2, {GridSpec::Kind::constant}};
  } else if (name == "fig3") {
    c.trial.n = 100000;
    c.trial.T = 2;
    c.trial.update_every = 1;
    c.trial.env = MisspecifiedLinear{};
    c.trial.policy = ContextualEpsilonGreedy{0.1, 0.0, true};
    c.reps = 500;
    c.estimand = {EstimandSpec::Kind::least_squares, OutcomeMap::reward, 0.95, 2};
    c.theta_star.source = ThetaStarSpec::Source::none;
    c.metric = {2, {GridSpec::Kind::scalar, 0.0, 1.0, 201}};
  } else if (name == "table1-boltzmann" || name == "table1-epsgreedy") {
    c.trial.n = 1000;
    c.trial.T = 50;
    c.trial.update_every = 1;
    c.trial.env = SyntheticDosage{};
    if (name == "table1-boltzmann")
      c.trial.policy = Boltzmann{0.1, 2.0, 1.0, true};
    else
      c.trial.policy = ContextualEpsilonGreedy{0.2, 1.0, true};
    c.reps = 1000;
    c.estimand = {EstimandSpec::Kind::average, OutcomeMap::outcome, 0.95, 0};
    c.theta_star = {ThetaStarSpec::Source::monte_carlo, 0.0, 4000, 2000};
    c.metric = {25, {GridSpec::Kind::scalar, -3.0, 3.0, 201}};
  } else if (name == "table2-boltzmann" || name == "table2-epsgreedy") {
    c.trial.n = 100;
    c.trial.T = 140;
    c.trial.update_every = 14;
    OralyticsZip env;
    env.population = resolve_population(c.population);
    c.trial.env = env;
    if (name == "table2-boltzmann")
      c.trial.policy = Boltzmann{0.2, 0.05, 3838.0, true};
    else
      c.trial.policy = ContextualEpsilonGreedy{0.4, 3838.0, true};
    c.reps = 1000;
    c.estimand = {EstimandSpec::Kind::average, OutcomeMap::outcome, 0.95, 0};
    c.theta_star = {ThetaStarSpec::Source::monte_carlo, 0.0, 2000, 200};
    c.metric = {70, {GridSpec::Kind::lhs, 0.0, 0.0, 10000, 1}};
  } else {
    std::string known;
    for (const auto& p : preset_list()) known += std::string(known.empty() ? "" : ", ") + p.name;
    throw ConfigError("preset: unknown '" + name + "' (known: " + known + ")");
  }
  return c;
}

// Build an experiment from an optional preset, an optional JSON file, and
// overrides applied in order.
inline ExperimentConfig resolve_config(const std::optional<std::string>& preset_name, const std::optional<json>& file,
                                       const std::vector<std::string>& overrides) {
  json doc;
  if (file) {
    doc = *file;
    if (preset_name) throw ConfigError("--preset and --config are mutually exclusive");
  } else if (preset_name) {
    doc = config_to_json(preset(*preset_name));
  } else {
    throw ConfigError("a --preset or --config is required");
  }
  for (const auto& o : overrides) apply_override(doc, o);
  return config_from_json(doc);
}

}  // namespace adaptrial
