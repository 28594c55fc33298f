#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <fstream>
#include <optional>
#include <span>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptrial/error.hpp"
#include "adaptrial/math.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

// Outcome of one environment step: Y (the analysis outcome) and R(Y) (what
// the bandit learns from).
struct StepResult {
  double outcome = 0.0;
  double reward = 0.0;
};

// ---------------------------------------------------------------------------
// Primitive data-generating formulas
// ---------------------------------------------------------------------------

// Two-decision-time environment whose treatment effect decays from delta1 to
// delta2.
struct NonstationaryMab {
  double mu0 = 0.0;
  double delta1 = 0.0;
  double delta2 = -0.25;
};

inline double nonstationary_reward(const NonstationaryMab& env, int action, int t, double noise) {
  if (t != 1 && t != 2) throw DomainError("nonstationary_reward: t must be 1 or 2");
  const double delta = t == 1 ? env.delta1 : env.delta2;
  return env.mu0 + delta * action + noise;
}

// True mean reward is quadratic in x; the bandit and the analyst fit a line.
struct MisspecifiedLinear {
  std::array<double, 3> alpha0{0.1, 0.1, 0.0};
  std::array<double, 3> alpha1{1.0 / 3.0, -2.0, 2.0};
};

inline double misspecified_mean(const MisspecifiedLinear& env, double x, int action) {
  const double base = env.alpha0[0] + env.alpha0[1] * x + env.alpha0[2] * x * x;
  const double adv = env.alpha1[0] + env.alpha1[1] * x + env.alpha1[2] * x * x;
  return base + action * adv;
}

inline double misspecified_reward(const MisspecifiedLinear& env, double x, int action,
                                  double noise) {
  if (!(x >= 0.0 && x <= 1.0)) throw DomainError("misspecified_reward: x must lie in [0,1]");
  return misspecified_mean(env, x, action) + noise;
}

// Mean outcome rises with the discounted share of past treatments ("dosage").
struct SyntheticDosage {
  double alpha0 = 0.0;
  double alpha1 = 1.0;
  double alpha2 = 0.0;
  double gamma = 0.95;
  double rho = 0.70710678118654752440;  // sqrt(0.5): Corr = 0.5^{|t-s|/2}
  double noise_sd = 1.0;
};

// gamma * d + (1 - gamma) * a keeps d equal to (1-gamma) sum gamma^{t-1-t'} a_t'.
inline double dosage_advance(double dosage, int action, double gamma) {
  return gamma * dosage + (1.0 - gamma) * action;
}

inline double synthetic_reward(const SyntheticDosage& env, double dosage, int action,
                               double noise) {
  return env.alpha0 + env.alpha1 * dosage + env.alpha2 * action + noise;
}

// Expected average outcome over T decision times under a fixed treatment
// probability p, starting from zero dosage.
inline double synthetic_fixed_policy_mean(const SyntheticDosage& env, std::size_t T, double p) {
  const double g = env.gamma;
  const double td = static_cast<double>(T);
  const double mean_dosage = p * (1.0 - (1.0 - std::pow(g, td)) / (td * (1.0 - g)));
  return env.alpha0 + env.alpha1 * mean_dosage + env.alpha2 * p;
}

// ---------------------------------------------------------------------------
// Oralytics-style zero-inflated Poisson environment
// ---------------------------------------------------------------------------

inline constexpr std::size_t kOralyticsEnvDim = 7;
inline constexpr std::size_t kOralyticsAlgDim = 5;
inline constexpr double kMaxBrushSeconds = 180.0;

using EnvFeatures = std::array<double, kOralyticsEnvDim>;

struct IndividualParams {
  EnvFeatures w_b{};      // Bernoulli (non-brushing) logit weights
  EnvFeatures w_p{};      // Poisson log-rate weights
  EnvFeatures delta_B{};  // Bernoulli advantage
  EnvFeatures delta_N{};  // Poisson advantage
  double p_app = 0.5;
};

struct CostParams {
  double xi1 = 100.0;
  double xi2 = 100.0;
  double b = 111.0;
  double a1 = 0.5;
  double a2 = 0.8;
};

struct OralyticsZip {
  std::vector<IndividualParams> population;  // pool sampled with replacement
  double gamma_window = 13.0 / 14.0;
  CostParams cost;
  double shrink_factor = 0.5;
  int shrink_check_interval = 14;
};

inline double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

inline long long oralytics_outcome(const IndividualParams& params, const EnvFeatures& g,
                                   int action, double shrink, Stream& stream) {
  if (!(shrink > 0.0 && shrink <= 1.0)) throw DomainError("oralytics_outcome: shrink must lie in (0,1]");
  const double adv_b = std::max(shrink * dot(params.delta_B, g), 0.0);
  const double adv_n = std::max(shrink * dot(params.delta_N, g), 0.0);
  const double p_brush = 1.0 - sigmoid(dot(g, params.w_b) - action * adv_b);
  const bool brushed = stream.bernoulli(p_brush);
  const double rate = std::exp(dot(g, params.w_p) + action * adv_n);
  const long long seconds = stream.poisson(rate);
  return brushed ? seconds : 0;
}

inline double oralytics_cost(double bar_B, double bar_A, int action, const CostParams& c) {
  if (action == 0) return 0.0;
  double cost = 0.0;
  if (bar_B > c.b && bar_A > c.a1) cost += c.xi1;
  if (bar_A > c.a2) cost += c.xi2;
  return cost;
}

// Normalized discounted average over a hard window of the last N raw values:
// value = c * sum_{j=1}^{N} gamma^{j-1} v_{t-j}, c = (1-gamma)/(1-gamma^N).
// Slots not yet filled count as zero.
template <std::size_t N>
class DiscountedWindow {
 public:
  explicit DiscountedWindow(double gamma) : gamma_(gamma) {
    if (!(gamma > 0.0 && gamma < 1.0)) throw ConfigError("discounted window: gamma must lie in (0,1)");
    scale_ = (1.0 - gamma) / (1.0 - std::pow(gamma, static_cast<double>(N)));
  }

  void push(double v) {
    head_ = (head_ + 1) % N;
    buf_[head_] = v;
  }

  double value() const {
    double s = 0.0, w = 1.0;
    for (std::size_t j = 0; j < N; ++j) {
      s += w * buf_[(head_ + N - j) % N];
      w *= gamma_;
    }
    return scale_ * s;
  }

  double scale() const { return scale_; }

 private:
  double gamma_;
  double scale_ = 1.0;
  std::array<double, N> buf_{};
  std::size_t head_ = N - 1;
};

using WeeklyWindow = DiscountedWindow<14>;

// Convenience form of a single window update: returns the window value after
// pushing new_value onto `window`.
template <std::size_t N>
double exp_average_update(DiscountedWindow<N>& window, double new_value) {
  window.push(new_value);
  return window.value();
}

struct ShrinkThresholds {
  double b = 111.0;
  double a1 = 0.5;
  double a2 = 0.8;
};

// Delayed-effect bookkeeping. Until the criterion first fires it is checked
// at every decision time; afterwards only every `interval` decision times.
// A scheduled check that fails restores full responsiveness and returns to
// checking at every decision time.
struct ResponsivityState {
  int shrink_exponent = 0;
  std::optional<int> next_check;

  double shrink(double factor) const { return std::pow(factor, shrink_exponent); }
};

inline bool responsivity_criterion(double bar_B, double bar_A, const ShrinkThresholds& th) {
  return (bar_B > th.b && bar_A > th.a1) || bar_A > th.a2;
}

inline ResponsivityState responsivity_shrink_step(ResponsivityState state, int t, double bar_B,
                                                  double bar_A, const ShrinkThresholds& th,
                                                  int interval = 14) {
  const bool eligible = !state.next_check || t >= *state.next_check;
  if (!eligible) return state;
  if (responsivity_criterion(bar_B, bar_A, th)) {
    ++state.shrink_exponent;
    state.next_check = t + interval;
  } else if (state.next_check) {
    state.shrink_exponent = 0;
    state.next_check.reset();
  }
  return state;
}

inline bool app_engagement_step(double p_app, Stream& stream) {
  if (!(p_app >= 0.0 && p_app <= 1.0)) throw DomainError("app engagement: p_app must lie in [0,1]");
  return stream.bernoulli(p_app);
}

// Synthetic prior for individual parameters, used when no pilot-fit file is
// supplied. Intercepts centre brushing near 100 s with ~75% brushing rate.
struct PopulationPrior {
  double bern_intercept_mean = -1.0;
  double bern_sd = 0.5;
  double pois_intercept_mean = 4.6;
  double pois_sd = 0.1;
  double delta_bern_sd = 0.5;
  double delta_pois_sd = 0.1;
  double app_alpha = 2.0;  // p_app ~ Beta(app_alpha, app_beta)
  double app_beta = 2.0;
};

inline IndividualParams sample_prior_individual(const PopulationPrior& prior, Stream& s) {
  IndividualParams p;
  for (std::size_t k = 0; k < kOralyticsEnvDim; ++k) {
    p.w_b[k] = s.normal(k == 0 ? prior.bern_intercept_mean : 0.0, prior.bern_sd);
    p.w_p[k] = s.normal(k == 0 ? prior.pois_intercept_mean : 0.0, prior.pois_sd);
    p.delta_B[k] = s.normal(0.0, prior.delta_bern_sd);
    p.delta_N[k] = s.normal(0.0, prior.delta_pois_sd);
  }
  std::gamma_distribution<double> ga(prior.app_alpha, 1.0), gb(prior.app_beta, 1.0);
  const double x = ga(s.engine()), y = gb(s.engine());
  p.p_app = x / (x + y);
  return p;
}

// Parse the population parameter file: a JSON array of objects
// {w_b: [7], w_p: [7], delta_B: [7], delta_N: [7], p_app: real}.
inline std::vector<IndividualParams> parse_population(const nlohmann::json& doc) {
  if (!doc.is_array()) throw ParseError("population: top level must be a JSON array");
  std::vector<IndividualParams> pool;
  for (std::size_t idx = 0; idx < doc.size(); ++idx) {
    const auto& obj = doc[idx];
    auto where = [&](const std::string& field) {
      return "population[" + std::to_string(idx) + "]." + field;
    };
    if (!obj.is_object()) throw ParseError(where("") + ": expected object");
    for (const auto& [key, _] : obj.items()) {
      if (key != "w_b" && key != "w_p" && key != "delta_B" && key != "delta_N" && key != "p_app")
        throw ParseError(where(key) + ": unknown field");
    }
    auto vec7 = [&](const char* field, EnvFeatures& out) {
      if (!obj.contains(field)) throw ParseError(where(field) + ": missing");
      const auto& a = obj.at(field);
      if (!a.is_array() || a.size() != kOralyticsEnvDim)
        throw ParseError(where(field) + ": expected array of 7 numbers");
      for (std::size_t k = 0; k < kOralyticsEnvDim; ++k) {
        if (!a[k].is_number()) throw ParseError(where(field) + ": non-numeric entry");
        out[k] = a[k].get<double>();
        if (!std::isfinite(out[k])) throw ParseError(where(field) + ": non-finite entry");
      }
    };
    IndividualParams p;
    vec7("w_b", p.w_b);
    vec7("w_p", p.w_p);
    vec7("delta_B", p.delta_B);
    vec7("delta_N", p.delta_N);
    if (!obj.contains("p_app") || !obj.at("p_app").is_number())
      throw ParseError(where("p_app") + ": missing or non-numeric");
    p.p_app = obj.at("p_app").get<double>();
    if (!(p.p_app >= 0.0 && p.p_app <= 1.0)) throw ParseError(where("p_app") + ": must lie in [0,1]");
    pool.push_back(p);
  }
  if (pool.empty()) throw ParseError("population: empty array");
  return pool;
}

inline std::vector<IndividualParams> load_population_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ParseError("population: cannot open " + path);
  nlohmann::json doc;
  try {
    doc = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError("population: " + path + ": " + e.what());
  }
  return parse_population(doc);
}

inline nlohmann::json population_to_json(const std::vector<IndividualParams>& pool) {
  nlohmann::json out = nlohmann::json::array();
  for (const auto& p : pool) {
    out.push_back({{"w_b", p.w_b},
                   {"w_p", p.w_p},
                   {"delta_B", p.delta_B},
                   {"delta_N", p.delta_N},
                   {"p_app", p.p_app}});
  }
  return out;
}

// Draw n individuals with replacement from a pool.
inline std::vector<IndividualParams> sample_population(const std::vector<IndividualParams>& pool,
                                                       std::size_t n, Stream& s) {
  if (n < 1) throw ConfigError("sample_population: n must be >= 1");
  if (pool.empty()) throw ConfigError("sample_population: empty pool");
  std::vector<IndividualParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto k = static_cast<std::size_t>(s.uniform() * static_cast<double>(pool.size()));
    out.push_back(pool[std::min(k, pool.size() - 1)]);
  }
  return out;
}

inline std::vector<IndividualParams> sample_population(const PopulationPrior& prior,
                                                       std::size_t n, Stream& s) {
  if (n < 1) throw ConfigError("sample_population: n must be >= 1");
  std::vector<IndividualParams> out;
  out.reserve(n);
  for (std::size_t i = 0; i < n; ++i) out.push_back(sample_prior_individual(prior, s));
  return out;
}

using EnvKind = std::variant<NonstationaryMab, MisspecifiedLinear, SyntheticDosage, OralyticsZip>;

}  // namespace adaptrial
