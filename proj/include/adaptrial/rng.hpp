#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

#include "adaptrial/error.hpp"

namespace adaptrial {

// SplitMix64 output function; used both to derive stream keys and to seed
// the xoshiro state.
constexpr std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ull);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

constexpr std::uint64_t mix64(std::uint64_t x) {
  std::uint64_t s = x;
  return splitmix64(s);
}

constexpr std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (char c : s) {
    h ^= static_cast<unsigned char>(c);
    h *= 0x100000001b3ull;
  }
  return h;
}

// xoshiro256** 1.0; satisfies UniformRandomBitGenerator.
class Xoshiro256 {
 public:
  using result_type = std::uint64_t;

  explicit Xoshiro256(std::uint64_t seed = 0) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  static constexpr result_type min() { return 0; }
  static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

  result_type operator()() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  friend bool operator==(const Xoshiro256&, const Xoshiro256&) = default;

 private:
  static constexpr std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

struct SeedSpec {
  std::uint64_t master_seed = 0;
  std::uint32_t replication_index = 0;
  std::string role_tag;
};

// A random stream. Value-like: copy it to fork an identical sequence, move it
// across threads freely, never share one instance between threads.
class Stream {
 public:
  explicit Stream(std::uint64_t key) : engine_(key) {}

  std::uint64_t next_u64() { return engine_(); }

  // Uniform on [0, 1) with 53 bits of resolution.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }
  double uniform(double a, double b) { return a + (b - a) * uniform(); }

  double normal() { return std_normal_(engine_); }
  double normal(double mean, double sd) { return mean + sd * normal(); }

  bool bernoulli(double p) { return uniform() < p; }

  long long poisson(double lambda) {
    if (lambda <= 0.0) return 0;
    return std::poisson_distribution<long long>(lambda)(engine_);
  }

  Xoshiro256& engine() { return engine_; }

 private:
  Xoshiro256 engine_;
  std::normal_distribution<double> std_normal_{0.0, 1.0};
};

// Stream key for (master, replication, role, index). The index lets the trial
// engine derive one stream per individual so that growing n extends rather
// than reshuffles earlier individuals' draws.
inline std::uint64_t stream_key(const SeedSpec& spec, std::uint64_t index = 0) {
  std::uint64_t h = mix64(spec.master_seed ^ 0x243f6a8885a308d3ull);
  h = mix64(h ^ (static_cast<std::uint64_t>(spec.replication_index) + 0x13198a2e03707344ull));
  h = mix64(h ^ fnv1a(spec.role_tag));
  h = mix64(h ^ (index * 0xa4093822299f31d0ull + 0x082efa98ec4e6c89ull));
  return h;
}

inline Stream derive_stream(const SeedSpec& spec, std::uint64_t index = 0) {
  return Stream(stream_key(spec, index));
}

// Distribution specifications accepted by draw().
struct NormalDist {
  double mean = 0.0;
  double sd = 1.0;
};
struct BernoulliDist {
  double p = 0.5;
};
struct PoissonDist {
  double lambda = 1.0;
};
struct UniformDist {
  double a = 0.0;
  double b = 1.0;
};
using DistSpec = std::variant<NormalDist, BernoulliDist, PoissonDist, UniformDist>;

inline void validate(const DistSpec& spec) {
  struct {
    void operator()(const NormalDist& d) const {
      if (!(d.sd >= 0.0) || !std::isfinite(d.mean)) throw ConfigError("normal: sd must be >= 0");
    }
    void operator()(const BernoulliDist& d) const {
      if (!(d.p >= 0.0 && d.p <= 1.0)) throw ConfigError("bernoulli: p must lie in [0,1]");
    }
    void operator()(const PoissonDist& d) const {
      if (!(d.lambda >= 0.0) || !std::isfinite(d.lambda))
        throw ConfigError("poisson: lambda must be >= 0");
    }
    void operator()(const UniformDist& d) const {
      if (!(d.a <= d.b)) throw ConfigError("uniform: requires a <= b");
    }
  } check;
  std::visit(check, spec);
}

inline double draw(Stream& s, const DistSpec& spec) {
  validate(spec);
  if (auto* d = std::get_if<NormalDist>(&spec)) return s.normal(d->mean, d->sd);
  if (auto* d = std::get_if<BernoulliDist>(&spec)) return s.bernoulli(d->p) ? 1.0 : 0.0;
  if (auto* d = std::get_if<PoissonDist>(&spec)) return static_cast<double>(s.poisson(d->lambda));
  const auto& u = std::get<UniformDist>(spec);
  return s.uniform(u.a, u.b);
}

struct Ar1NoisePath {
  std::vector<double> values;
  double rho = 0.0;
  double marginal_sd = 1.0;
};

// Stationary Gaussian AR(1): Corr(values[t], values[s]) = rho^|t-s|.
inline Ar1NoisePath sample_ar1_noise(Stream& s, std::size_t T, double rho, double marginal_sd) {
  if (!(rho >= 0.0 && rho < 1.0)) throw ConfigError("ar1: rho must lie in [0,1)");
  if (T < 1) throw ConfigError("ar1: T must be >= 1");
  if (!(marginal_sd > 0.0)) throw ConfigError("ar1: marginal_sd must be > 0");
  Ar1NoisePath path{std::vector<double>(T), rho, marginal_sd};
  const double innovation_sd = std::sqrt(1.0 - rho * rho) * marginal_sd;
  path.values[0] = s.normal(0.0, marginal_sd);
  for (std::size_t t = 1; t < T; ++t)
    path.values[t] = rho * path.values[t - 1] + innovation_sd * s.normal();
  return path;
}

}  // namespace adaptrial
