#pragma once

#include <cmath>
#include <cstddef>
#include <variant>
#include <vector>

#include <Eigen/Dense>

#include "adaptrial/environments.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/rng.hpp"

namespace adaptrial {

// Limit of the average reward under epsilon-greedy in the two-step
// nonstationary environment: the second-step treatment probability is
// eps/2 or 1 - eps/2 with probability 1/2 each.
struct TwoPointLaw {
  double epsilon = 0.1;
  NonstationaryMab env{};

  std::array<double, 2> atoms() const {
    const double base = env.mu0 + env.delta1 / 4.0;
    return {base + env.delta2 / 2.0 * (epsilon / 2.0), base + env.delta2 / 2.0 * (1.0 - epsilon / 2.0)};
  }
};

// Thompson sampling: the second-step probability converges to Uniform[0,1].
struct ScaledUniformLaw {
  double scale = -0.125;
  double shift = 0.0;
};

// Least-squares coefficient limit in the misspecified linear environment
// under epsilon-greedy with a first-step fit.
struct MisspecifiedLaw {
  MisspecifiedLinear env{};
  double epsilon = 0.1;
  Eigen::Matrix2d S = Eigen::Matrix2d::Zero();
  std::size_t resolution = 10000;
  std::size_t target = 2;  // coordinate reported by limiting_law_sample
};

using LimitLawKind = std::variant<TwoPointLaw, ScaledUniformLaw, MisspecifiedLaw>;

// ---------------------------------------------------------------------------
// Misspecified-environment moments. Stacked features f(x, a) = [1, x, a, a x],
// x ~ Uniform[0,1].
// ---------------------------------------------------------------------------

inline Eigen::Vector4d misspecified_features(double x, int a) { return {1.0, x, double(a), a * x}; }

// E[f f^T] under a ~ Bernoulli(0.5).
inline Eigen::Matrix4d misspecified_B() {
  Eigen::Matrix4d B;
  B << 1.0, 0.5, 0.5, 0.25,      //
      0.5, 1.0 / 3.0, 0.25, 1.0 / 6.0,  //
      0.5, 0.25, 0.5, 0.25,      //
      0.25, 1.0 / 6.0, 0.25, 1.0 / 6.0;
  return B;
}

namespace detail {

inline void check_resolution(std::size_t m) {
  if (m < 100) throw ConfigError("quadrature resolution must be >= 100");
}

// Composite midpoint rule of f over [lo, hi] with m cells.
template <class F, class Acc>
void midpoint(double lo, double hi, std::size_t m, F&& f, Acc& acc) {
  if (!(hi > lo) || m == 0) return;
  const double h = (hi - lo) / static_cast<double>(m);
  for (std::size_t k = 0; k < m; ++k) acc += h * f(lo + (static_cast<double>(k) + 0.5) * h);
}

}  // namespace detail

// E[f(x,a) mu_a(x)] under a ~ Bernoulli(0.5).
inline Eigen::Vector4d misspecified_v(const MisspecifiedLinear& env, std::size_t m = 10000) {
  detail::check_resolution(m);
  Eigen::Vector4d v = Eigen::Vector4d::Zero();
  detail::midpoint(0.0, 1.0, m,
                   [&](double x) -> Eigen::Vector4d {
                     return 0.5 * misspecified_features(x, 0) * misspecified_mean(env, x, 0) +
                            0.5 * misspecified_features(x, 1) * misspecified_mean(env, x, 1);
                   },
                   v);
  return v;
}

// Population least-squares coefficient of the first-step fit.
inline Eigen::Vector4d misspecified_beta_star(const MisspecifiedLinear& env, std::size_t m = 10000) {
  return misspecified_B().ldlt().solve(misspecified_v(env, m));
}

// Meat of the first-step fit: E[((mu_a(x) - f^T b*)^2 + 1) f f^T].
inline Eigen::Matrix4d misspecified_Sigma(const MisspecifiedLinear& env, std::size_t m = 10000) {
  detail::check_resolution(m);
  const Eigen::Vector4d bstar = misspecified_beta_star(env, m);
  Eigen::Matrix4d Sig = Eigen::Matrix4d::Zero();
  detail::midpoint(0.0, 1.0, m,
                   [&](double x) -> Eigen::Matrix4d {
                     Eigen::Matrix4d out = Eigen::Matrix4d::Zero();
                     for (int a = 0; a < 2; ++a) {
                       const Eigen::Vector4d f = misspecified_features(x, a);
                       const double r = misspecified_mean(env, x, a) - f.dot(bstar);
                       out += 0.5 * (r * r + 1.0) * f * f.transpose();
                     }
                     return out;
                   },
                   Sig);
  return Sig;
}

// Advantage block of B^-1 Sigma B^-1.
inline Eigen::Matrix2d compute_misspecified_S(const MisspecifiedLinear& env = {}, std::size_t m = 10000) {
  const Eigen::Matrix4d Binv = misspecified_B().inverse();
  const Eigen::Matrix4d full = Binv * misspecified_Sigma(env, m) * Binv;
  Eigen::Matrix2d S = full.block<2, 2>(2, 2);
  return 0.5 * (S + S.transpose());
}

// Second-step moments under epsilon-greedy with threshold b0 + b1 x > 0:
//   g0 = E_x[sum_a pi_a(x) f f^T],  g1 = E_x[sum_a pi_a(x) f mu_a(x)].
struct SecondStepMoments {
  Eigen::Matrix4d g0 = Eigen::Matrix4d::Zero();
  Eigen::Vector4d g1 = Eigen::Vector4d::Zero();
};

inline SecondStepMoments misspecified_g(const MisspecifiedLinear& env, const Eigen::Vector2d& beta_adv,
                                        double epsilon, std::size_t m = 10000) {
  detail::check_resolution(m);
  auto integrate = [&](double lo, double hi, double p1, SecondStepMoments& acc) {
    if (!(hi > lo)) return;
    const auto cells = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(m * (hi - lo))));
    const double h = (hi - lo) / static_cast<double>(cells);
    for (std::size_t k = 0; k < cells; ++k) {
      const double x = lo + (static_cast<double>(k) + 0.5) * h;
      const Eigen::Vector4d f1 = misspecified_features(x, 1), f0 = misspecified_features(x, 0);
      acc.g0 += h * (p1 * f1 * f1.transpose() + (1.0 - p1) * f0 * f0.transpose());
      acc.g1 += h * (p1 * f1 * misspecified_mean(env, x, 1) + (1.0 - p1) * f0 * misspecified_mean(env, x, 0));
    }
  };
  const double hi_p = 1.0 - epsilon / 2.0, lo_p = epsilon / 2.0;
  const double b0 = beta_adv[0], b1 = beta_adv[1];
  SecondStepMoments out;
  auto p_at = [&](double x) { return b0 + b1 * x > 0.0 ? hi_p : lo_p; };
  if (b1 != 0.0) {
    const double xs = -b0 / b1;
    if (xs > 0.0 && xs < 1.0) {
      integrate(0.0, xs, p_at(xs / 2.0), out);
      integrate(xs, 1.0, p_at((xs + 1.0) / 2.0), out);
      return out;
    }
  }
  integrate(0.0, 1.0, p_at(0.5), out);
  return out;
}

// Limit of the pooled least-squares coefficients over both steps given the
// normalized first-step fluctuation beta_tilde of the advantage coefficients.
inline Eigen::Vector4d misspecified_theta_limit(const MisspecifiedLaw& law, const Eigen::Vector2d& beta_tilde) {
  const SecondStepMoments g = misspecified_g(law.env, beta_tilde, law.epsilon, law.resolution);
  return (misspecified_B() + g.g0).ldlt().solve(misspecified_v(law.env, law.resolution) + g.g1);
}

inline Eigen::Vector2d draw_bivariate_normal(const Eigen::Matrix2d& S, Stream& s) {
  Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(S);
  const Eigen::Vector2d ev = es.eigenvalues().cwiseMax(0.0);
  const Eigen::Vector2d z(s.normal(), s.normal());
  return es.eigenvectors() * (ev.cwiseSqrt().asDiagonal() * z);
}

inline void validate(const LimitLawKind& kind) {
  if (auto* m = std::get_if<MisspecifiedLaw>(&kind)) {
    detail::check_resolution(m->resolution);
    if (!m->S.isApprox(m->S.transpose(), 1e-12) && !m->S.isZero())
      throw ConfigError("misspecified law: S must be symmetric");
    Eigen::SelfAdjointEigenSolver<Eigen::Matrix2d> es(m->S);
    if (es.eigenvalues().minCoeff() < -1e-12) throw ConfigError("misspecified law: S must be PSD");
    if (m->target > 3) throw ConfigError("misspecified law: target must be in [0,3]");
  } else if (auto* t = std::get_if<TwoPointLaw>(&kind)) {
    if (!(t->epsilon > 0.0 && t->epsilon < 1.0)) throw ConfigError("two-point law: epsilon must lie in (0,1)");
  }
}

inline std::vector<double> limiting_law_sample(const LimitLawKind& kind, std::size_t count, Stream& s) {
  validate(kind);
  std::vector<double> out;
  out.reserve(count);
  if (auto* t = std::get_if<TwoPointLaw>(&kind)) {
    const auto atoms = t->atoms();
    for (std::size_t k = 0; k < count; ++k) out.push_back(atoms[s.bernoulli(0.5) ? 1 : 0]);
  } else if (auto* u = std::get_if<ScaledUniformLaw>(&kind)) {
    for (std::size_t k = 0; k < count; ++k) out.push_back(u->shift + u->scale * s.uniform());
  } else {
    const auto& m = std::get<MisspecifiedLaw>(kind);
    // theta_limit depends on beta_tilde only through the threshold location,
    // so S = 0 gives a point mass at the tie-branch value.
    for (std::size_t k = 0; k < count; ++k) {
      const Eigen::Vector2d bt = draw_bivariate_normal(m.S, s);
      out.push_back(misspecified_theta_limit(m, bt)[static_cast<Eigen::Index>(m.target)]);
    }
  }
  return out;
}

inline MisspecifiedLaw default_misspecified_law(double epsilon = 0.1, std::size_t resolution = 10000) {
  MisspecifiedLaw law;
  law.epsilon = epsilon;
  law.resolution = resolution;
  law.S = compute_misspecified_S(law.env, resolution);
  return law;
}

}  // namespace adaptrial
