#include <cmath>
#include <map>
#include <numeric>
#include <vector>

#include <gtest/gtest.h>

#include "adaptrial/adaptrial.hpp"

using namespace adaptrial;

namespace {

double correlation(const std::vector<double>& a, const std::vector<double>& b) {
  const double ma = mean(a), mb = mean(b);
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t k = 0; k < a.size(); ++k) {
    sab += (a[k] - ma) * (b[k] - mb);
    saa += (a[k] - ma) * (a[k] - ma);
    sbb += (b[k] - mb) * (b[k] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

std::vector<double> uniforms(SeedSpec spec, std::size_t count) {
  Stream s = derive_stream(spec);
  std::vector<double> v(count);
  for (auto& x : v) x = s.uniform();
  return v;
}

}  // namespace

// ---------------------------------------------------------------- rng

TEST(Rng, SameSpecGivesSameSequence) {
  Stream a = derive_stream({42, 0, "env"});
  Stream b = derive_stream({42, 0, "env"});
  for (int k = 0; k < 100; ++k) ASSERT_EQ(a.next_u64(), b.next_u64());
}

TEST(Rng, ReplicationStreamsUncorrelated) {
  const auto a = uniforms({42, 0, "env"}, 1000000);
  const auto b = uniforms({42, 1, "env"}, 1000000);
  EXPECT_NEAR(correlation(a, b), 0.0, 0.01);
}

TEST(Rng, RoleStreamsUncorrelated) {
  const auto a = uniforms({42, 0, "env"}, 1000000);
  const auto b = uniforms({42, 0, "policy"}, 1000000);
  EXPECT_NEAR(correlation(a, b), 0.0, 0.01);
}

TEST(Rng, IndexedStreamsDiffer) {
  EXPECT_NE(stream_key({1, 0, "env"}, 0), stream_key({1, 0, "env"}, 1));
  EXPECT_NE(stream_key({1, 0, "env"}), stream_key({2, 0, "env"}));
  EXPECT_NE(stream_key({1, 0, "env"}), stream_key({1, 0, "policy"}));
}

TEST(Rng, CopiedStreamForks) {
  Stream a = derive_stream({7, 3, "x"});
  a.uniform();
  Stream b = a;
  for (int k = 0; k < 10; ++k) ASSERT_EQ(a.normal(), b.normal());
}

TEST(Rng, DegenerateBernoulli) {
  Stream s = derive_stream({1, 0, "d"});
  for (int k = 0; k < 1000; ++k) {
    ASSERT_EQ(draw(s, BernoulliDist{0.0}), 0.0);
    ASSERT_EQ(draw(s, BernoulliDist{1.0}), 1.0);
  }
}

TEST(Rng, NormalMoments) {
  Stream s = derive_stream({11, 0, "normal"});
  std::vector<double> v(1000000);
  for (auto& x : v) x = draw(s, NormalDist{0.0, 1.0});
  EXPECT_NEAR(mean(v), 0.0, 0.005);
  EXPECT_NEAR(std::sqrt(sample_variance(v)), 1.0, 0.005);
}

TEST(Rng, PoissonMean) {
  Stream s = derive_stream({12, 0, "poisson"});
  std::vector<double> v(1000000);
  for (auto& x : v) x = draw(s, PoissonDist{3.0});
  EXPECT_NEAR(mean(v), 3.0, 0.01);
}

TEST(Rng, UniformRange) {
  Stream s = derive_stream({13, 0, "u"});
  for (int k = 0; k < 10000; ++k) {
    const double x = draw(s, UniformDist{-2.0, 5.0});
    ASSERT_GE(x, -2.0);
    ASSERT_LT(x, 5.0);
  }
}

TEST(Rng, InvalidDistributionsRejected) {
  Stream s = derive_stream({1, 0, "bad"});
  EXPECT_THROW(draw(s, NormalDist{0.0, -1.0}), ConfigError);
  EXPECT_THROW(draw(s, BernoulliDist{1.5}), ConfigError);
  EXPECT_THROW(draw(s, PoissonDist{-0.1}), ConfigError);
  EXPECT_THROW(draw(s, UniformDist{2.0, 1.0}), ConfigError);
}

TEST(Ar1, LagCorrelations) {
  Stream s = derive_stream({5, 0, "ar1"});
  const double rho = std::sqrt(0.5);
  // 10^6 lag-1 pairs from long paths.
  std::vector<double> x0, x1, y0, y2;
  for (int path = 0; path < 1000; ++path) {
    const auto p = sample_ar1_noise(s, 1002, rho, 1.0).values;
    for (std::size_t t = 0; t < 1000; ++t) {
      x0.push_back(p[t]);
      x1.push_back(p[t + 1]);
      y0.push_back(p[t]);
      y2.push_back(p[t + 2]);
    }
  }
  EXPECT_NEAR(correlation(x0, x1), 0.70711, 0.005);
  EXPECT_NEAR(correlation(y0, y2), 0.5, 0.005);
}

TEST(Ar1, ZeroRhoIsIid) {
  Stream s = derive_stream({6, 0, "ar1"});
  std::vector<double> a, b;
  for (int k = 0; k < 200000; ++k) {
    const auto p = sample_ar1_noise(s, 2, 0.0, 2.0).values;
    a.push_back(p[0]);
    b.push_back(p[1]);
  }
  EXPECT_NEAR(correlation(a, b), 0.0, 0.01);
  EXPECT_NEAR(sample_variance(b), 4.0, 0.05);
}

TEST(Ar1, StationaryVariance) {
  Stream s = derive_stream({7, 0, "ar1"});
  const std::size_t reps = 40000, T = 6;
  std::vector<std::vector<double>> cols(T);
  for (std::size_t r = 0; r < reps; ++r) {
    const auto p = sample_ar1_noise(s, T, 0.9, 1.5).values;
    for (std::size_t t = 0; t < T; ++t) cols[t].push_back(p[t]);
  }
  // Var of the sample variance of normals: 2 sigma^4 / (R - 1).
  const double se = std::sqrt(2.0 * std::pow(1.5, 4) / static_cast<double>(reps - 1));
  for (std::size_t t = 0; t < T; ++t) EXPECT_NEAR(sample_variance(cols[t]), 2.25, 3 * se) << "t=" << t;
}

TEST(Ar1, SingleDrawAndErrors) {
  Stream s = derive_stream({8, 0, "ar1"});
  EXPECT_EQ(sample_ar1_noise(s, 1, 0.5, 1.0).values.size(), 1u);
  EXPECT_THROW(sample_ar1_noise(s, 5, 1.0, 1.0), ConfigError);
  EXPECT_THROW(sample_ar1_noise(s, 0, 0.5, 1.0), ConfigError);
}

// ---------------------------------------------------------------- environments

TEST(Nonstationary, Rewards) {
  const NonstationaryMab env;
  EXPECT_DOUBLE_EQ(nonstationary_reward(env, 1, 2, 0.0), -0.25);
  EXPECT_DOUBLE_EQ(nonstationary_reward(env, 0, 2, 0.7), 0.7);
  EXPECT_DOUBLE_EQ(nonstationary_reward(env, 1, 1, 0.0), 0.0);
  EXPECT_THROW(nonstationary_reward(env, 1, 3, 0.0), DomainError);
  EXPECT_THROW(nonstationary_reward(env, 1, 0, 0.0), DomainError);
}

TEST(Nonstationary, BaselineMean) {
  const NonstationaryMab env;
  double total = 0.0;
  // P(a) = 1/2 at each of the T = 2 decision times.
  for (int t = 1; t <= 2; ++t)
    for (int a = 0; a <= 1; ++a) total += 0.5 * nonstationary_reward(env, a, t, 0.0) / 2.0;
  EXPECT_DOUBLE_EQ(total, -0.0625);
}

TEST(Misspecified, Rewards) {
  const MisspecifiedLinear env;
  EXPECT_NEAR(misspecified_reward(env, 0.0, 0, 0.0), 0.1, 1e-15);
  EXPECT_NEAR(misspecified_reward(env, 0.0, 1, 0.0), 0.43333333333333335, 1e-12);
  EXPECT_NEAR(misspecified_reward(env, 0.5, 1, 0.0), -0.016666666666666666, 1e-12);
  EXPECT_THROW(misspecified_reward(env, 1.2, 0, 0.0), DomainError);
  EXPECT_THROW(misspecified_reward(env, -0.1, 0, 0.0), DomainError);
}

TEST(Misspecified, TreatedMeanQuadratureAndMonteCarlo) {
  const MisspecifiedLinear env;
  const std::size_t m = 100000;
  double quad = 0.0;
  for (std::size_t k = 0; k < m; ++k) quad += misspecified_mean(env, (k + 0.5) / m, 1) / m;
  EXPECT_NEAR(quad, 0.15, 1e-9);
  Stream s = derive_stream({9, 0, "mc"});
  double mc = 0.0;
  const int draws = 400000;
  for (int k = 0; k < draws; ++k) mc += misspecified_reward(env, s.uniform(), 1, 0.0) / draws;
  EXPECT_NEAR(mc, 0.15, 0.003);
}

TEST(Dosage, Advance) {
  EXPECT_NEAR(dosage_advance(0.0, 1, 0.95), 0.05, 1e-15);
  double d = 0.7;
  for (int k = 0; k < 10; ++k) d = dosage_advance(d, 0, 0.95);
  EXPECT_NEAR(d, 0.7 * std::pow(0.95, 10), 1e-14);
  double ones = 0.0;
  for (int k = 1; k <= 200; ++k) {
    ones = dosage_advance(ones, 1, 0.95);
    ASSERT_NEAR(ones, 1.0 - std::pow(0.95, k), 1e-12);
    ASSERT_LE(ones, 1.0);
  }
}

TEST(Dosage, StaysInUnitInterval) {
  Stream s = derive_stream({3, 0, "dose"});
  double d = 0.0;
  for (int k = 0; k < 10000; ++k) {
    d = dosage_advance(d, s.bernoulli(0.5) ? 1 : 0, 0.95);
    ASSERT_GE(d, 0.0);
    ASSERT_LE(d, 1.0);
  }
}

TEST(Synthetic, Rewards) {
  const SyntheticDosage env;
  EXPECT_DOUBLE_EQ(synthetic_reward(env, 0.0, 1, 0.3), 0.3);
  EXPECT_DOUBLE_EQ(synthetic_reward(env, 0.0, 0, 0.3), 0.3);
  EXPECT_DOUBLE_EQ(synthetic_reward(env, 0.5, 1, 0.0), 0.5);
}

TEST(Synthetic, FixedPolicyClosedForm) {
  const SyntheticDosage env;
  const double g = 0.95;
  const double expected = 0.5 * (1.0 - (1.0 - std::pow(g, 50)) / (50.0 * (1.0 - g)));
  EXPECT_NEAR(synthetic_fixed_policy_mean(env, 50, 0.5), expected, 1e-14);
  // Direct recursion of the mean dosage.
  double md = 0.0, total = 0.0;
  for (int t = 0; t < 50; ++t) {
    total += md;
    md = g * md + (1 - g) * 0.5;
  }
  EXPECT_NEAR(synthetic_fixed_policy_mean(env, 50, 0.5), total / 50.0, 1e-14);
}

TEST(Oralytics, SaturatedNonBrushing) {
  IndividualParams p;
  p.w_b[0] = 50.0;
  p.w_p[0] = std::log(100.0);
  Stream s = derive_stream({1, 0, "zip"});
  EnvFeatures g{};
  g[0] = 1.0;
  for (int k = 0; k < 10000; ++k) ASSERT_EQ(oralytics_outcome(p, g, 1, 1.0, s), 0);
}

TEST(Oralytics, NegativeAdvantageIsClipped) {
  IndividualParams p;
  p.w_b[0] = 0.3;
  p.w_p[0] = std::log(20.0);
  p.delta_B[0] = -2.0;
  p.delta_N[0] = -1.0;
  EnvFeatures g{};
  g[0] = 1.0;
  Stream a = derive_stream({2, 0, "zip"});
  Stream b = a;
  for (int k = 0; k < 1000; ++k) ASSERT_EQ(oralytics_outcome(p, g, 1, 1.0, a), oralytics_outcome(p, g, 0, 1.0, b));
}

TEST(Oralytics, PoissonMean) {
  IndividualParams p;
  p.w_b[0] = -10.0;
  p.w_p[0] = std::log(5.0);
  EnvFeatures g{};
  g[0] = 1.0;
  Stream s = derive_stream({3, 0, "zip"});
  const int draws = 1000000;
  double sum = 0.0;
  for (int k = 0; k < draws; ++k) {
    const long long q = oralytics_outcome(p, g, 0, 1.0, s);
    ASSERT_GE(q, 0);
    sum += static_cast<double>(q);
  }
  const double se = std::sqrt(5.0 / draws);
  EXPECT_NEAR(sum / draws, 5.0, 3 * se);
}

TEST(Oralytics, ShrinkOutOfRange) {
  IndividualParams p;
  EnvFeatures g{};
  Stream s = derive_stream({4, 0, "zip"});
  EXPECT_THROW(oralytics_outcome(p, g, 1, 0.0, s), DomainError);
  EXPECT_THROW(oralytics_outcome(p, g, 1, 1.5, s), DomainError);
}

TEST(Oralytics, Cost) {
  const CostParams c;
  EXPECT_EQ(oralytics_cost(150.0, 0.95, 0, c), 0.0);
  EXPECT_EQ(oralytics_cost(120.0, 0.6, 1, c), 100.0);
  EXPECT_EQ(oralytics_cost(50.0, 0.9, 1, c), 100.0);
  EXPECT_EQ(oralytics_cost(150.0, 0.9, 1, c), 200.0);
  EXPECT_EQ(oralytics_cost(50.0, 0.3, 1, c), 0.0);
  Stream s = derive_stream({5, 0, "cost"});
  for (int k = 0; k < 1000; ++k) {
    const double v = oralytics_cost(s.uniform(0, 180), s.uniform(), 1, c);
    ASSERT_TRUE(v == 0.0 || v == 100.0 || v == 200.0);
  }
}

TEST(Window, ConstantInput) {
  WeeklyWindow w(13.0 / 14.0);
  for (int k = 0; k < 14; ++k) w.push(3.5);
  EXPECT_NEAR(w.value(), 3.5, 1e-12);
  for (int k = 0; k < 30; ++k) w.push(3.5);
  EXPECT_NEAR(w.value(), 3.5, 1e-12);
}

TEST(Window, ZeroAndSingleSpike) {
  WeeklyWindow w(13.0 / 14.0);
  EXPECT_EQ(w.value(), 0.0);
  const double g = 13.0 / 14.0;
  EXPECT_NEAR(exp_average_update(w, 1.0), 0.110628, 5e-6);
  EXPECT_NEAR(w.value(), (1 - g) / (1 - std::pow(g, 14)), 1e-15);
  // After 14 more zeros the spike has left the hard window.
  for (int k = 0; k < 13; ++k) w.push(0.0);
  EXPECT_GT(w.value(), 0.0);
  w.push(0.0);
  EXPECT_EQ(w.value(), 0.0);
}

TEST(Window, BoundedByMax) {
  WeeklyWindow w(13.0 / 14.0);
  Stream s = derive_stream({6, 0, "w"});
  for (int k = 0; k < 5000; ++k) {
    const double v = exp_average_update(w, s.uniform(0.0, 180.0));
    ASSERT_GE(v, 0.0);
    ASSERT_LE(v, 180.0 + 1e-9);
  }
}

TEST(Shrink, NeverFires) {
  ResponsivityState st;
  const ShrinkThresholds th;
  for (int t = 0; t < 140; ++t) {
    st = responsivity_shrink_step(st, t, 50.0, 0.2, th);
    ASSERT_EQ(st.shrink(0.5), 1.0);
  }
}

TEST(Shrink, FiresOnceThenRecovers) {
  ResponsivityState st;
  const ShrinkThresholds th;
  st = responsivity_shrink_step(st, 0, 150.0, 0.6, th);
  EXPECT_EQ(st.shrink(0.5), 0.5);
  for (int t = 1; t < 14; ++t) {
    st = responsivity_shrink_step(st, t, 50.0, 0.1, th);
    ASSERT_EQ(st.shrink(0.5), 0.5) << t;
  }
  st = responsivity_shrink_step(st, 14, 50.0, 0.1, th);
  EXPECT_EQ(st.shrink(0.5), 1.0);
}

TEST(Shrink, FiresTwice) {
  ResponsivityState st;
  const ShrinkThresholds th;
  st = responsivity_shrink_step(st, 0, 50.0, 0.9, th);
  for (int t = 1; t < 14; ++t) st = responsivity_shrink_step(st, t, 50.0, 0.9, th);
  EXPECT_EQ(st.shrink(0.5), 0.5);
  st = responsivity_shrink_step(st, 14, 50.0, 0.9, th);
  EXPECT_EQ(st.shrink(0.5), 0.25);
}

TEST(AppEngagement, Frequencies) {
  Stream s = derive_stream({7, 0, "app"});
  for (int k = 0; k < 1000; ++k) {
    ASSERT_TRUE(app_engagement_step(1.0, s));
    ASSERT_FALSE(app_engagement_step(0.0, s));
  }
  int hits = 0;
  for (int k = 0; k < 100000; ++k) hits += app_engagement_step(0.4, s) ? 1 : 0;
  EXPECT_NEAR(hits / 100000.0, 0.4, 0.005);
  EXPECT_THROW(app_engagement_step(1.2, s), DomainError);
}

TEST(Population, SinglePoolMember) {
  Stream s = derive_stream({8, 0, "pop"});
  IndividualParams p;
  p.p_app = 0.3;
  p.w_b[2] = 1.25;
  const auto out = sample_population(std::vector<IndividualParams>{p}, 5, s);
  ASSERT_EQ(out.size(), 5u);
  for (const auto& q : out) {
    EXPECT_EQ(q.p_app, 0.3);
    EXPECT_EQ(q.w_b, p.w_b);
  }
}

TEST(Population, DrawCountsPartition) {
  Stream s = derive_stream({9, 0, "pop"});
  std::vector<IndividualParams> pool(9);
  for (int k = 0; k < 9; ++k) pool[k].p_app = k / 10.0;
  const auto out = sample_population(pool, 100, s);
  std::map<double, int> counts;
  for (const auto& q : out) ++counts[q.p_app];
  int total = 0;
  for (auto& [_, c] : counts) total += c;
  EXPECT_EQ(total, 100);
  EXPECT_GT(counts.size(), 1u);
}

TEST(Population, SyntheticPriorValid) {
  Stream s = derive_stream({10, 0, "pop"});
  const auto out = sample_population(PopulationPrior{}, 500, s);
  for (const auto& q : out) {
    ASSERT_GE(q.p_app, 0.0);
    ASSERT_LE(q.p_app, 1.0);
    for (double w : q.delta_B) ASSERT_TRUE(std::isfinite(w));
  }
}

TEST(Population, ParseRoundTrip) {
  Stream s = derive_stream({11, 0, "pop"});
  const auto pool = sample_population(PopulationPrior{}, 3, s);
  const auto back = parse_population(population_to_json(pool));
  ASSERT_EQ(back.size(), 3u);
  for (std::size_t k = 0; k < 3; ++k) {
    EXPECT_EQ(back[k].w_p, pool[k].w_p);
    EXPECT_EQ(back[k].delta_N, pool[k].delta_N);
    EXPECT_EQ(back[k].p_app, pool[k].p_app);
  }
}

TEST(Population, ParseErrorsNameField) {
  auto doc = population_to_json(std::vector<IndividualParams>(2));
  auto expect_msg = [](const nlohmann::json& d, const std::string& needle) {
    try {
      parse_population(d);
      FAIL() << "expected ParseError";
    } catch (const ParseError& e) {
      EXPECT_NE(std::string(e.what()).find(needle), std::string::npos) << e.what();
    }
  };
  auto bad = doc;
  bad[1]["w_b"] = {1, 2, 3};
  expect_msg(bad, "population[1].w_b");
  bad = doc;
  bad[0]["p_app"] = 2.0;
  expect_msg(bad, "population[0].p_app");
  bad = doc;
  bad[1]["extra"] = 1;
  expect_msg(bad, "population[1].extra");
  bad = doc;
  bad[0].erase("delta_N");
  expect_msg(bad, "population[0].delta_N");
  expect_msg(nlohmann::json::object(), "top level");
  expect_msg(nlohmann::json::array(), "empty");
}
