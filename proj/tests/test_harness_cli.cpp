#include <filesystem>
#include <fstream>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <gtest/gtest.h>

#include "adaptrial/adaptrial.hpp"

using namespace adaptrial;
namespace fs = std::filesystem;

namespace {

fs::path scratch(const std::string& name) {
  const fs::path p = fs::temp_directory_path() / ("adaptrial_test_" + name);
  fs::remove_all(p);
  fs::create_directories(p);
  return p;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::size_t count_lines(const fs::path& p) {
  std::ifstream in(p);
  std::size_t n = 0;
  for (std::string line; std::getline(in, line);) n += !line.empty();
  return n;
}

ExperimentConfig small(const std::string& name, std::vector<std::string> extra = {}) {
  std::vector<std::string> o;
  if (name.rfind("table1", 0) == 0) {
    o = {"n=60", "T=10", "metric.time=5", "theta_star.n=50", "theta_star.reps=4"};
  } else if (name.rfind("table2", 0) == 0) {
    o = {"n=12", "T=28", "metric.time=14", "metric.grid.points=50", "theta_star.n=12", "theta_star.reps=2"};
  } else {
    o = {"n=200"};
  }
  o.push_back("reps=6");
  for (auto& e : extra) o.push_back(e);
  return resolve_config(name, std::nullopt, o);
}

}  // namespace

// ---------------------------------------------------------------- config

TEST(Config, PresetsRoundTrip) {
  for (const auto& p : preset_list()) {
    const auto c = preset(p.name);
    const json j = config_to_json(c);
    EXPECT_EQ(config_to_json(config_from_json(j)).dump(), j.dump()) << p.name;
  }
  EXPECT_THROW(preset("nope"), ConfigError);
}

TEST(Config, PresetValues) {
  const auto c = preset("table1-boltzmann");
  const auto& b = std::get<Boltzmann>(c.trial.policy);
  EXPECT_EQ(b.pi_min, 0.1);
  EXPECT_EQ(b.steepness, 2.0);
  EXPECT_EQ(b.lambda, 1.0);
  EXPECT_EQ(c.trial.n, 1000u);
  EXPECT_EQ(c.trial.T, 50u);
  EXPECT_EQ(c.reps, 1000u);
  const auto t2 = preset("table2-epsgreedy");
  EXPECT_EQ(std::get<ContextualEpsilonGreedy>(t2.trial.policy).lambda, 3838.0);
  EXPECT_EQ(t2.trial.update_every, 14u);
  EXPECT_EQ(std::get<OralyticsZip>(t2.trial.env).population.size(), 9u);
  EXPECT_EQ(preset("fig2-ts").reps, 1000u);
}

TEST(Config, Overrides) {
  const auto c = resolve_config("table1-boltzmann", std::nullopt, {"policy.pi_min=0.2", "n=500", "seed=7"});
  EXPECT_EQ(std::get<Boltzmann>(c.trial.policy).pi_min, 0.2);
  EXPECT_EQ(c.trial.n, 500u);
  EXPECT_EQ(c.trial.seed.master_seed, 7u);
  const auto k = resolve_config("table1-boltzmann", std::nullopt, {"policy.kind=fixed", "theta_star.source=analytic"});
  EXPECT_TRUE(std::holds_alternative<FixedProbability>(k.trial.policy));
  EXPECT_THROW(resolve_config("fig2-ts", std::nullopt, {"bogus=1"}), ConfigError);
  EXPECT_THROW(resolve_config("fig2-ts", std::nullopt, {"policy.bogus=1"}), ConfigError);
  EXPECT_THROW(resolve_config("fig2-ts", std::nullopt, {"a.b.c=1"}), ConfigError);
  EXPECT_THROW(resolve_config("fig2-ts", std::nullopt, {"no_equals"}), ConfigError);
  EXPECT_THROW(resolve_config(std::nullopt, std::nullopt, {}), ConfigError);
}

TEST(Config, Validation) {
  EXPECT_THROW(resolve_config("fig2-ts", std::nullopt, {"T=3"}), ConfigError);
  EXPECT_THROW(resolve_config("table1-boltzmann", std::nullopt, {"update_every=0"}), ConfigError);
  EXPECT_THROW(resolve_config("table1-boltzmann", std::nullopt, {"metric.time=51"}), ConfigError);
  EXPECT_THROW(resolve_config("fig3", std::nullopt, {"estimand.target=4"}), ConfigError);
  EXPECT_THROW(resolve_config("table1-boltzmann", std::nullopt, {"policy.pi_min=0.7"}), ConfigError);
  json j = config_to_json(preset("fig3"));
  j["schema_version"] = 99;
  EXPECT_THROW(config_from_json(j), ConfigError);
}

// ---------------------------------------------------------------- trajectory I/O

TEST(TrajectoryIo, RoundTripIsExact) {
  for (const std::string name : {"table1-boltzmann", "table2-boltzmann", "fig2-ts", "fig3"}) {
    auto c = small(name).trial;
    c.record_full_probs = name == "table1-boltzmann";
    const auto tr = run_trial(c);
    std::stringstream csv;
    write_trajectories_csv(csv, tr);
    const json side = json::parse(trajectory_sidecar(tr).dump());
    const auto back = read_trajectories(csv, side);
    EXPECT_EQ(back.n, tr.n);
    EXPECT_EQ(back.T, tr.T);
    EXPECT_EQ(back.context, tr.context) << name;
    EXPECT_EQ(back.phi, tr.phi);
    EXPECT_EQ(back.action, tr.action);
    EXPECT_EQ(back.propensity, tr.propensity);
    EXPECT_EQ(back.prob1, tr.prob1);
    EXPECT_EQ(back.outcome, tr.outcome);
    EXPECT_EQ(back.reward, tr.reward);
    EXPECT_EQ(back.snapshot_at, tr.snapshot_at);
    ASSERT_EQ(back.snapshots.size(), tr.snapshots.size());
    for (std::size_t k = 0; k < tr.snapshots.size(); ++k) {
      EXPECT_EQ(back.snapshots[k].beta, tr.snapshots[k].beta);
      EXPECT_EQ(back.snapshots[k].update_time, tr.snapshots[k].update_time);
    }
    const EstimandSpec avg;
    const auto a = estimate(tr, avg), b = estimate(back, avg);
    EXPECT_EQ(a.theta_hat, b.theta_hat);
    EXPECT_EQ(*a.var_standard, *b.var_standard);
  }
}

TEST(TrajectoryIo, MalformedInput) {
  const auto tr = run_trial(small("fig2-ts").trial);
  const json side = trajectory_sidecar(tr);
  std::stringstream empty;
  EXPECT_THROW(read_trajectories(empty, side), ParseError);
  std::stringstream csv;
  write_trajectories_csv(csv, tr);
  std::string text = csv.str();
  text.resize(text.size() / 2);
  std::stringstream truncated(text);
  EXPECT_THROW(read_trajectories(truncated, side), ParseError);
  json bad = side;
  bad.erase("T");
  std::stringstream again(csv.str());
  EXPECT_THROW(read_trajectories(again, bad), ParseError);
}

// ---------------------------------------------------------------- harness

TEST(Harness, Pairing) {
  PolicySnapshot s;
  std::vector<ReplicationRecord> recs(2);
  for (std::uint32_t k = 0; k < 2; ++k) recs[k] = {k, 0.0, {}, {}, {}, {}, s};
  std::vector<std::string> warnings;
  auto sink = [&](const std::string& w) { warnings.push_back(w); };
  EXPECT_EQ(replication_pairing(recs, Boltzmann{}, sink).size(), 1u);
  EXPECT_TRUE(warnings.empty());
  recs.resize(5, recs[0]);
  for (std::uint32_t k = 0; k < 5; ++k) recs[k].rep = k;
  EXPECT_EQ(replication_pairing(recs, Boltzmann{}, sink).size(), 2u);
  ASSERT_EQ(warnings.size(), 1u);
  EXPECT_NE(warnings[0].find("dropping replication 4"), std::string::npos);
}

TEST(Harness, SingleReplication) {
  const auto s = run_replications(small("fig2-epsgreedy", {"reps=1"}));
  EXPECT_EQ(s.R, 1u);
  EXPECT_EQ(s.empirical_variance, 0.0);
  EXPECT_FALSE(s.replicability.has_value());
}

TEST(Harness, AggregatesRecords) {
  const auto cfg = small("table1-boltzmann");
  const auto s = run_replications(cfg);
  ASSERT_EQ(s.records.size(), 6u);
  double m = 0.0, vs = 0.0, va = 0.0, cs = 0.0, ca = 0.0;
  for (const auto& r : s.records) {
    m += r.theta_hat / 6;
    vs += *r.var_standard / 6;
    va += *r.var_adaptive / 6;
    cs += *r.covered_standard / 6.0;
    ca += *r.covered_adaptive / 6.0;
  }
  EXPECT_NEAR(s.mean_theta_hat, m, 1e-15);
  EXPECT_NEAR(*s.mean_var_standard, vs, 1e-15);
  EXPECT_NEAR(*s.mean_var_adaptive, va, 1e-15);
  EXPECT_NEAR(*s.coverage_standard, cs, 1e-15);
  EXPECT_NEAR(*s.coverage_adaptive, ca, 1e-15);
  EXPECT_NEAR(s.empirical_variance, sample_variance(s.theta_hats()), 1e-18);
  EXPECT_EQ(s.replicability_pairs, 3u);
  // Replication r matches a stand-alone trial with index r.
  TrialConfig tc = cfg.trial;
  tc.seed.replication_index = 4;
  EXPECT_EQ(estimate(run_trial(tc), cfg.estimand).theta_hat[0], s.records[4].theta_hat);
}

TEST(Harness, NotDifferentiableReason) {
  const auto s = run_replications(small("table1-epsgreedy"));
  EXPECT_FALSE(s.mean_var_adaptive.has_value());
  EXPECT_EQ(s.adaptive_na_reason, "not_differentiable");
  const json j = summary_to_json(s);
  EXPECT_EQ(j["mean_var_adaptive"]["na"], "not_differentiable");
  EXPECT_EQ(j["coverage_adaptive"]["na"], "not_differentiable");
  std::stringstream csv;
  write_summary_csv(csv, s);
  EXPECT_NE(csv.str().find(",NA,"), std::string::npos);
}

TEST(Harness, ThreadCountDoesNotChangeResults) {
  for (const std::string name : {"table1-boltzmann", "fig3", "table2-boltzmann"}) {
    HarnessOptions one, eight;
    eight.threads = 8;
    const auto cfg = small(name);
    EXPECT_EQ(summary_to_json(run_replications(cfg, one)).dump(), summary_to_json(run_replications(cfg, eight)).dump())
        << name;
  }
}

TEST(Harness, MonteCarloThetaStarIsSeeded) {
  const auto cfg = small("table1-boltzmann");
  const auto a = monte_carlo_theta_star(cfg, 50, 4, 1), b = monte_carlo_theta_star(cfg, 50, 4, 3);
  ASSERT_TRUE(a.value.has_value());
  EXPECT_EQ(*a.value, *b.value);
  EXPECT_GT(a.mc_standard_error, 0.0);
}

// ---------------------------------------------------------------- CLI

TEST(Cli, RunAndReport) {
  const auto dir = scratch("run");
  const auto cfg = small("table1-boltzmann");
  cli::cmd_run(cfg, 2, dir);
  for (const char* f : {"trajectories.csv", "snapshots.json", "estimate.json", "config.json"})
    ASSERT_TRUE(fs::exists(dir / f)) << f;
  const json est = json::parse(slurp(dir / "estimate.json"));
  const json rep = cli::cmd_report(dir / "trajectories.csv", dir / "snapshots.json", cfg.estimand);
  EXPECT_EQ(est["theta_hat"], rep["theta_hat"]);
  EXPECT_EQ(est["var_adaptive"], rep["var_adaptive"]);
  const auto reread = config_from_json(json::parse(slurp(dir / "config.json")));
  EXPECT_EQ(config_to_json(reread).dump(), config_to_json(cfg).dump());
}

TEST(Cli, ReplicateWritesTables) {
  const auto dir = scratch("replicate");
  std::stringstream log;
  const auto cfg = resolve_config("fig2-epsgreedy", std::nullopt, {"n=1000"});
  cli::cmd_replicate(cfg, 2, dir, log);
  EXPECT_EQ(count_lines(dir / "theta.csv"), 501u);
  EXPECT_EQ(count_lines(dir / "summary.csv"), 2u);
  const json s = json::parse(slurp(dir / "summary.json"));
  EXPECT_EQ(s["R"], 500);
  EXPECT_EQ(s["theta_hat"].size(), 500u);
  EXPECT_EQ(s["theta_star"]["value"], -0.0625);
  EXPECT_TRUE(json::parse(slurp(dir / "timing.json")).contains("wall_seconds"));
  std::ifstream in(dir / "summary.csv");
  std::string header;
  std::getline(in, header);
  EXPECT_EQ(header, summary_csv_header());
  EXPECT_TRUE(log.str().empty());

  const auto h = cli::cmd_hist(dir / "theta.csv", 20, dir / "hist.csv");
  std::size_t total = 0;
  for (auto c : h.counts) total += c;
  EXPECT_EQ(total, 500u);
  std::ifstream hin(dir / "hist.csv");
  std::getline(hin, header);
  EXPECT_EQ(header, "bin_left,bin_right,count");
  EXPECT_EQ(count_lines(dir / "hist.csv"), 21u);
}

TEST(Cli, OddReplicationWarns) {
  const auto dir = scratch("odd");
  std::stringstream log;
  cli::cmd_replicate(small("fig2-ts", {"reps=5"}), 1, dir, log);
  EXPECT_NE(log.str().find("warning: odd replication count 5"), std::string::npos);
}

TEST(Cli, OracleDraws) {
  const auto dir = scratch("oracle");
  cli::OracleArgs a;
  a.kind = "two-point";
  a.count = 4;
  const auto v = cli::cmd_oracle(a, dir / "tp.csv");
  ASSERT_EQ(v.size(), 4u);
  const auto atoms = TwoPointLaw{}.atoms();
  for (double x : v) EXPECT_TRUE(x == atoms[0] || x == atoms[1]);
  std::ifstream in(dir / "tp.csv");
  const auto back = cli::read_value_column(in, "tp.csv");
  EXPECT_EQ(back, v);
  a.kind = "misspecified";
  a.count = 3;
  a.resolution = 200;
  a.degenerate = true;
  const auto m = cli::cmd_oracle(a, dir / "m.csv");
  EXPECT_EQ(m[0], m[2]);
  a.resolution = 10;
  EXPECT_THROW(cli::cmd_oracle(a, dir / "m.csv"), ConfigError);
  a.kind = "gaussian";
  try {
    cli::cmd_oracle(a, dir / "x.csv");
    FAIL();
  } catch (const ConfigError& e) {
    EXPECT_NE(std::string(e.what()).find("two-point"), std::string::npos);
  }
}

TEST(Cli, ValueColumnErrors) {
  std::stringstream a("x,y\n1,2\n3\n");
  EXPECT_THROW(cli::read_value_column(a, "a"), ParseError);
  std::stringstream b("x,y\n1,2\n");
  EXPECT_THROW(cli::read_value_column(b, "b", std::string("z")), ParseError);
  std::stringstream c("x,y\n1,abc\n");
  EXPECT_THROW(cli::read_value_column(c, "c", std::string("y")), ParseError);
  std::stringstream d("x,y\n1,2\n5,6\n");
  EXPECT_EQ(cli::read_value_column(d, "d", std::string("y")), (std::vector<double>{2, 6}));
}
