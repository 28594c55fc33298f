#pragma once

#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "adaptrial/config.hpp"
#include "adaptrial/csv.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/estimators.hpp"
#include "adaptrial/harness.hpp"
#include "adaptrial/limit_laws.hpp"
#include "adaptrial/stats.hpp"
#include "adaptrial/trajectory_io.hpp"

namespace adaptrial::cli {

namespace fs = std::filesystem;

struct ConfigArgs {
  std::optional<std::string> preset;
  std::optional<std::string> config_path;
  std::vector<std::string> overrides;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> reps;
};

inline json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open " + path);
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path + ": " + e.what());
  }
}

inline ExperimentConfig load_config(const ConfigArgs& a) {
  std::optional<json> file;
  if (a.config_path) file = read_json_file(*a.config_path);
  std::vector<std::string> overrides = a.overrides;
  if (a.seed) overrides.push_back("seed=" + std::to_string(*a.seed));
  if (a.reps) overrides.push_back("reps=" + std::to_string(*a.reps));
  return resolve_config(a.preset, file, overrides);
}

inline std::ofstream open_out(const fs::path& p) {
  if (p.has_parent_path()) fs::create_directories(p.parent_path());
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  return out;
}

inline void write_text(const fs::path& p, const std::string& text) {
  auto out = open_out(p);
  out << text;
  if (!out) throw Error("write failed: " + p.string());
}

inline json report_to_json(const EstimateReport& r, const ThetaStar& ts) {
  auto matrix = [](const Eigen::MatrixXd& m) {
    json rows = json::array();
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
      json row = json::array();
      for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
      rows.push_back(row);
    }
    return rows;
  };
  auto intervals = [](const std::vector<Interval>& v) {
    json out = json::array();
    for (const auto& iv : v) out.push_back({iv.lo, iv.hi});
    return out;
  };
  json j{{"n", r.n},
         {"level", r.level},
         {"target", r.target},
         {"theta_hat", std::vector<double>(r.theta_hat.data(), r.theta_hat.data() + r.theta_hat.size())}};
  j["var_standard"] = r.var_standard ? matrix(*r.var_standard) : json{{"na", "not_computed"}};
  j["var_adaptive"] = r.var_adaptive ? matrix(*r.var_adaptive) : json{{"na", r.adaptive_na_reason}};
  j["ci_standard"] = intervals(r.ci_standard);
  j["ci_adaptive"] = r.var_adaptive ? intervals(r.ci_adaptive) : json{{"na", r.adaptive_na_reason}};
  j["theta_star"] = ts.value ? json(*ts.value) : json{{"na", ts.provenance}};
  j["covered_standard"] = r.covered_standard ? json(*r.covered_standard) : json(nullptr);
  j["covered_adaptive"] = r.covered_adaptive ? json(*r.covered_adaptive) : json(nullptr);
  return j;
}

// theta* without Monte Carlo work (used by the single-trial commands).
inline ThetaStar cheap_theta_star(const ExperimentConfig& cfg) {
  if (cfg.theta_star.source == ThetaStarSpec::Source::value || cfg.theta_star.source == ThetaStarSpec::Source::analytic)
    return resolve_theta_star(cfg, 1);
  return {std::nullopt, 0.0, "none"};
}

// One trial: trajectories.csv, snapshots.json, estimate.json, config.json.
inline void cmd_run(const ExperimentConfig& cfg, std::uint32_t rep, const fs::path& out_dir) {
  TrialConfig tc = cfg.trial;
  tc.seed.replication_index = rep;
  const TrajectorySet tr = run_trial(tc);
  const ThetaStar ts = cheap_theta_star(cfg);
  const EstimateReport rep_est = estimate(tr, cfg.estimand, ts.value);
  {
    auto out = open_out(out_dir / "trajectories.csv");
    write_trajectories_csv(out, tr);
  }
  write_text(out_dir / "snapshots.json", trajectory_sidecar(tr).dump(2) + "\n");
  write_text(out_dir / "estimate.json", report_to_json(rep_est, ts).dump(2) + "\n");
  write_text(out_dir / "config.json", config_to_json(cfg).dump(2) + "\n");
}

// R replications: summary.json, summary.csv, theta.csv, timing.json, config.json.
inline ReplicationSummary cmd_replicate(const ExperimentConfig& cfg, std::size_t threads, const fs::path& out_dir,
                                        std::ostream& log = std::cerr) {
  HarnessOptions opt;
  opt.threads = threads;
  opt.warn = [&](const std::string& w) { log << "warning: " << w << '\n'; };
  const ReplicationSummary s = run_replications(cfg, opt);
  write_text(out_dir / "summary.json", summary_to_json(s).dump(2) + "\n");
  {
    auto out = open_out(out_dir / "summary.csv");
    write_summary_csv(out, s);
  }
  {
    auto out = open_out(out_dir / "theta.csv");
    write_theta_csv(out, s);
  }
  write_text(out_dir / "timing.json", json{{"wall_seconds", s.wall_seconds}, {"threads", threads}}.dump(2) + "\n");
  write_text(out_dir / "config.json", config_to_json(cfg).dump(2) + "\n");
  return s;
}

// Estimate from saved trajectories.
inline json cmd_report(const fs::path& trajectories, const fs::path& sidecar, const EstimandSpec& estimand,
                       const ThetaStar& ts = {std::nullopt, 0.0, "none"}) {
  std::ifstream in(trajectories);
  if (!in) throw Error("cannot open " + trajectories.string());
  const TrajectorySet tr = read_trajectories(in, read_json_file(sidecar.string()));
  json j = report_to_json(estimate(tr, estimand, ts.value), ts);
  const TrialSummary ts_sum = summarize_trial(tr);
  j["mean_reward"] = ts_sum.mean_reward;
  j["mean_outcome"] = ts_sum.mean_outcome;
  j["action1_frequency"] = ts_sum.action1_frequency;
  return j;
}

// Reads one numeric column (by name; default theta_hat, else value, else the
// first column) from a CSV with a header row.
inline std::vector<double> read_value_column(std::istream& in, const std::string& source,
                                             const std::optional<std::string>& column = std::nullopt) {
  std::string line;
  if (!std::getline(in, line)) throw ParseError(source + ": empty file");
  std::vector<std::string> header;
  for (auto f : split_csv_line(line)) header.emplace_back(f);
  std::size_t col = 0;
  bool found = false;
  const std::vector<std::string> wanted =
      column ? std::vector<std::string>{*column} : std::vector<std::string>{"theta_hat", "value"};
  for (const auto& w : wanted) {
    for (std::size_t k = 0; k < header.size() && !found; ++k)
      if (header[k] == w) {
        col = k;
        found = true;
      }
    if (found) break;
  }
  if (!found && column) throw ParseError(source + ": no column named '" + *column + "'");
  std::vector<double> values;
  std::size_t row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty() || line == "\r") continue;
    const auto f = split_csv_line(line);
    if (f.size() != header.size())
      throw ParseError(source + " row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                       " columns, got " + std::to_string(f.size()));
    values.push_back(parse_double(f[col], source + " row " + std::to_string(row)));
  }
  return values;
}

inline Histogram cmd_hist(const fs::path& input, std::size_t bins, const fs::path& out,
                          std::optional<std::pair<double, double>> range = std::nullopt,
                          const std::optional<std::string>& column = std::nullopt) {
  std::ifstream in(input);
  if (!in) throw Error("cannot open " + input.string());
  const auto values = read_value_column(in, input.string(), column);
  const Histogram h = histogram_export(values, bins, range);
  auto os = open_out(out);
  write_histogram_csv(os, h);
  return h;
}

inline const std::vector<std::string>& oracle_kinds() {
  static const std::vector<std::string> k = {"two-point", "scaled-uniform", "misspecified"};
  return k;
}

struct OracleArgs {
  std::string kind;
  std::size_t count = 1000;
  std::uint64_t seed = 1;
  double epsilon = 0.1;
  double scale = -0.125;
  std::size_t resolution = 10000;
  bool degenerate = false;  // misspecified law with S = 0
};

inline std::vector<double> cmd_oracle(const OracleArgs& a, const fs::path& out) {
  LimitLawKind law;
  if (a.kind == "two-point") {
    law = TwoPointLaw{a.epsilon, {}};
  } else if (a.kind == "scaled-uniform") {
    law = ScaledUniformLaw{a.scale, 0.0};
  } else if (a.kind == "misspecified") {
    MisspecifiedLaw m;
    m.epsilon = a.epsilon;
    m.resolution = a.resolution;
    detail::check_resolution(a.resolution);
    if (!a.degenerate) m.S = compute_misspecified_S(m.env, a.resolution);
    law = m;
  } else {
    std::string kinds;
    for (const auto& k : oracle_kinds()) kinds += (kinds.empty() ? "" : ", ") + k;
    throw ConfigError("oracle: unknown kind '" + a.kind + "' (known: " + kinds + ")");
  }
  Stream s = derive_stream(SeedSpec{a.seed, 0, "oracle"});
  const auto values = limiting_law_sample(law, a.count, s);
  auto os = open_out(out);
  os << "value\n";
  for (double v : values) os << format_double(v) << '\n';
  return values;
}

}  // namespace adaptrial::cli
