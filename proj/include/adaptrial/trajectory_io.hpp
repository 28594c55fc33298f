#pragma once

#include <istream>
#include <ostream>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "adaptrial/config.hpp"
#include "adaptrial/csv.hpp"
#include "adaptrial/error.hpp"
#include "adaptrial/trial.hpp"

namespace adaptrial {

// One row per (i, t): rep, i, t, ctx_*, phi_*, action, propensity, [prob1,]
// outcome, reward. Decision times are written 1-based.
inline void write_trajectories_csv(std::ostream& os, const TrajectorySet& tr) {
  os << "rep,i,t";
  for (std::size_t k = 0; k < tr.context_dim; ++k) os << ",ctx_" << k;
  for (std::size_t k = 0; k < tr.feature_dim; ++k) os << ",phi_" << k;
  os << ",action,propensity";
  const bool probs = !tr.prob1.empty();
  if (probs) os << ",prob1";
  os << ",outcome,reward\n";
  for (std::size_t i = 0; i < tr.n; ++i)
    for (std::size_t t = 0; t < tr.T; ++t) {
      const std::size_t c = tr.cell(i, t);
      os << tr.replication_index << ',' << i << ',' << t + 1;
      for (double v : tr.context_at(i, t)) os << ',' << format_double(v);
      for (double v : tr.phi_at(i, t)) os << ',' << format_double(v);
      os << ',' << tr.action[c] << ',' << format_double(tr.propensity[c]);
      if (probs) os << ',' << format_double(tr.prob1[c]);
      os << ',' << format_double(tr.outcome[c]) << ',' << format_double(tr.reward[c]) << '\n';
    }
}

inline json snapshot_to_json(const PolicySnapshot& s) {
  json j{{"update_time", s.update_time}, {"fitted", s.fitted}, {"penalty", s.penalty}, {"mab_diff", s.mab_diff}};
  j["beta"] = std::vector<double>(s.beta.data(), s.beta.data() + s.beta.size());
  json gram = json::array();
  for (Eigen::Index r = 0; r < s.gram.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < s.gram.cols(); ++c) row.push_back(s.gram(r, c));
    gram.push_back(row);
  }
  j["gram"] = gram;
  j["posterior"] = {{"mean", s.posterior.mean}, {"var", s.posterior.var}};
  return j;
}

inline PolicySnapshot snapshot_from_json(const json& j, const std::string& path) {
  detail::check_keys(j, {"update_time", "fitted", "penalty", "mab_diff", "beta", "gram", "posterior"}, path);
  PolicySnapshot s;
  try {
    s.update_time = j.at("update_time").get<int>();
    s.fitted = j.at("fitted").get<bool>();
    s.penalty = j.at("penalty").get<double>();
    s.mab_diff = j.at("mab_diff").get<double>();
    const auto beta = j.at("beta").get<std::vector<double>>();
    s.beta = Eigen::Map<const Eigen::VectorXd>(beta.data(), static_cast<Eigen::Index>(beta.size()));
    const auto& g = j.at("gram");
    s.gram.resize(static_cast<Eigen::Index>(g.size()), static_cast<Eigen::Index>(g.size()));
    for (std::size_t r = 0; r < g.size(); ++r) {
      const auto row = g[r].get<std::vector<double>>();
      if (row.size() != g.size()) throw ParseError(path + ".gram: not square");
      for (std::size_t c = 0; c < row.size(); ++c)
        s.gram(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = row[c];
    }
    s.posterior.mean = j.at("posterior").at("mean").get<std::array<double, 2>>();
    s.posterior.var = j.at("posterior").at("var").get<std::array<double, 2>>();
  } catch (const json::exception& e) {
    throw ParseError(path + ": " + e.what());
  }
  return s;
}

inline json trajectory_sidecar(const TrajectorySet& tr) {
  json j{{"n", tr.n},
         {"T", tr.T},
         {"context_dim", tr.context_dim},
         {"feature_dim", tr.feature_dim},
         {"replication_index", tr.replication_index},
         {"policy", policy_to_json(tr.policy)},
         {"has_prob1", !tr.prob1.empty()},
         {"snapshot_at", tr.snapshot_at}};
  json snaps = json::array();
  for (const auto& s : tr.snapshots) snaps.push_back(snapshot_to_json(s));
  j["snapshots"] = snaps;
  return j;
}

inline TrajectorySet read_trajectories(std::istream& csv, const json& sidecar) {
  TrajectorySet tr;
  try {
    detail::check_keys(sidecar,
                       {"n", "T", "context_dim", "feature_dim", "replication_index", "policy", "has_prob1",
                        "snapshot_at", "snapshots"},
                       "sidecar");
    tr.n = sidecar.at("n").get<std::size_t>();
    tr.T = sidecar.at("T").get<std::size_t>();
    tr.context_dim = sidecar.at("context_dim").get<std::size_t>();
    tr.feature_dim = sidecar.at("feature_dim").get<std::size_t>();
    tr.replication_index = sidecar.at("replication_index").get<std::uint32_t>();
    tr.snapshot_at = sidecar.at("snapshot_at").get<std::vector<std::size_t>>();
  } catch (const json::exception& e) {
    throw ParseError(std::string("sidecar: ") + e.what());
  }
  tr.policy = policy_from_json(sidecar.at("policy"), "sidecar.policy");
  const auto& snaps = sidecar.at("snapshots");
  for (std::size_t k = 0; k < snaps.size(); ++k)
    tr.snapshots.push_back(snapshot_from_json(snaps[k], "sidecar.snapshots[" + std::to_string(k) + "]"));
  if (tr.snapshot_at.size() != tr.T) throw ParseError("sidecar.snapshot_at: expected T entries");
  for (auto k : tr.snapshot_at)
    if (k >= tr.snapshots.size()) throw ParseError("sidecar.snapshot_at: index out of range");
  const bool probs = sidecar.at("has_prob1").get<bool>();

  const std::size_t cells = tr.n * tr.T;
  tr.context.resize(cells * tr.context_dim);
  tr.phi.resize(cells * tr.feature_dim);
  tr.action.resize(cells);
  tr.propensity.resize(cells);
  if (probs) tr.prob1.resize(cells);
  tr.outcome.resize(cells);
  tr.reward.resize(cells);
  std::vector<bool> seen(cells, false);

  const std::size_t cols = 3 + tr.context_dim + tr.feature_dim + 2 + (probs ? 1 : 0) + 2;
  std::string line;
  if (!std::getline(csv, line)) throw ParseError("trajectories: missing header");
  if (split_csv_line(line).size() != cols) throw ParseError("trajectories: header has wrong column count");
  std::size_t row = 1;
  while (std::getline(csv, line)) {
    ++row;
    if (line.empty()) continue;
    const auto f = split_csv_line(line);
    const std::string where = "trajectories row " + std::to_string(row);
    if (f.size() != cols) throw ParseError(where + ": expected " + std::to_string(cols) + " columns");
    const auto i = static_cast<std::size_t>(parse_int(f[1], where + " column i"));
    const long long t1 = parse_int(f[2], where + " column t");
    if (i >= tr.n || t1 < 1 || static_cast<std::size_t>(t1) > tr.T) throw ParseError(where + ": (i,t) out of range");
    const std::size_t t = static_cast<std::size_t>(t1 - 1);
    const std::size_t c = tr.cell(i, t);
    std::size_t col = 3;
    for (std::size_t k = 0; k < tr.context_dim; ++k)
      tr.context[c * tr.context_dim + k] = parse_double(f[col++], where + " ctx");
    for (std::size_t k = 0; k < tr.feature_dim; ++k)
      tr.phi[c * tr.feature_dim + k] = parse_double(f[col++], where + " phi");
    tr.action[c] = static_cast<int>(parse_int(f[col++], where + " column action"));
    tr.propensity[c] = parse_double(f[col++], where + " column propensity");
    if (probs) tr.prob1[c] = parse_double(f[col++], where + " column prob1");
    tr.outcome[c] = parse_double(f[col++], where + " column outcome");
    tr.reward[c] = parse_double(f[col++], where + " column reward");
    seen[c] = true;
  }
  for (std::size_t c = 0; c < cells; ++c)
    if (!seen[c]) throw ParseError("trajectories: missing cell (i=" + std::to_string(c / tr.T) +
                                   ", t=" + std::to_string(c % tr.T + 1) + ")");
  return tr;
}

}  // namespace adaptrial
