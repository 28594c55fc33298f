#include <cstdlib>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "adaptrial/adaptrial.hpp"

namespace {

std::string presets_footer() {
  std::string s = "Presets:\n";
  for (const auto& p : adaptrial::preset_list()) s += "  " + std::string(p.name) + "  " + p.description + "\n";
  return s;
}

void add_config_options(CLI::App* cmd, adaptrial::cli::ConfigArgs& a, bool with_reps) {
  cmd->add_option("--preset", a.preset, "Named experiment preset");
  cmd->add_option("--config", a.config_path, "Experiment JSON file")->check(CLI::ExistingFile);
  cmd->add_option("--set", a.overrides, "Override a config key (dotted path), repeatable")->take_all();
  cmd->add_option("--seed", a.seed, "Master seed");
  if (with_reps) cmd->add_option("--reps", a.reps, "Number of replications");
}

}  // namespace

int main(int argc, char** argv) {
  namespace cli = adaptrial::cli;
  CLI::App app{"Simulation and inference for bandit-driven adaptive trials"};
  app.footer(presets_footer());
  app.require_subcommand(1);

  cli::ConfigArgs run_args, rep_args, report_args;
  std::string out_dir = "out";
  std::uint32_t rep_index = 0;
  std::size_t threads = 1;

  auto* run = app.add_subcommand("run", "Simulate one trial and write trajectories and estimates");
  add_config_options(run, run_args, false);
  run->add_option("--rep", rep_index, "Replication index");
  run->add_option("--out", out_dir, "Output directory");

  auto* replicate = app.add_subcommand("replicate", "Run R replications and write summaries");
  add_config_options(replicate, rep_args, true);
  replicate->add_option("--threads", threads, "Worker threads")->check(CLI::PositiveNumber);
  replicate->add_option("--out", out_dir, "Output directory");

  std::string traj_path, sidecar_path, report_out;
  auto* report = app.add_subcommand("report", "Estimate from saved trajectories");
  add_config_options(report, report_args, false);
  report->add_option("--trajectories", traj_path, "trajectories.csv")->required()->check(CLI::ExistingFile);
  report->add_option("--snapshots", sidecar_path, "snapshots.json")->required()->check(CLI::ExistingFile);
  report->add_option("--out", report_out, "Output JSON (stdout if omitted)");

  std::string hist_in, hist_out = "hist.csv";
  std::size_t bins = 30;
  std::vector<double> range;
  std::string column;
  auto* hist = app.add_subcommand("hist", "Histogram of a value column (theta.csv or oracle output)");
  hist->add_option("--input", hist_in, "Input CSV")->required()->check(CLI::ExistingFile);
  hist->add_option("--bins", bins, "Number of bins")->check(CLI::PositiveNumber);
  hist->add_option("--range", range, "Bin range: lo hi")->expected(2);
  hist->add_option("--column", column, "Column name");
  hist->add_option("--out", hist_out, "Output CSV");

  cli::OracleArgs oracle_args;
  std::string oracle_out = "oracle.csv";
  auto* oracle = app.add_subcommand("oracle", "Draw from a limiting-law oracle");
  oracle->add_option("--kind", oracle_args.kind, "two-point | scaled-uniform | misspecified")->required();
  oracle->add_option("--count", oracle_args.count, "Number of draws");
  oracle->add_option("--seed", oracle_args.seed, "Seed");
  oracle->add_option("--epsilon", oracle_args.epsilon, "Exploration parameter");
  oracle->add_option("--scale", oracle_args.scale, "Scale of the uniform law");
  oracle->add_option("--resolution", oracle_args.resolution, "Quadrature points");
  oracle->add_flag("--degenerate", oracle_args.degenerate, "Misspecified law with zero covariance");
  oracle->add_option("--out", oracle_out, "Output CSV");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }

  try {
    if (*run) {
      cli::cmd_run(cli::load_config(run_args), rep_index, out_dir);
    } else if (*replicate) {
      const auto s = cli::cmd_replicate(cli::load_config(rep_args), threads, out_dir);
      std::cerr << "replicate: " << s.name << " R=" << s.R << " mean_theta_hat=" << s.mean_theta_hat
                << " wall=" << s.wall_seconds << "s\n";
    } else if (*report) {
      adaptrial::EstimandSpec estimand;
      adaptrial::ThetaStar ts{std::nullopt, 0.0, "none"};
      if (report_args.preset || report_args.config_path) {
        const auto cfg = cli::load_config(report_args);
        estimand = cfg.estimand;
        ts = cli::cheap_theta_star(cfg);
      }
      const auto j = cli::cmd_report(traj_path, sidecar_path, estimand, ts);
      if (report_out.empty())
        std::cout << j.dump(2) << '\n';
      else
        cli::write_text(report_out, j.dump(2) + "\n");
    } else if (*hist) {
      std::optional<std::pair<double, double>> r;
      if (range.size() == 2) r = std::make_pair(range[0], range[1]);
      cli::cmd_hist(hist_in, bins, hist_out, r, column.empty() ? std::nullopt : std::optional<std::string>(column));
    } else if (*oracle) {
      cli::cmd_oracle(oracle_args, oracle_out);
    }
  } catch (const std::exception& e) {
    std::string msg = e.what();
    for (auto& c : msg)
      if (c == '\n') c = ' ';
    std::cerr << "error: " << msg << '\n';
    return 1;
  }
  return 0;
}
