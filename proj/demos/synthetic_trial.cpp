#include <cstdio>

#include "adaptrial/adaptrial.hpp"

int main() {
  using namespace adaptrial;
  TrialConfig cfg;
  cfg.n = 1000;
  cfg.T = 50;
  cfg.env = SyntheticDosage{};
  cfg.policy = Boltzmann{0.1, 2.0, 1.0, true};
  cfg.seed = {7, 0, ""};

  const TrajectorySet tr = run_trial(cfg);
  const TrialSummary ts = summarize_trial(tr);
  const EstimateReport rep = estimate(tr, EstimandSpec{});
  std::printf("mean outcome %.4f, P(A=1) at t=1 %.3f, at t=50 %.3f\n", ts.mean_outcome, ts.action1_frequency.front(),
              ts.action1_frequency.back());
  std::printf("theta_hat %.4f  se(S) %.4f  se(AS) %.4f\n", rep.target_theta(), std::sqrt(*rep.target_var_standard()),
              std::sqrt(*rep.target_var_adaptive()));
  const auto b = ts.final_snapshot.beta1();
  std::printf("final advantage coefficients [%.4f, %.4f]\n", b[0], b[1]);
}
