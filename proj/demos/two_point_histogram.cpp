// Average-reward estimates under epsilon-greedy in the two-step
// nonstationary environment pile up on two atoms instead of one.
#include <cstdio>

#include "adaptrial/adaptrial.hpp"

int main() {
  using namespace adaptrial;
  ExperimentConfig cfg = preset("fig2-epsgreedy");
  cfg.trial.n = 20000;
  cfg.reps = 100;
  const ReplicationSummary s = run_replications(cfg);
  const Histogram h = histogram_export(s.theta_hats(), 12, std::make_pair(-0.14, 0.02));
  const auto atoms = TwoPointLaw{0.1, {}}.atoms();
  std::printf("theta* = %.5f, atoms %.5f / %.5f, mean theta_hat %.5f\n", *s.theta_star.value, atoms[0], atoms[1],
              s.mean_theta_hat);
  for (std::size_t k = 0; k < h.counts.size(); ++k) {
    std::printf("[%8.4f, %8.4f) %3zu ", h.edges[k], h.edges[k + 1], h.counts[k]);
    for (std::size_t j = 0; j < h.counts[k]; ++j) std::putchar('#');
    std::putchar('\n');
  }
}
