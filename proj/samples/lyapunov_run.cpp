// Runs the drift-plus-penalty driver over the learner and prints the
// per-frame queue backlogs of BS 1.

#include <iostream>

#include "mmwsched/config.hpp"
#include "mmwsched/lyapunov.hpp"

int main() {
  using namespace mmw;
  const Scenario s = make_default_scenario(1);
  const auto scheduled = schedule_by_rank(s.network.phy.geometry, 0);
  LyapunovConfig lc;
  lc.p_avg_w = 0.5 * s.network.phy.p_max_w;
  lc.n_frames = 20;
  LearnerPlayer player(s.network, s.learning, scheduled, 3);
  const LyapunovRun run = run_lyapunov(s.network, player, lc, s.learning, scheduled, 3);
  std::cout << "frame,gamma,bits,H,Z,utility\n";
  for (const auto& f : run.frames)
    std::cout << f.frame + 1 << ',' << f.gamma[0] << ',' << f.bits[0] << ',' << f.h[0] << ','
              << f.z[0] << ',' << f.utility << '\n';
}
