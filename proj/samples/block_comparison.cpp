// Trains the learner on the default scenario, then plays one block with the
// learner and the best-response baseline on the same channel.

#include <cstdint>
#include <iostream>

#include "mmwsched/config.hpp"
#include "mmwsched/strategy.hpp"

int main() {
  using namespace mmw;
  const std::uint64_t seed = 7;
  const Scenario s = make_default_scenario(1);
  const NetworkConfig& config = s.network;
  const auto scheduled = schedule_by_rank(config.phy.geometry, 0);
  const auto weights = PayoffWeights::uniform(config.num_bs(), 1.0, 0.1 * config.phy.radio.bandwidth_hz);
  const ChannelRealization ch =
      redraw_channel(config.phy, execution_frame_index(s.learning, 0), seed);

  for (Strategy kind : {Strategy::kLearner, Strategy::kGt, Strategy::kRandom}) {
    auto player = make_player(kind, config, s.learning, scheduled, seed);
    const Trace trace = player->play(ch, weights, config.frame.slots_per_block);
    const AverageReward avg = running_average_reward(trace);
    std::cout << to_string(kind) << ": average network reward " << avg.network << '\n';
  }
}
