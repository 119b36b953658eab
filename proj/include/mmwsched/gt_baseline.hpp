#pragma once

// Non-cooperative best-response power control: every BS projects
// alpha*W/beta - 1/g onto [0, p_max] using last slot's equivalent gain.

#include <algorithm>
#include <cstddef>
#include <random>
#include <span>
#include <vector>

#include "mmwsched/channel.hpp"
#include "mmwsched/error.hpp"
#include "mmwsched/network_env.hpp"
#include "mmwsched/ql_agent.hpp"

namespace mmw {

/// SINR per watt of the serving link given the measured interference.
inline double equivalent_gain(const PhysicalLayer& phy, const ChannelRealization& ch,
                              std::size_t bs, std::size_t ue, double interference_w) {
  const double sigma2 = phy.radio.noise_power_w();
  require(sigma2 > 0.0, "noise power must be positive");
  return serving_link_gain(phy, ch, bs, ue) / (interference_w + sigma2);
}

/// Best response [alpha*W/beta - 1/g] clipped to [0, p_max]. beta == 0 is
/// taken as the limit alpha*W/beta -> infinity, i.e. full power.
inline double gt_power_update(double alpha, double beta, double bandwidth_hz, double g,
                              double p_max_w) {
  require(g > 0.0, "equivalent gain must be positive");
  require(alpha >= 0.0 && beta >= 0.0, "payoff weights must be non-negative");
  if (beta == 0.0) return p_max_w;
  const double x = alpha * bandwidth_hz / beta - 1.0 / g;
  return std::clamp(x, 0.0, p_max_w);
}

struct GtState {
  std::vector<double> powers_w;
  std::vector<double> gains;  // last measured g per BS
  bool initialized = false;
};

/// Parallel best-response dynamics over `num_slots` slots. An uninitialized
/// state starts with one slot of uniformly random grid powers.
template <typename Gen>
Trace run_block_gt(const NetworkConfig& config, GtState& state,
                   std::span<const std::size_t> scheduled, std::size_t num_slots,
                   const ChannelRealization& ch, const PayoffWeights& weights,
                   const PowerLevels& initial_levels, Gen& rng) {
  const std::size_t m = config.num_bs();
  const auto& phy = config.phy;
  Trace trace;
  trace.reserve(num_slots);
  for (std::size_t t = 0; t < num_slots; ++t) {
    if (!state.initialized) {
      std::uniform_int_distribution<std::size_t> pick(0, initial_levels.size() - 1);
      state.powers_w.assign(m, 0.0);
      for (double& p : state.powers_w) p = initial_levels[pick(rng)];
      state.gains.assign(m, 0.0);
      state.initialized = true;
    } else {
      for (std::size_t i = 0; i < m; ++i)
        state.powers_w[i] = gt_power_update(weights.alpha[i], weights.beta[i],
                                            phy.radio.bandwidth_hz, state.gains[i], phy.p_max_w);
    }
    SlotOutcome out = step(config, scheduled, state.powers_w, ch, weights);
    for (std::size_t i = 0; i < m; ++i)
      state.gains[i] = equivalent_gain(phy, ch, i, scheduled[i], out.interference_w[i]);
    trace.push_back(std::move(out));
  }
  return trace;
}

}  // namespace mmw
