#pragma once

// Shared radio environment: topology, frame clock, per-frame fading and the
// slot-level payoff accounting.

#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmwsched/channel.hpp"
#include "mmwsched/error.hpp"
#include "mmwsched/rng.hpp"

namespace mmw {

struct FrameStructure {
  std::size_t blocks_per_frame = 1;  // N_f
  std::size_t slots_per_block = 100;  // N_b
  double slot_s = 1e-3;  // T_s

  double block_s() const { return static_cast<double>(slots_per_block) * slot_s; }
  double frame_s() const { return static_cast<double>(blocks_per_frame) * block_s(); }

  std::vector<std::string> violations() const {
    std::vector<std::string> errs;
    if (blocks_per_frame < 1) errs.emplace_back("frame.blocks_per_frame: must be >= 1");
    if (slots_per_block < 1) errs.emplace_back("frame.slots_per_block: must be >= 1");
    if (!(slot_s > 0.0)) errs.emplace_back("frame.slot_s: must be > 0");
    return errs;
  }
};

struct NetworkConfig {
  PhysicalLayer phy;
  FrameStructure frame;

  std::size_t num_bs() const { return phy.num_bs(); }
  std::size_t num_ue() const { return phy.geometry.num_ue(); }
};

// Per-BS payoff weights: alpha on throughput, beta (per watt) on power.
struct PayoffWeights {
  std::vector<double> alpha;
  std::vector<double> beta;

  static PayoffWeights uniform(std::size_t num_bs, double alpha, double beta) {
    return {std::vector<double>(num_bs, alpha), std::vector<double>(num_bs, beta)};
  }
};

// Joint result of one slot; every per-UE vector is indexed by BS (entry i is
// the UE scheduled by BS i).
struct SlotOutcome {
  std::vector<double> sinr;
  std::vector<double> interference_w;
  std::vector<double> throughput_bits;
  std::vector<double> reward;
  std::vector<double> powers_w;

  double network_reward() const { return std::accumulate(reward.begin(), reward.end(), 0.0); }
  bool operator==(const SlotOutcome&) const = default;
};

using Trace = std::vector<SlotOutcome>;

// Fresh i.i.d. fading for every BS-UE pair, a pure function of
// (seed, frame_index).
inline ChannelRealization redraw_channel(const PhysicalLayer& phy, std::size_t frame_index,
                                         std::uint64_t seed) {
  Rng rng = make_rng(seed, Stream::kChannel, frame_index);
  ChannelRealization ch{Matrix<double>(phy.geometry.num_ue(), phy.num_bs()), frame_index};
  for (std::size_t j = 0; j < ch.h.rows(); ++j)
    for (std::size_t i = 0; i < ch.h.cols(); ++i) ch.h(j, i) = sample_nakagami(phy.fading, rng);
  return ch;
}

inline SlotOutcome step(const NetworkConfig& config, std::span<const std::size_t> scheduled,
                        std::span<const double> powers_w, const ChannelRealization& ch,
                        const PayoffWeights& weights) {
  const std::size_t m = config.num_bs();
  require(weights.alpha.size() == m && weights.beta.size() == m,
          "payoff weights must have one entry per BS");
  LinkState links = compute_sinrs(config.phy, ch, scheduled, powers_w);

  const double ts = config.frame.slot_s;
  const double w = config.phy.radio.bandwidth_hz;
  SlotOutcome out;
  out.sinr = std::move(links.sinr);
  out.interference_w = std::move(links.interference_w);
  out.powers_w.assign(powers_w.begin(), powers_w.end());
  out.throughput_bits.resize(m);
  out.reward.resize(m);
  for (std::size_t i = 0; i < m; ++i) {
    out.throughput_bits[i] = ts * w * std::log2(1.0 + out.sinr[i]);
    out.reward[i] = weights.alpha[i] * out.throughput_bits[i] - weights.beta[i] * ts * powers_w[i];
  }
  return out;
}

// Payoff rate (per second) of BS i for the slot.
inline double payoff_rate(const NetworkConfig& config, const SlotOutcome& outcome, std::size_t bs) {
  return outcome.reward.at(bs) / config.frame.slot_s;
}

inline double measure_interference(const SlotOutcome& outcome, std::size_t bs) {
  require(bs < outcome.interference_w.size(), "BS index out of range");
  return outcome.interference_w[bs];
}

struct AverageReward {
  std::vector<double> per_bs;
  double network = 0.0;
};

inline AverageReward running_average_reward(std::span<const SlotOutcome> history) {
  require(!history.empty(), "average reward of an empty history");
  AverageReward avg;
  avg.per_bs.assign(history.front().reward.size(), 0.0);
  for (const auto& slot : history) {
    for (std::size_t i = 0; i < avg.per_bs.size(); ++i) avg.per_bs[i] += slot.reward[i];
    avg.network += slot.network_reward();
  }
  const double n = static_cast<double>(history.size());
  for (double& v : avg.per_bs) v /= n;
  avg.network /= n;
  return avg;
}

// Network reward averaged over slots 1..t, for every t.
inline std::vector<double> running_average_series(std::span<const SlotOutcome> history) {
  std::vector<double> out;
  out.reserve(history.size());
  double sum = 0.0;
  for (std::size_t t = 0; t < history.size(); ++t) {
    sum += history[t].network_reward();
    out.push_back(sum / static_cast<double>(t + 1));
  }
  return out;
}

/// UE of rank `rank` (0 = first) for every BS.
inline std::vector<std::size_t> schedule_by_rank(const Geometry& g, std::size_t rank) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.num_bs(); ++i) {
    const auto ues = g.ues_of(i);
    require(rank < ues.size(), "BS " + std::to_string(i) + " has no UE of rank " +
                                   std::to_string(rank + 1));
    out.push_back(ues[rank]);
  }
  return out;
}

inline std::vector<std::size_t> schedule_round_robin(const Geometry& g, std::size_t block) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.num_bs(); ++i) {
    const auto ues = g.ues_of(i);
    out.push_back(ues[block % ues.size()]);
  }
  return out;
}

}  // namespace mmw
