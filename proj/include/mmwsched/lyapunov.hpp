#pragma once

// Drift-plus-penalty utility maximization on top of a block-level power
// allocation strategy. Per frame: pick auxiliary throughput targets, turn the
// virtual queue backlogs into payoff weights, play the frame, update queues.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <limits>
#include <numeric>
#include <span>
#include <string>
#include <vector>

#include "mmwsched/channel.hpp"
#include "mmwsched/error.hpp"
#include "mmwsched/network_env.hpp"
#include "mmwsched/strategy.hpp"

namespace mmw {

// U(x) = x^c with 0 < c < 1.
struct UtilityFunction {
  double exponent = 0.6;

  double operator()(double x) const { return std::pow(x, exponent); }
  double derivative(double x) const { return exponent * std::pow(x, exponent - 1.0); }
};

struct LyapunovConfig {
  double v = 1e9;
  double p_avg_w = 3.97;
  std::size_t n_frames = 50;
  UtilityFunction utility;

  std::vector<std::string> violations(double p_max_w) const {
    std::vector<std::string> errs;
    if (!(v > 0.0)) errs.emplace_back("lyapunov.v: must be > 0");
    if (!(p_avg_w > 0.0 && p_avg_w <= p_max_w))
      errs.emplace_back("lyapunov.p_avg_w: must lie in (0, p_max]");
    if (!(utility.exponent > 0.0 && utility.exponent < 1.0))
      errs.emplace_back("lyapunov.utility_exponent: must lie in (0, 1)");
    return errs;
  }
};

// Throughput backlog per UE (bits) and power backlog per BS (joules).
struct VirtualQueues {
  std::vector<double> h;
  std::vector<double> z;

  static VirtualQueues zeros(std::size_t num_ue, std::size_t num_bs) {
    return {std::vector<double>(num_ue, 0.0), std::vector<double>(num_bs, 0.0)};
  }
};

/// argmax over [0, upper] of V*U(g) - H*g. The interior stationary point of
/// c*V*g^(c-1) = H is clipped to the box; with H == 0 the objective is
/// increasing and the upper end wins.
inline double solve_auxiliary(double v, double h_queue, double gamma_upper,
                              const UtilityFunction& u = {}) {
  require(h_queue >= 0.0 && gamma_upper >= 0.0, "queue and bound must be non-negative");
  if (gamma_upper == 0.0) return 0.0;
  if (h_queue == 0.0) return gamma_upper;
  const double c = u.exponent;
  const double stationary = std::pow(c * v / h_queue, 1.0 / (1.0 - c));
  return std::clamp(stationary, 0.0, gamma_upper);
}

/// T_f * W * log2(1 + g_free * p_max) where g_free is the noise-only
/// equivalent gain of the frame, an upper bound on any realizable gain.
inline double gamma_upper_bound(const NetworkConfig& config, const ChannelRealization& ch,
                                std::size_t bs, std::size_t ue, double p_max_w) {
  const auto& phy = config.phy;
  const double g_free = serving_link_gain(phy, ch, bs, ue) / phy.radio.noise_power_w();
  return config.frame.frame_s() * phy.radio.bandwidth_hz * std::log2(1.0 + g_free * p_max_w);
}

struct FrameWeights {
  double alpha = 0.0;
  double beta = 0.0;
};

inline FrameWeights frame_weights(const VirtualQueues& q, std::size_t bs, std::size_t scheduled_ue,
                                  std::size_t slots_per_block) {
  require(bs < q.z.size() && scheduled_ue < q.h.size(), "queue index out of range");
  const double nb = static_cast<double>(slots_per_block);
  return {q.h[scheduled_ue] * nb, q.z[bs] * nb};
}

inline double update_queue_h(double h, double gamma, double realized_bits) {
  return std::max(h + gamma - realized_bits, 0.0);
}

inline double update_queue_z(double z, double consumed_joule, double budget_joule) {
  return std::max(z + consumed_joule - budget_joule, 0.0);
}

// One row per frame. Vectors are per BS (UE entries refer to the UE the BS
// scheduled). Queue values are the ones in force during the frame.
struct FrameRecord {
  std::size_t frame = 0;
  std::vector<double> gamma;
  std::vector<double> bits;
  std::vector<double> h;
  std::vector<double> z;
  std::vector<double> alpha;
  std::vector<double> beta;
  std::vector<double> energy_j;
  double utility = 0.0;  // sum over UEs of U(mean bits per frame so far)
};

struct LyapunovRun {
  std::vector<FrameRecord> frames;
  VirtualQueues final_queues;
};

/// Frame-level driver. `player` keeps its own state (Q-tables, GT powers)
/// across frames; the channel of frame k is the trial's execution frame k.
inline LyapunovRun run_lyapunov(const NetworkConfig& config, BlockPlayer& player,
                                const LyapunovConfig& lc, const LearningParams& learning,
                                std::span<const std::size_t> scheduled,
                                std::uint64_t trial_seed) {
  const std::size_t m = config.num_bs();
  check_schedule(config.phy, scheduled);
  const double budget = config.frame.frame_s() * lc.p_avg_w;
  const double ts = config.frame.slot_s;

  LyapunovRun run;
  run.final_queues = VirtualQueues::zeros(config.num_ue(), m);
  VirtualQueues& q = run.final_queues;
  std::vector<double> cumulative_bits(m, 0.0);

  for (std::size_t k = 0; k < lc.n_frames; ++k) {
    const ChannelRealization ch =
        redraw_channel(config.phy, execution_frame_index(learning, k), trial_seed);
    FrameRecord rec;
    rec.frame = k;
    PayoffWeights weights{std::vector<double>(m), std::vector<double>(m)};
    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t ue = scheduled[i];
      const double upper = gamma_upper_bound(config, ch, i, ue, config.phy.p_max_w);
      rec.gamma.push_back(solve_auxiliary(lc.v, q.h[ue], upper, lc.utility));
      const FrameWeights w = frame_weights(q, i, ue, config.frame.slots_per_block);
      weights.alpha[i] = w.alpha;
      weights.beta[i] = w.beta;
      rec.h.push_back(q.h[ue]);
      rec.z.push_back(q.z[i]);
    }
    rec.alpha = weights.alpha;
    rec.beta = weights.beta;

    rec.bits.assign(m, 0.0);
    rec.energy_j.assign(m, 0.0);
    for (std::size_t n = 0; n < config.frame.blocks_per_frame; ++n) {
      const Trace trace = player.play(ch, weights, config.frame.slots_per_block);
      for (const auto& slot : trace)
        for (std::size_t i = 0; i < m; ++i) {
          rec.bits[i] += slot.throughput_bits[i];
          rec.energy_j[i] += ts * slot.powers_w[i];
        }
    }

    for (std::size_t i = 0; i < m; ++i) {
      const std::size_t ue = scheduled[i];
      q.h[ue] = update_queue_h(q.h[ue], rec.gamma[i], rec.bits[i]);
      q.z[i] = update_queue_z(q.z[i], rec.energy_j[i], budget);
      if (!(q.h[ue] >= 0.0) || !(q.z[i] >= 0.0))
        throw RuntimeError("virtual queue left the non-negative orthant");
      cumulative_bits[i] += rec.bits[i];
    }
    const double frames_so_far = static_cast<double>(k + 1);
    for (std::size_t i = 0; i < m; ++i) rec.utility += lc.utility(cumulative_bits[i] / frames_so_far);
    run.frames.push_back(std::move(rec));
  }
  return run;
}

// Z/H of a BS during a frame; 0 when both are zero.
inline double queue_ratio(const FrameRecord& r, std::size_t bs) {
  if (r.z[bs] == 0.0) return 0.0;
  if (r.h[bs] == 0.0) return std::numeric_limits<double>::infinity();
  return r.z[bs] / r.h[bs];
}

}  // namespace mmw
