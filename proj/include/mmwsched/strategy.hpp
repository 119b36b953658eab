#pragma once

// Uniform handle over the three power-allocation strategies so block and
// frame-level drivers can play any of them on the same channel.

#include <cstddef>
#include <cstdint>
#include <memory>
#include <optional>
#include <random>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmwsched/gt_baseline.hpp"
#include "mmwsched/network_env.hpp"
#include "mmwsched/ql_agent.hpp"
#include "mmwsched/rng.hpp"

namespace mmw {

enum class Strategy { kLearner, kGt, kRandom };

inline std::string_view to_string(Strategy s) {
  switch (s) {
    case Strategy::kLearner: return "learner";
    case Strategy::kGt: return "gt";
    case Strategy::kRandom: return "random";
  }
  return "?";
}

inline std::optional<Strategy> parse_strategy(std::string_view name) {
  if (name == "learner" || name == "ql") return Strategy::kLearner;
  if (name == "gt") return Strategy::kGt;
  if (name == "random") return Strategy::kRandom;
  return std::nullopt;
}

// Channel frames [0, training_frames) feed the training phase; execution
// frame k uses index training_frames + k so every strategy of a trial sees
// the same execution channels.
inline std::size_t execution_frame_index(const LearningParams& p, std::size_t k) {
  return p.training_frames + k;
}

class BlockPlayer {
 public:
  virtual ~BlockPlayer() = default;
  virtual Trace play(const ChannelRealization& ch, const PayoffWeights& weights,
                     std::size_t num_slots) = 0;
  virtual Strategy kind() const = 0;
  // Learner agents, empty for the other strategies.
  virtual std::span<const QAgent> agents() const { return {}; }
};

class LearnerPlayer final : public BlockPlayer {
 public:
  // Runs the training phase for `scheduled` and attaches fresh tables.
  LearnerPlayer(const NetworkConfig& config, const LearningParams& params,
                std::vector<std::size_t> scheduled, std::uint64_t trial_seed)
      : config_(&config), scheduled_(std::move(scheduled)) {
    const PowerLevels levels = make_power_levels(config.phy.p_max_w, params.power_levels);
    Rng training_rng = make_rng(trial_seed, Stream::kTraining);
    const auto quantizers =
        run_training_phase(config, scheduled_, levels, params.interference_states,
                           params.training_frames, trial_seed, 0, training_rng);
    agents_.reserve(config.num_bs());
    for (std::size_t i = 0; i < config.num_bs(); ++i) {
      agents_.emplace_back(levels, params, make_rng(trial_seed, Stream::kAgent, i));
      agents_.back().attach(scheduled_[i], quantizers[i]);
    }
  }

  Trace play(const ChannelRealization& ch, const PayoffWeights& weights,
             std::size_t num_slots) override {
    return run_block(*config_, agents_, scheduled_, num_slots, ch, weights);
  }
  Strategy kind() const override { return Strategy::kLearner; }
  std::span<const QAgent> agents() const override { return agents_; }

 private:
  const NetworkConfig* config_;
  std::vector<std::size_t> scheduled_;
  std::vector<QAgent> agents_;
};

class GtPlayer final : public BlockPlayer {
 public:
  GtPlayer(const NetworkConfig& config, const LearningParams& params,
           std::vector<std::size_t> scheduled, std::uint64_t trial_seed)
      : config_(&config),
        scheduled_(std::move(scheduled)),
        levels_(make_power_levels(config.phy.p_max_w, params.power_levels)),
        rng_(make_rng(trial_seed, Stream::kBaseline)) {}

  Trace play(const ChannelRealization& ch, const PayoffWeights& weights,
             std::size_t num_slots) override {
    return run_block_gt(*config_, state_, scheduled_, num_slots, ch, weights, levels_, rng_);
  }
  Strategy kind() const override { return Strategy::kGt; }

 private:
  const NetworkConfig* config_;
  std::vector<std::size_t> scheduled_;
  PowerLevels levels_;
  GtState state_;
  Rng rng_;
};

// Uniformly random grid power every slot.
class RandomPlayer final : public BlockPlayer {
 public:
  RandomPlayer(const NetworkConfig& config, const LearningParams& params,
               std::vector<std::size_t> scheduled, std::uint64_t trial_seed)
      : config_(&config),
        scheduled_(std::move(scheduled)),
        levels_(make_power_levels(config.phy.p_max_w, params.power_levels)),
        rng_(make_rng(trial_seed, Stream::kRandomPolicy)) {}

  Trace play(const ChannelRealization& ch, const PayoffWeights& weights,
             std::size_t num_slots) override {
    std::uniform_int_distribution<std::size_t> pick(0, levels_.size() - 1);
    std::vector<double> powers(config_->num_bs());
    Trace trace;
    trace.reserve(num_slots);
    for (std::size_t t = 0; t < num_slots; ++t) {
      for (double& p : powers) p = levels_[pick(rng_)];
      trace.push_back(step(*config_, scheduled_, powers, ch, weights));
    }
    return trace;
  }
  Strategy kind() const override { return Strategy::kRandom; }

 private:
  const NetworkConfig* config_;
  std::vector<std::size_t> scheduled_;
  PowerLevels levels_;
  Rng rng_;
};

inline std::unique_ptr<BlockPlayer> make_player(Strategy s, const NetworkConfig& config,
                                                const LearningParams& params,
                                                std::vector<std::size_t> scheduled,
                                                std::uint64_t trial_seed) {
  switch (s) {
    case Strategy::kLearner:
      return std::make_unique<LearnerPlayer>(config, params, std::move(scheduled), trial_seed);
    case Strategy::kGt:
      return std::make_unique<GtPlayer>(config, params, std::move(scheduled), trial_seed);
    case Strategy::kRandom:
      return std::make_unique<RandomPlayer>(config, params, std::move(scheduled), trial_seed);
  }
  throw InvalidArgument("unknown strategy");
}

}  // namespace mmw
