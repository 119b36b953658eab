#pragma once

// Independent tabular Q-learning agents, one per BS: uniform power grid as
// the action space, percentile-quantized interference as the state, and the
// two-phase (training, execution) scheduling procedure.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <map>
#include <optional>
#include <ostream>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmwsched/error.hpp"
#include "mmwsched/matrix.hpp"
#include "mmwsched/network_env.hpp"
#include "mmwsched/rng.hpp"

namespace mmw {

struct LearningParams {
  double epsilon = 0.05;
  double discount = 0.9;
  double learning_rate = 0.1;
  std::size_t power_levels = 10;  // P_q
  std::size_t interference_states = 10;  // I_q
  std::size_t training_frames = 100;  // T_train

  std::vector<std::string> violations() const {
    std::vector<std::string> errs;
    if (!(epsilon >= 0.0 && epsilon <= 1.0)) errs.emplace_back("learning.epsilon: must lie in [0, 1]");
    if (!(discount >= 0.0 && discount < 1.0)) errs.emplace_back("learning.discount: must lie in [0, 1)");
    if (!(learning_rate > 0.0 && learning_rate <= 1.0))
      errs.emplace_back("learning.learning_rate: must lie in (0, 1]");
    if (power_levels < 2) errs.emplace_back("learning.power_levels: must be >= 2");
    if (interference_states < 1) errs.emplace_back("learning.interference_states: must be >= 1");
    if (training_frames < 1) errs.emplace_back("learning.training_frames: must be >= 1");
    return errs;
  }
};

// ---------------------------------------------------------------------------
// Action space

struct PowerLevels {
  double p_max_w = 0.0;
  std::vector<double> levels;

  std::size_t size() const { return levels.size(); }
  double operator[](std::size_t a) const { return levels[a]; }
};

// levels[a] = a * p_max / (P_q - 1); the first is 0 W and the last p_max.
inline PowerLevels make_power_levels(double p_max_w, std::size_t count) {
  require(count >= 2, "at least two power levels are required");
  require(p_max_w >= 0.0, "p_max must be non-negative");
  PowerLevels out{p_max_w, std::vector<double>(count)};
  for (std::size_t a = 0; a < count; ++a)
    out.levels[a] = static_cast<double>(a) * p_max_w / static_cast<double>(count - 1);
  out.levels.back() = p_max_w;
  return out;
}

// ---------------------------------------------------------------------------
// State space

/// Equal-probability bins over an empirical interference distribution.
/// State k covers (b[k-1], b[k]]; values at or below b[0] map to state 0 and
/// values above the last boundary to the top state.
struct InterferenceQuantizer {
  std::vector<double> boundaries;  // I_q - 1 ascending cut points, watts

  std::size_t num_states() const { return boundaries.size() + 1; }

  std::size_t quantize(double interference_w) const {
    return static_cast<std::size_t>(
        std::lower_bound(boundaries.begin(), boundaries.end(), interference_w) -
        boundaries.begin());
  }
};

/// Nearest-rank percentiles: boundary k (1-based) is the
/// ceil(n*k/I_q)-th smallest training sample.
inline InterferenceQuantizer build_quantizer(std::vector<double> samples, std::size_t num_states) {
  require(num_states >= 1, "at least one interference state is required");
  require(samples.size() >= num_states,
          "insufficient training samples: " + std::to_string(samples.size()) + " < I_q = " +
              std::to_string(num_states));
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  InterferenceQuantizer q;
  q.boundaries.reserve(num_states - 1);
  for (std::size_t k = 1; k < num_states; ++k) {
    const std::size_t rank = (n * k + num_states - 1) / num_states;
    q.boundaries.push_back(samples[rank - 1]);
  }
  return q;
}

inline std::size_t quantize_interference(const InterferenceQuantizer& q, double interference_w) {
  return q.quantize(interference_w);
}

// ---------------------------------------------------------------------------
// Q-table

struct QTable {
  Matrix<double> q;  // (action, state)
  double learning_rate = 0.1;
  double discount = 0.9;
  double epsilon = 0.05;

  std::size_t num_actions() const { return q.rows(); }
  std::size_t num_states() const { return q.cols(); }

  double best_value(std::size_t state) const {
    double best = q(0, state);
    for (std::size_t a = 1; a < q.rows(); ++a) best = std::max(best, q(a, state));
    return best;
  }

  // Lowest action index among the maxima.
  std::size_t greedy_action(std::size_t state) const {
    std::size_t best = 0;
    for (std::size_t a = 1; a < q.rows(); ++a)
      if (q(a, state) > q(best, state)) best = a;
    return best;
  }
};

// Optimistic start: every entry is 1.
inline QTable make_q_table(std::size_t actions, std::size_t states, const LearningParams& p) {
  require(actions >= 1 && states >= 1, "Q-table needs at least one action and one state");
  return {Matrix<double>(actions, states, 1.0), p.learning_rate, p.discount, p.epsilon};
}

struct Experience {
  std::size_t state = 0;
  std::size_t action = 0;
  double reward = 0.0;
  std::size_t next_state = 0;
};

template <typename Gen>
std::size_t select_action(const QTable& table, std::size_t state, Gen& rng) {
  require(state < table.num_states(), "state index out of range");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  if (coin(rng) < table.epsilon) {
    std::uniform_int_distribution<std::size_t> any(0, table.num_actions() - 1);
    return any(rng);
  }
  return table.greedy_action(state);
}

inline void update_q(QTable& table, const Experience& e, double learning_rate) {
  require(e.action < table.num_actions(), "action index out of range");
  require(e.state < table.num_states() && e.next_state < table.num_states(),
          "state index out of range");
  const double target = e.reward + table.discount * table.best_value(e.next_state);
  double& cell = table.q(e.action, e.state);
  cell = (1.0 - learning_rate) * cell + learning_rate * target;
}

inline void update_q(QTable& table, const Experience& e) {
  update_q(table, e, table.learning_rate);
}

// ---------------------------------------------------------------------------
// Agent

// What a BS keeps per UE it has scheduled.
struct UeModel {
  InterferenceQuantizer quantizer;
  QTable table;
};

/// One BS's learner. Holds a quantizer and Q-table per scheduled UE plus the
/// exploration stream; the state carries over between blocks of the same UE.
class QAgent {
 public:
  QAgent(PowerLevels levels, LearningParams params, Rng rng)
      : levels_(std::move(levels)), params_(params), rng_(std::move(rng)) {}

  // Installs (or replaces) the quantizer for `ue` with a fresh all-ones table.
  void attach(std::size_t ue, InterferenceQuantizer quantizer) {
    QTable table = make_q_table(levels_.size(), quantizer.num_states(), params_);
    models_.insert_or_assign(ue, UeModel{std::move(quantizer), std::move(table)});
  }

  // Switches to `ue`; the first slot after a switch is a bootstrap slot.
  void activate(std::size_t ue) {
    require(models_.contains(ue), "no model attached for UE " + std::to_string(ue));
    if (!active_ || *active_ != ue) bootstrapped_ = false;
    active_ = ue;
  }

  void reset_tables() {
    for (auto& [ue, m] : models_)
      m.table = make_q_table(levels_.size(), m.quantizer.num_states(), params_);
    bootstrapped_ = false;
  }

  std::size_t choose_action() {
    if (!bootstrapped_) {
      std::uniform_int_distribution<std::size_t> any(0, levels_.size() - 1);
      last_action_ = any(rng_);
    } else {
      last_action_ = select_action(model().table, state_, rng_);
    }
    return last_action_;
  }

  // Feeds back the measured interference and reward of the slot just played.
  // The bootstrap slot only defines the initial state.
  void observe(double interference_w, double reward) {
    UeModel& m = model();
    const std::size_t next = m.quantizer.quantize(interference_w);
    if (bootstrapped_) update_q(m.table, {state_, last_action_, reward, next});
    state_ = next;
    bootstrapped_ = true;
  }

  double power(std::size_t action) const { return levels_[action]; }
  const PowerLevels& levels() const { return levels_; }
  const LearningParams& params() const { return params_; }
  std::size_t state() const { return state_; }
  bool bootstrapped() const { return bootstrapped_; }
  const std::map<std::size_t, UeModel>& models() const { return models_; }
  const UeModel& model(std::size_t ue) const { return models_.at(ue); }

  // Q-table entries held across all UEs.
  std::size_t storage_entries() const {
    std::size_t n = 0;
    for (const auto& [ue, m] : models_) n += m.table.q.size();
    return n;
  }

 private:
  UeModel& model() {
    require(active_.has_value(), "agent has no active UE");
    return models_.at(*active_);
  }

  PowerLevels levels_;
  LearningParams params_;
  Rng rng_;
  std::map<std::size_t, UeModel> models_;
  std::optional<std::size_t> active_;
  std::size_t state_ = 0;
  std::size_t last_action_ = 0;
  bool bootstrapped_ = false;
};

// ---------------------------------------------------------------------------
// Training and execution phases

/// Simulated scheduling with uniformly random powers over `training_frames`
/// frames (channel redrawn per frame from frames [first_frame, ...)), then a
/// percentile quantizer per BS from the interference at its scheduled UE.
template <typename Gen>
std::vector<InterferenceQuantizer> run_training_phase(const NetworkConfig& config,
                                                      std::span<const std::size_t> scheduled,
                                                      const PowerLevels& levels,
                                                      std::size_t num_states,
                                                      std::size_t training_frames,
                                                      std::uint64_t channel_seed,
                                                      std::size_t first_frame, Gen& rng) {
  require(training_frames >= 1, "training needs at least one frame");
  const std::size_t m = config.num_bs();
  const std::size_t slots = config.frame.blocks_per_frame * config.frame.slots_per_block;
  std::vector<std::vector<double>> samples(m);
  for (auto& s : samples) s.reserve(training_frames * slots);

  std::uniform_int_distribution<std::size_t> pick(0, levels.size() - 1);
  std::vector<double> powers(m);
  for (std::size_t f = 0; f < training_frames; ++f) {
    const ChannelRealization ch = redraw_channel(config.phy, first_frame + f, channel_seed);
    for (std::size_t t = 0; t < slots; ++t) {
      for (double& p : powers) p = levels[pick(rng)];
      const LinkState links = compute_sinrs(config.phy, ch, scheduled, powers);
      for (std::size_t i = 0; i < m; ++i) samples[i].push_back(links.interference_w[i]);
    }
  }
  std::vector<InterferenceQuantizer> out;
  out.reserve(m);
  for (auto& s : samples) out.push_back(build_quantizer(std::move(s), num_states));
  return out;
}

/// Runs `num_slots` slots of the execution phase: every agent acts on its
/// current state, the environment plays the joint action, and each agent
/// learns from its own reward and newly quantized interference.
inline Trace run_block(const NetworkConfig& config, std::span<QAgent> agents,
                       std::span<const std::size_t> scheduled, std::size_t num_slots,
                       const ChannelRealization& ch, const PayoffWeights& weights) {
  const std::size_t m = config.num_bs();
  require(agents.size() == m, "one agent per BS is required");
  for (std::size_t i = 0; i < m; ++i) agents[i].activate(scheduled[i]);

  Trace trace;
  trace.reserve(num_slots);
  std::vector<double> powers(m);
  for (std::size_t t = 0; t < num_slots; ++t) {
    for (std::size_t i = 0; i < m; ++i) powers[i] = agents[i].power(agents[i].choose_action());
    SlotOutcome out = step(config, scheduled, powers, ch, weights);
    for (std::size_t i = 0; i < m; ++i) agents[i].observe(out.interference_w[i], out.reward[i]);
    trace.push_back(std::move(out));
  }
  return trace;
}

// Human-readable Q-table listing, one matrix per BS and UE.
inline void dump_q_tables(std::ostream& os, std::span<const QAgent> agents) {
  for (std::size_t i = 0; i < agents.size(); ++i) {
    for (const auto& [ue, m] : agents[i].models()) {
      const QTable& t = m.table;
      os << "# bs " << i << " ue " << ue << " (" << t.num_actions() << " actions x "
         << t.num_states() << " states)\n";
      os << "power_w";
      for (std::size_t s = 0; s < t.num_states(); ++s) os << ",s" << s + 1;
      os << '\n';
      for (std::size_t a = 0; a < t.num_actions(); ++a) {
        os << agents[i].power(a);
        for (std::size_t s = 0; s < t.num_states(); ++s) os << ',' << t.q(a, s);
        os << '\n';
      }
    }
  }
}

}  // namespace mmw
