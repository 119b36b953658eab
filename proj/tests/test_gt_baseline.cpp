#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "mmwsched/config.hpp"
#include "mmwsched/gt_baseline.hpp"
#include "mmwsched/strategy.hpp"
#include "support.hpp"

using namespace mmw;
using namespace mmwtest;

namespace {

// One BS with one UE: no interference, so g is the noise-only gain.
NetworkConfig single_cell() {
  NetworkConfig c;
  auto& g = c.phy.geometry;
  g.bs_positions = {{0.0, 0.0}};
  g.ue_positions = {{30.0, 40.0}};
  g.serving_bs = {0};
  return c;
}

}  // namespace

TEST(GtUpdate, ClosedForm) {
  EXPECT_DOUBLE_EQ(gt_power_update(1.0, 1e8, 4e8, 2.0, 7.94), 3.5);
  EXPECT_EQ(gt_power_update(1.0, 1e8, 4e8, 0.1, 7.94), 0.0);
  EXPECT_EQ(gt_power_update(1.0, 1e7, 4e8, 1.0, 7.94), 7.94);
  EXPECT_EQ(gt_power_update(1.0, 0.0, 4e8, 1.0, 7.94), 7.94);
  EXPECT_EQ(gt_power_update(0.0, 1.0, 4e8, 1e9, 7.94), 0.0);
  EXPECT_THROW(gt_power_update(1.0, 1.0, 4e8, 0.0, 7.94), InvalidArgument);
}

TEST(GtUpdate, ProjectionAndMonotonicity) {
  const CheckResult r = check_gt_projection(5000, 51);
  EXPECT_TRUE(r.ok) << r.detail;
}

TEST(GtBlock, SingleCellReachesBestResponse) {
  const NetworkConfig c = single_cell();
  const ChannelRealization ch = redraw_channel(c.phy, 0, 1);
  const std::vector<std::size_t> sched{0};
  const double beta = 1e8;
  const PayoffWeights w = PayoffWeights::uniform(1, 1.0, beta);
  GtState state;
  Rng rng = make_rng(1, Stream::kBaseline);
  const Trace t = run_block_gt(c, state, sched, 3, ch, w, make_power_levels(c.phy.p_max_w, 10), rng);
  const double noise = oracle_noise_w(1.5, 290.0, 4e8);
  const double gain = (400.0 / 37.0) * ch.h(0, 0) * ch.h(0, 0) * std::pow(2500.0 + 400.0, -2.0);
  const double want = std::clamp(4e8 / beta - noise / gain, 0.0, c.phy.p_max_w);
  ASSERT_GT(want, 0.0);
  ASSERT_LT(want, c.phy.p_max_w);
  EXPECT_NEAR(t[1].powers_w[0] / want, 1.0, 1e-9);
  EXPECT_NEAR(t[2].powers_w[0] / want, 1.0, 1e-9);
}

TEST(GtBlock, FixedPointConsistency) {
  // Whenever powers repeat across two slots on a static channel, each power
  // is the best response to its own induced equivalent gain.
  const Scenario s = make_default_scenario(1);
  const auto sched = schedule_by_rank(s.network.phy.geometry, 2);
  const auto ch = redraw_channel(s.network.phy, 0, 3);
  const auto& phy = s.network.phy;
  for (double beta : {4e7, 1e8, 4e8}) {
    const auto w = PayoffWeights::uniform(4, 1.0, beta);
    GtState state;
    Rng rng = make_rng(3, Stream::kBaseline);
    const Trace t = run_block_gt(s.network, state, sched, 200, ch, w, make_power_levels(phy.p_max_w, 10), rng);
    bool any = false;
    for (std::size_t k = 1; k < t.size(); ++k) {
      bool same = true;
      for (std::size_t i = 0; i < 4; ++i)
        same = same && std::fabs(t[k].powers_w[i] - t[k - 1].powers_w[i]) <= 1e-12 * phy.p_max_w;
      if (!same) continue;
      any = true;
      for (std::size_t i = 0; i < 4; ++i) {
        const double g = equivalent_gain(phy, ch, i, sched[i], t[k].interference_w[i]);
        const double br = gt_power_update(1.0, beta, phy.radio.bandwidth_hz, g, phy.p_max_w);
        EXPECT_NEAR(t[k].powers_w[i], br, 1e-9 * phy.p_max_w) << "beta=" << beta << " slot " << k;
      }
    }
    EXPECT_TRUE(any) << "beta=" << beta;
  }
}

TEST(GtBlock, BetaZeroTransmitsFullPowerAfterFirstSlot) {
  const Scenario s = make_default_scenario(1);
  const auto sched = schedule_by_rank(s.network.phy.geometry, 0);
  const auto ch = redraw_channel(s.network.phy, 0, 3);
  GtPlayer player(s.network, s.learning, sched, 3);
  const Trace t = player.play(ch, PayoffWeights::uniform(4, 1.0, 0.0), 10);
  for (std::size_t k = 1; k < t.size(); ++k)
    for (double p : t[k].powers_w) EXPECT_EQ(p, s.network.phy.p_max_w);
  const auto levels = make_power_levels(s.network.phy.p_max_w, s.learning.power_levels);
  for (double p : t[0].powers_w)
    EXPECT_NE(std::find(levels.levels.begin(), levels.levels.end(), p), levels.levels.end());
}

TEST(GtBlock, PowersStayInRange) {
  std::mt19937_64 rng(61);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (int k = 0; k < 300; ++k) {
    NetworkConfig c;
    c.phy = random_config(rng).phy;
    const auto sched = random_schedule(c.phy.geometry, rng);
    const auto ch = redraw_channel(c.phy, 0, static_cast<std::uint64_t>(k));
    const auto w = PayoffWeights::uniform(c.num_bs(), unit(rng), unit(rng) * 1e9);
    GtState state;
    Rng r = make_rng(static_cast<std::uint64_t>(k), Stream::kBaseline);
    for (const auto& slot : run_block_gt(c, state, sched, 20, ch, w, make_power_levels(c.phy.p_max_w, 5), r))
      for (double p : slot.powers_w) ASSERT_TRUE(p >= 0.0 && p <= c.phy.p_max_w);
  }
}
