#pragma once

// Fixtures, independent oracles and randomized property checks shared by the
// unit tests and the acceptance binary. Oracles here recompute quantities
// from first principles and never call the library routine they check.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <iomanip>
#include <limits>
#include <numbers>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "mmwsched/channel.hpp"
#include "mmwsched/gt_baseline.hpp"
#include "mmwsched/lyapunov.hpp"
#include "mmwsched/network_env.hpp"
#include "mmwsched/ql_agent.hpp"

namespace mmwtest {

using namespace mmw;

struct CheckResult {
  bool ok = true;
  std::size_t cases = 0;
  std::string detail;

  void fail(const std::string& why) {
    if (ok) detail = why;
    ok = false;
  }
};

// ---------------------------------------------------------------------------
// Fixtures

// Two BSs 100 m apart on the x axis, each serving one UE 10 m in front of it.
inline NetworkConfig two_cell_config() {
  NetworkConfig c;
  auto& g = c.phy.geometry;
  g.bs_positions = {{0.0, 0.0}, {100.0, 0.0}};
  g.ue_positions = {{10.0, 0.0}, {90.0, 0.0}};
  g.serving_bs = {0, 1};
  g.bs_height_m = 10.0;
  c.phy.bs_antenna = AntennaConfig::directional(30.0, 20.0);
  c.phy.ue_antenna = AntennaConfig::omni();
  return c;
}

inline ChannelRealization unit_channel(const PhysicalLayer& phy) {
  return {Matrix<double>(phy.geometry.num_ue(), phy.num_bs(), 1.0), 0};
}

// Random topology with 2..5 BSs, 1..3 UEs each, random antennas and fading.
template <typename Gen>
NetworkConfig random_config(Gen& rng) {
  std::uniform_real_distribution<double> pos(0.0, 200.0);
  std::uniform_int_distribution<int> nbs(2, 5), nue(1, 3), coin(0, 1);
  std::uniform_real_distribution<double> bw(5.0, 120.0), msr(0.0, 40.0), h(1.0, 30.0);
  NetworkConfig c;
  auto& g = c.phy.geometry;
  const int m = nbs(rng);
  for (int i = 0; i < m; ++i) {
    g.bs_positions.push_back({pos(rng), pos(rng)});
    const int k = nue(rng);
    for (int j = 0; j < k; ++j) {
      g.ue_positions.push_back({pos(rng), pos(rng)});
      g.serving_bs.push_back(static_cast<std::size_t>(i));
    }
  }
  g.bs_height_m = h(rng);
  c.phy.bs_antenna = AntennaConfig::directional(bw(rng), msr(rng));
  c.phy.ue_antenna = coin(rng) ? AntennaConfig::omni() : AntennaConfig::directional(bw(rng), msr(rng));
  c.phy.fading.mu = 2.0;
  c.phy.fading.omega = 1.0;
  return c;
}

template <typename Gen>
std::vector<std::size_t> random_schedule(const Geometry& g, Gen& rng) {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < g.num_bs(); ++i) {
    std::vector<std::size_t> mine;
    for (std::size_t j = 0; j < g.num_ue(); ++j)
      if (g.serving_bs[j] == i) mine.push_back(j);
    std::uniform_int_distribution<std::size_t> pick(0, mine.size() - 1);
    out.push_back(mine[pick(rng)]);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Oracles

inline double oracle_noise_w(double nf_db, double t0, double w) {
  return 1.38e-23 * t0 * w * std::pow(10.0, nf_db / 10.0);
}

// Keyhole gain recomputed from the conservation law for an angle offset.
inline double oracle_gain(double bw, double msr_db, double offset_deg, bool omni) {
  if (omni) return 1.0;
  const double ratio = std::pow(10.0, msr_db / 10.0);
  const double gmin = 360.0 / (bw * ratio + 360.0 - bw);
  double a = std::fmod(std::fabs(offset_deg), 360.0);
  if (a > 180.0) a = 360.0 - a;
  return a <= bw / 2.0 + 1e-12 ? ratio * gmin : gmin;
}

inline double angle_of(Point from, Point to) {
  return std::atan2(to.y - from.y, to.x - from.x) * 180.0 / std::numbers::pi;
}

// SINR at the UE of BS i straight from the link-budget definition.
inline std::vector<double> oracle_sinr(const PhysicalLayer& phy, const ChannelRealization& ch,
                                       const std::vector<std::size_t>& sched,
                                       const std::vector<double>& p) {
  const auto& g = phy.geometry;
  const auto& ba = phy.bs_antenna;
  const auto& ua = phy.ue_antenna;
  const double noise =
      oracle_noise_w(phy.radio.noise_figure_db, phy.radio.temperature_k, phy.radio.bandwidth_hz);
  auto link = [&](std::size_t l, std::size_t ue) {
    const Point b = g.bs_positions[l], u = g.ue_positions[ue];
    const double d2 = (b.x - u.x) * (b.x - u.x) + (b.y - u.y) * (b.y - u.y) +
                      g.bs_height_m * g.bs_height_m;
    const double bs_off = angle_of(b, u) - angle_of(b, g.ue_positions[sched[l]]);
    const Point serving = g.bs_positions[g.serving_bs[ue]];
    const double ue_off = angle_of(u, b) - angle_of(u, serving);
    const double h = ch.h(ue, l);
    return oracle_gain(ba.beamwidth_deg, ba.msr_db, bs_off, ba.omnidirectional) *
           oracle_gain(ua.beamwidth_deg, ua.msr_db, ue_off, ua.omnidirectional) * h * h *
           std::pow(d2, -phy.radio.pathloss_exp / 2.0);
  };
  std::vector<double> out;
  for (std::size_t i = 0; i < sched.size(); ++i) {
    double interference = 0.0;
    for (std::size_t l = 0; l < sched.size(); ++l)
      if (l != i && p[l] > 0.0) interference += p[l] * link(l, sched[i]);
    out.push_back(p[i] * link(i, sched[i]) / (interference + noise));
  }
  return out;
}

// Stationary 2-state / 2-action MDP with a known model.
struct ToyMdp {
  // p_next1[s][a]: probability that the next state is 1.
  std::array<std::array<double, 2>, 2> p_next1{{{0.2, 0.8}, {0.3, 0.9}}};
  std::array<std::array<double, 2>, 2> reward{{{1.0, 0.0}, {0.0, 2.0}}};
  double discount = 0.5;
};

inline std::array<std::array<double, 2>, 2> value_iteration(const ToyMdp& mdp) {
  std::array<std::array<double, 2>, 2> q{};
  for (int it = 0; it < 10000; ++it) {
    const double v0 = std::max(q[0][0], q[0][1]);
    const double v1 = std::max(q[1][0], q[1][1]);
    std::array<std::array<double, 2>, 2> next{};
    for (int s = 0; s < 2; ++s)
      for (int a = 0; a < 2; ++a)
        next[s][a] = mdp.reward[s][a] +
                     mdp.discount * ((1.0 - mdp.p_next1[s][a]) * v0 + mdp.p_next1[s][a] * v1);
    q = next;
  }
  return q;
}

// Tabular Q-learning with the library's selection and update rules, a
// per-cell 1/n learning rate and epsilon = 0.1. Returns max-norm error.
inline double toy_mdp_error(const ToyMdp& mdp, std::uint64_t seed, std::size_t steps) {
  LearningParams lp;
  lp.epsilon = 0.1;
  lp.discount = mdp.discount;
  QTable table = make_q_table(2, 2, lp);
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  Matrix<double> visits(2, 2, 0.0);
  std::size_t s = 0;
  for (std::size_t t = 0; t < steps; ++t) {
    const std::size_t a = select_action(table, s, rng);
    const std::size_t next = u(rng) < mdp.p_next1[s][a] ? 1 : 0;
    visits(a, s) += 1.0;
    update_q(table, {s, a, mdp.reward[s][a], next}, 1.0 / visits(a, s));
    s = next;
  }
  const auto qstar = value_iteration(mdp);
  double err = 0.0;
  for (std::size_t st = 0; st < 2; ++st)
    for (std::size_t a = 0; a < 2; ++a) err = std::max(err, std::fabs(table.q(a, st) - qstar[st][a]));
  return err;
}

inline double aux_objective(double v, double h, double g, double c) {
  return v * std::pow(g, c) - h * g;
}

// Best objective on a uniform 1000-point grid over [0, upper].
inline double grid_best(double v, double h, double upper, double c) {
  double best = -std::numeric_limits<double>::infinity();
  for (int k = 0; k < 1000; ++k) {
    const double g = upper * static_cast<double>(k) / 999.0;
    best = std::max(best, aux_objective(v, h, g, c));
  }
  return best;
}

// ---------------------------------------------------------------------------
// Property checks

inline CheckResult check_lobe_conservation(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> bw(1e-3, 360.0), msr(0.0, 60.0), e(1e-3, 1e4);
  for (std::size_t k = 0; k < cases; ++k, ++r.cases) {
    const double t = bw(rng), m = msr(rng), total = e(rng);
    const LobeGains lg = solve_lobe_gains(t, m, total);
    const double lhs = t * lg.g_max + (360.0 - t) * lg.g_min;
    const double ratio_db = 10.0 * std::log10(lg.g_max / lg.g_min);
    if (std::fabs(lhs - total) > 1e-9 * total || std::fabs(ratio_db - m) > 1e-9 * std::max(1.0, m)) {
      std::ostringstream os;
      os << "theta=" << t << " msr=" << m << " E=" << total << " sum=" << lhs;
      r.fail(os.str());
    }
  }
  return r;
}

// x <= y implies state(x) <= state(y); on its own sample each state holds
// between floor(n/I_q)-1 and ceil(n/I_q)+1 samples.
inline CheckResult check_quantizer(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> iq(1, 20), extra(0, 400);
  std::lognormal_distribution<double> sample(-20.0, 3.0);
  for (std::size_t k = 0; k < cases; ++k, ++r.cases) {
    const std::size_t states = iq(rng);
    std::vector<double> xs(states + extra(rng));
    for (double& x : xs) x = sample(rng);
    const InterferenceQuantizer q = build_quantizer(xs, states);
    if (q.num_states() != states) r.fail("wrong number of states");
    if (!std::is_sorted(q.boundaries.begin(), q.boundaries.end())) r.fail("boundaries not sorted");
    std::vector<double> probe = xs;
    for (int j = 0; j < 20; ++j) probe.push_back(sample(rng));
    probe.push_back(0.0);
    probe.push_back(1e9);
    std::sort(probe.begin(), probe.end());
    for (std::size_t j = 1; j < probe.size(); ++j)
      if (q.quantize(probe[j - 1]) > q.quantize(probe[j])) r.fail("quantizer not monotone");
    if (q.quantize(probe.back()) >= states) r.fail("state out of range");
    std::vector<std::size_t> occ(states, 0);
    for (double x : xs) ++occ[q.quantize(x)];
    const std::size_t n = xs.size();
    const std::size_t lo = n / states, hi = (n + states - 1) / states;
    for (std::size_t s = 0; s < states; ++s)
      if (occ[s] + 1 < lo || occ[s] > hi + 1) {
        std::ostringstream os;
        os << "state " << s << " holds " << occ[s] << " of " << n << " samples, I_q=" << states;
        r.fail(os.str());
      }
  }
  return r;
}

// Exactly one cell changes and it lands between old value and target.
inline CheckResult check_q_update(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<std::size_t> dim(1, 12);
  std::uniform_real_distribution<double> val(-1e6, 1e6), unit(0.0, 1.0);
  for (std::size_t k = 0; k < cases; ++k, ++r.cases) {
    LearningParams lp;
    lp.discount = unit(rng) * 0.99;
    QTable t = make_q_table(dim(rng), dim(rng), lp);
    for (std::size_t i = 0; i < t.q.size(); ++i) t.q.data()[i] = val(rng);
    std::uniform_int_distribution<std::size_t> pa(0, t.num_actions() - 1), ps(0, t.num_states() - 1);
    const Experience e{ps(rng), pa(rng), val(rng), ps(rng)};
    const double lr = std::max(1e-6, unit(rng));
    const Matrix<double> before = t.q;
    const double old = before(e.action, e.state);
    double next_best = before(0, e.next_state);
    for (std::size_t a = 1; a < t.num_actions(); ++a) next_best = std::max(next_best, before(a, e.next_state));
    const double target = e.reward + lp.discount * next_best;
    update_q(t, e, lr);
    std::size_t changed = 0;
    for (std::size_t a = 0; a < t.num_actions(); ++a)
      for (std::size_t s = 0; s < t.num_states(); ++s)
        if (t.q(a, s) != before(a, s)) {
          ++changed;
          if (a != e.action || s != e.state) r.fail("update touched a foreign cell");
        }
    if (changed > 1) r.fail("more than one cell changed");
    const double now = t.q(e.action, e.state);
    const double slack = 1e-9 * std::max({1.0, std::fabs(old), std::fabs(target)});
    if (now < std::min(old, target) - slack || now > std::max(old, target) + slack)
      r.fail("updated value outside [min(old, target), max(old, target)]");
  }
  return r;
}

inline CheckResult check_queue_nonnegativity(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> val(0.0, 1e9);
  for (std::size_t k = 0; k < cases; ++k, ++r.cases) {
    double h = 0.0, z = 0.0;
    for (int t = 0; t < 50; ++t) {
      h = update_queue_h(h, val(rng), val(rng));
      z = update_queue_z(z, val(rng) * 1e-9, val(rng) * 1e-9);
      if (h < 0.0 || z < 0.0) r.fail("negative queue");
    }
  }
  return r;
}

// Output in [0, p_max] and non-decreasing in g.
inline CheckResult check_gt_projection(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> lg(-15.0, 15.0), unit(0.0, 1.0);
  for (std::size_t k = 0; k < cases; ++k, ++r.cases) {
    const double pmax = 0.1 + 10.0 * unit(rng);
    const double alpha = unit(rng) * 2.0;
    const double beta = unit(rng) < 0.1 ? 0.0 : std::pow(10.0, lg(rng) / 2.0);
    const double w = std::pow(10.0, 3.0 + 6.0 * unit(rng));
    const double g1 = std::pow(10.0, lg(rng)), g2 = std::pow(10.0, lg(rng));
    const double p1 = gt_power_update(alpha, beta, w, std::min(g1, g2), pmax);
    const double p2 = gt_power_update(alpha, beta, w, std::max(g1, g2), pmax);
    if (p1 < 0.0 || p1 > pmax || p2 < 0.0 || p2 > pmax) r.fail("power outside [0, p_max]");
    if (p2 < p1) r.fail("response decreasing in g");
  }
  return r;
}

// Own-power increase strictly raises SINR; interferer increase never does.
inline CheckResult check_sinr_monotonicity(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < cases; ++k, ++r.cases) {
    const NetworkConfig c = random_config(rng);
    const auto sched = random_schedule(c.phy.geometry, rng);
    const ChannelRealization ch = redraw_channel(c.phy, k, seed);
    const std::size_t m = c.num_bs();
    std::vector<double> p(m);
    for (double& x : p) x = unit(rng) < 0.2 ? 0.0 : unit(rng) * c.phy.p_max_w;
    std::uniform_int_distribution<std::size_t> pick(0, m - 1);
    const std::size_t i = pick(rng);
    const auto base = compute_sinrs(c.phy, ch, sched, p);
    auto up = p;
    up[i] = p[i] + (c.phy.p_max_w - p[i]) * (0.01 + 0.99 * unit(rng));
    const auto raised = compute_sinrs(c.phy, ch, sched, up);
    if (!(raised.sinr[i] > base.sinr[i])) r.fail("SINR not strictly increasing in own power");
    for (std::size_t l = 0; l < m; ++l)
      if (l != i && raised.sinr[l] > base.sinr[l]) r.fail("SINR increased with interferer power");
  }
  return r;
}

inline CheckResult check_aux_optimality(std::size_t cases, std::uint64_t seed) {
  CheckResult r;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  for (std::size_t k = 0; k < cases; ++k, ++r.cases) {
    const double v = std::pow(10.0, -2.0 + 12.0 * unit(rng));
    const double h = unit(rng) < 0.05 ? 0.0 : std::pow(10.0, -2.0 + 12.0 * unit(rng));
    const double upper = std::pow(10.0, -3.0 + 13.0 * unit(rng));
    const double c = 0.1 + 0.8 * unit(rng);
    const UtilityFunction u{c};
    const double g = solve_auxiliary(v, h, upper, u);
    if (g < 0.0 || g > upper) r.fail("auxiliary outside its box");
    const double f = aux_objective(v, h, g, c);
    const double best = std::max({grid_best(v, h, upper, c), aux_objective(v, h, 0.0, c),
                                  aux_objective(v, h, upper, c)});
    if (f < best - 1e-6 * std::max(1.0, std::fabs(best))) {
      std::ostringstream os;
      os << std::setprecision(17) << "V=" << v << " H=" << h << " upper=" << upper << " c=" << c
         << ": f=" << f << " grid=" << best;
      r.fail(os.str());
    }
  }
  return r;
}

}  // namespace mmwtest
