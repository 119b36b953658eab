#pragma once

// Link-level physics: keyhole antennas, path loss, Nakagami-m block fading,
// thermal noise and the downlink SINR of a joint power profile.
//
// Everything here works in linear units (watts, linear gain). dB appears
// only in the antenna MSR and the noise helper.

#include <cmath>
#include <cstddef>
#include <numbers>
#include <random>
#include <span>
#include <string>
#include <vector>

#include "mmwsched/error.hpp"
#include "mmwsched/matrix.hpp"
#include "mmwsched/rng.hpp"

namespace mmw {

inline constexpr double kBoltzmann = 1.38e-23;  // J/K, value used for the reference noise floor
inline constexpr double kDefaultTotalGain = 360.0;

inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }
inline double linear_to_db(double x) { return 10.0 * std::log10(x); }
inline double watts_to_dbm(double w) { return linear_to_db(w) + 30.0; }
inline double dbm_to_watts(double dbm) { return db_to_linear(dbm - 30.0); }

// ---------------------------------------------------------------------------
// Antenna

struct LobeGains {
  double g_max = 1.0;
  double g_min = 1.0;
};

/// Main/side-lobe gains of a keyhole pattern with beamwidth `beamwidth_deg`,
/// main-to-side-lobe ratio `msr_db` and total radiated gain `total_gain`
/// (gain integrated over 360 degrees). A 360 degree beam is omnidirectional.
inline LobeGains solve_lobe_gains(double beamwidth_deg, double msr_db, double total_gain) {
  require(beamwidth_deg > 0.0 && beamwidth_deg <= 360.0, "beamwidth must lie in (0, 360] degrees");
  require(total_gain > 0.0, "total antenna gain must be positive");
  require(msr_db >= 0.0, "main-to-side-lobe ratio must be >= 0 dB");
  if (beamwidth_deg == 360.0) {
    const double g = total_gain / 360.0;
    return {g, g};
  }
  // Theta*gmax + (360 - Theta)*gmin = E with gmax = ratio*gmin.
  const double ratio = db_to_linear(msr_db);
  const double g_min = total_gain / (beamwidth_deg * ratio + (360.0 - beamwidth_deg));
  return {ratio * g_min, g_min};
}

struct AntennaConfig {
  double beamwidth_deg = 360.0;
  double msr_db = 0.0;
  double total_gain = kDefaultTotalGain;
  bool omnidirectional = true;

  static AntennaConfig omni(double total_gain = kDefaultTotalGain) {
    return {360.0, 0.0, total_gain, true};
  }
  static AntennaConfig directional(double beamwidth_deg, double msr_db,
                                   double total_gain = kDefaultTotalGain) {
    return {beamwidth_deg, msr_db, total_gain, false};
  }

  LobeGains lobes() const {
    if (omnidirectional) return solve_lobe_gains(360.0, 0.0, total_gain);
    return solve_lobe_gains(beamwidth_deg, msr_db, total_gain);
  }
};

// Maps any angle in degrees onto (-180, 180].
inline double normalize_angle_deg(double theta) {
  double t = std::fmod(theta, 360.0);
  if (t > 180.0) t -= 360.0;
  if (t <= -180.0) t += 360.0;
  return t;
}

inline double gain_at(const LobeGains& lobes, double beamwidth_deg, double theta_deg) {
  return std::abs(normalize_angle_deg(theta_deg)) <= beamwidth_deg / 2.0 ? lobes.g_max
                                                                          : lobes.g_min;
}

inline double antenna_gain(const AntennaConfig& config, double theta_deg) {
  if (config.omnidirectional) return config.total_gain / 360.0;
  return gain_at(config.lobes(), config.beamwidth_deg, theta_deg);
}

// ---------------------------------------------------------------------------
// Geometry

struct Point {
  double x = 0.0;
  double y = 0.0;
  bool operator==(const Point&) const = default;
};

inline double planar_distance(Point a, Point b) { return std::hypot(a.x - b.x, a.y - b.y); }

// Azimuth of `to` seen from `from`, degrees.
inline double azimuth_deg(Point from, Point to) {
  return std::atan2(to.y - from.y, to.x - from.x) * 180.0 / std::numbers::pi;
}

struct Geometry {
  std::vector<Point> bs_positions;
  std::vector<Point> ue_positions;
  double bs_height_m = 20.0;
  // serving_bs[j] is the BS that UE j is associated with.
  std::vector<std::size_t> serving_bs;

  std::size_t num_bs() const { return bs_positions.size(); }
  std::size_t num_ue() const { return ue_positions.size(); }

  double distance(std::size_t ue, std::size_t bs) const {
    const double d = planar_distance(ue_positions[ue], bs_positions[bs]);
    return std::sqrt(bs_height_m * bs_height_m + d * d);
  }

  // UEs of `bs` in association order; rank r of a BS is ues_of(bs)[r].
  std::vector<std::size_t> ues_of(std::size_t bs) const {
    std::vector<std::size_t> out;
    for (std::size_t j = 0; j < serving_bs.size(); ++j)
      if (serving_bs[j] == bs) out.push_back(j);
    return out;
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> errs;
    if (bs_positions.empty()) errs.emplace_back("geometry: at least one BS is required");
    if (!(bs_height_m > 0.0)) errs.emplace_back("geometry.bs_height_m: must be > 0");
    if (serving_bs.size() != ue_positions.size())
      errs.emplace_back("geometry.associations: one serving BS per UE is required");
    for (std::size_t j = 0; j < serving_bs.size(); ++j)
      if (serving_bs[j] >= bs_positions.size())
        errs.push_back("geometry.associations[" + std::to_string(j) + "]: unknown BS " +
                       std::to_string(serving_bs[j]));
    for (std::size_t i = 0; i < bs_positions.size(); ++i)
      if (ues_of(i).empty())
        errs.push_back("geometry.associations: BS " + std::to_string(i) + " serves no UE");
    return errs;
  }
};

// ---------------------------------------------------------------------------
// Fading

struct FadingParams {
  double mu = 1e4;
  double omega = 100.0;

  std::vector<std::string> violations() const {
    std::vector<std::string> errs;
    if (!(mu >= 0.5)) errs.emplace_back("fading.mu: Nakagami shape must be >= 0.5");
    if (!(omega > 0.0)) errs.emplace_back("fading.omega: spread must be > 0");
    return errs;
  }
};

/// Nakagami-m amplitude: h = sqrt(g), g ~ Gamma(shape = mu, scale = omega/mu).
template <typename Gen>
double sample_nakagami(const FadingParams& params, Gen& rng) {
  std::gamma_distribution<double> power(params.mu, params.omega / params.mu);
  return std::sqrt(power(rng));
}

// Small-scale amplitudes h(ue, bs), held constant for one frame.
struct ChannelRealization {
  Matrix<double> h;
  std::size_t frame_index = 0;

  double gain(std::size_t ue, std::size_t bs) const {
    const double a = h(ue, bs);
    return a * a;
  }
};

// ---------------------------------------------------------------------------
// Noise and radio constants

inline double noise_power_dbm(double noise_figure_db, double temperature_k, double bandwidth_hz) {
  require(bandwidth_hz > 0.0, "bandwidth must be positive");
  require(temperature_k > 0.0, "temperature must be positive");
  return 10.0 * std::log10(kBoltzmann * temperature_k * 1e3) + noise_figure_db +
         10.0 * std::log10(bandwidth_hz);
}

struct RadioConstants {
  double bandwidth_hz = 4e8;
  double center_freq_hz = 37e9;
  double noise_figure_db = 1.5;
  double temperature_k = 290.0;
  double pathloss_exp = 4.0;

  double noise_power_w() const {
    return dbm_to_watts(noise_power_dbm(noise_figure_db, temperature_k, bandwidth_hz));
  }

  std::vector<std::string> violations() const {
    std::vector<std::string> errs;
    if (!(bandwidth_hz > 0.0)) errs.emplace_back("radio.bandwidth_hz: must be > 0");
    if (!(temperature_k > 0.0)) errs.emplace_back("radio.temperature_k: must be > 0");
    if (!(pathloss_exp > 0.0)) errs.emplace_back("radio.pathloss_exp: must be > 0");
    if (!(center_freq_hz >= 0.0)) errs.emplace_back("radio.center_freq_hz: must be >= 0");
    return errs;
  }
};

// ---------------------------------------------------------------------------
// SINR

// Everything the SINR computation needs besides the per-frame fading and the
// per-slot decisions.
struct PhysicalLayer {
  Geometry geometry;
  AntennaConfig bs_antenna = AntennaConfig::directional(30.0, 20.0);
  AntennaConfig ue_antenna = AntennaConfig::omni();
  RadioConstants radio;
  FadingParams fading;
  double p_max_w = 7.94;

  std::size_t num_bs() const { return geometry.num_bs(); }
};

// Per-BS view of one slot: entry i belongs to the UE scheduled by BS i.
struct LinkState {
  std::vector<double> sinr;
  std::vector<double> interference_w;
};

namespace detail {

// Gain of BS `bs` toward UE `ue` when the BS aims at UE `target`.
inline double bs_gain_toward(const PhysicalLayer& phy, const LobeGains& lobes, std::size_t bs,
                             std::size_t target, std::size_t ue) {
  if (phy.bs_antenna.omnidirectional) return lobes.g_max;
  const auto& g = phy.geometry;
  if (ue == target) return lobes.g_max;
  const double boresight = azimuth_deg(g.bs_positions[bs], g.ue_positions[target]);
  const double toward = azimuth_deg(g.bs_positions[bs], g.ue_positions[ue]);
  return gain_at(lobes, phy.bs_antenna.beamwidth_deg, toward - boresight);
}

// Directional UEs keep their boresight on the serving BS.
inline double ue_gain_toward(const PhysicalLayer& phy, const LobeGains& lobes, std::size_t ue,
                             std::size_t bs) {
  if (phy.ue_antenna.omnidirectional) return lobes.g_max;
  const auto& g = phy.geometry;
  const std::size_t serving = g.serving_bs[ue];
  if (bs == serving) return lobes.g_max;
  const double boresight = azimuth_deg(g.ue_positions[ue], g.bs_positions[serving]);
  const double toward = azimuth_deg(g.ue_positions[ue], g.bs_positions[bs]);
  return gain_at(lobes, phy.ue_antenna.beamwidth_deg, toward - boresight);
}

}  // namespace detail

/// Serving-link numerator without power: G_ue * G_bs * |h|^2 * d^-eta.
inline double serving_link_gain(const PhysicalLayer& phy, const ChannelRealization& ch,
                                std::size_t bs, std::size_t ue) {
  const LobeGains bs_lobes = phy.bs_antenna.lobes();
  const LobeGains ue_lobes = phy.ue_antenna.lobes();
  return detail::ue_gain_toward(phy, ue_lobes, ue, bs) *
         detail::bs_gain_toward(phy, bs_lobes, bs, ue, ue) * ch.gain(ue, bs) *
         std::pow(phy.geometry.distance(ue, bs), -phy.radio.pathloss_exp);
}

inline void check_schedule(const PhysicalLayer& phy, std::span<const std::size_t> scheduled) {
  const auto& g = phy.geometry;
  require(scheduled.size() == g.num_bs(), "exactly one scheduled UE per BS is required");
  for (std::size_t i = 0; i < scheduled.size(); ++i) {
    require(scheduled[i] < g.num_ue(), "scheduled UE index out of range");
    require(g.serving_bs[scheduled[i]] == i, "scheduled UE is not associated with its BS");
  }
}

/// SINR and interference at every scheduled UE for the joint power profile.
/// A BS with zero power forms no beam and contributes no interference.
inline LinkState compute_sinrs(const PhysicalLayer& phy, const ChannelRealization& ch,
                               std::span<const std::size_t> scheduled,
                               std::span<const double> powers_w) {
  const std::size_t m = phy.num_bs();
  check_schedule(phy, scheduled);
  require(powers_w.size() == m, "exactly one power per BS is required");
  for (double p : powers_w)
    require(p >= 0.0 && p <= phy.p_max_w, "power outside [0, p_max]");

  const LobeGains bs_lobes = phy.bs_antenna.lobes();
  const LobeGains ue_lobes = phy.ue_antenna.lobes();
  const double sigma2 = phy.radio.noise_power_w();
  const double eta = phy.radio.pathloss_exp;

  LinkState out{std::vector<double>(m, 0.0), std::vector<double>(m, 0.0)};
  for (std::size_t i = 0; i < m; ++i) {
    const std::size_t ue = scheduled[i];
    double interference = 0.0;
    for (std::size_t l = 0; l < m; ++l) {
      if (l == i || powers_w[l] == 0.0) continue;
      interference += powers_w[l] * detail::ue_gain_toward(phy, ue_lobes, ue, l) *
                      detail::bs_gain_toward(phy, bs_lobes, l, scheduled[l], ue) *
                      ch.gain(ue, l) * std::pow(phy.geometry.distance(ue, l), -eta);
    }
    const double signal = powers_w[i] * detail::ue_gain_toward(phy, ue_lobes, ue, i) *
                          bs_lobes.g_max * ch.gain(ue, i) *
                          std::pow(phy.geometry.distance(ue, i), -eta);
    out.interference_w[i] = interference;
    out.sinr[i] = signal / (interference + sigma2);
  }
  return out;
}

}  // namespace mmw
