#pragma once

// Scenario files: JSON documents describing geometry, antennas, radio
// constants, fading, frame structure and learner defaults.
//
// {
//   "geometry": {
//     "bs_height_m": 20,
//     "base_stations": [ {"x": 25, "y": 25, "ues": [0, 1, 2]}, ... ],
//     "ues": [ {"x": 40.1, "y": 38.0}, ... ]
//   },
//   "bs_antenna": {"beamwidth_deg": 30, "msr_db": 20, "total_gain": 360},
//   "ue_antenna": {"omnidirectional": true},
//   "radio": {"bandwidth_hz": 4e8, "center_freq_hz": 37e9, "noise_figure_db": 1.5,
//             "temperature_k": 290, "pathloss_exp": 4, "p_max_w": 7.94},
//   "fading": {"mu": 1e4, "omega": 100},
//   "frame": {"blocks_per_frame": 1, "slots_per_block": 100, "slot_s": 1e-3},
//   "learning": {"epsilon": 0.05, "discount": 0.9, "learning_rate": 0.1,
//                "power_levels": 10, "interference_states": 10, "training_frames": 100}
// }
//
// Everything but "geometry" is optional and falls back to the defaults above.
// The "ues" lists of the base stations must partition the UE set.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "json.hpp"
#include "mmwsched/channel.hpp"
#include "mmwsched/error.hpp"
#include "mmwsched/network_env.hpp"
#include "mmwsched/ql_agent.hpp"
#include "mmwsched/rng.hpp"

namespace mmw {

using json = nlohmann::json;

struct Scenario {
  NetworkConfig network;
  LearningParams learning;
};

struct ConfigResult {
  std::optional<Scenario> scenario;
  std::vector<std::string> errors;

  bool ok() const { return errors.empty(); }
};

class ConfigError : public RuntimeError {
 public:
  explicit ConfigError(std::vector<std::string> errors)
      : RuntimeError(join(errors)), errors_(std::move(errors)) {}
  const std::vector<std::string>& errors() const { return errors_; }

 private:
  static std::string join(const std::vector<std::string>& errs) {
    std::string out = "invalid configuration:";
    for (const auto& e : errs) out += "\n  " + e;
    return out;
  }
  std::vector<std::string> errors_;
};

namespace detail {

class Reader {
 public:
  explicit Reader(std::vector<std::string>& errors) : errors_(errors) {}

  void number(const json& obj, const std::string& path, const char* key, double& out) {
    if (!obj.contains(key)) return;
    const json& v = obj[key];
    if (!v.is_number()) {
      errors_.push_back(path + "." + key + ": expected a number");
      return;
    }
    out = v.get<double>();
  }

  void count(const json& obj, const std::string& path, const char* key, std::size_t& out) {
    if (!obj.contains(key)) return;
    const json& v = obj[key];
    if (!v.is_number_integer() || v.get<std::int64_t>() < 0) {
      errors_.push_back(path + "." + key + ": expected a non-negative integer");
      return;
    }
    out = v.get<std::size_t>();
  }

  void flag(const json& obj, const std::string& path, const char* key, bool& out) {
    if (!obj.contains(key)) return;
    const json& v = obj[key];
    if (!v.is_boolean()) {
      errors_.push_back(path + "." + key + ": expected true or false");
      return;
    }
    out = v.get<bool>();
  }

  const json* section(const json& root, const char* key, bool required) {
    if (!root.contains(key)) {
      if (required) errors_.push_back(std::string(key) + ": missing section");
      return nullptr;
    }
    if (!root[key].is_object()) {
      errors_.push_back(std::string(key) + ": expected an object");
      return nullptr;
    }
    return &root[key];
  }

  void error(std::string e) { errors_.push_back(std::move(e)); }

 private:
  std::vector<std::string>& errors_;
};

inline void read_point(Reader& r, const json& obj, const std::string& path, Point& p) {
  if (!obj.is_object()) {
    r.error(path + ": expected an object with x and y");
    return;
  }
  if (!obj.contains("x") || !obj.contains("y")) r.error(path + ": x and y are required");
  r.number(obj, path, "x", p.x);
  r.number(obj, path, "y", p.y);
}

inline void read_antenna(Reader& r, const json* obj, const std::string& path, AntennaConfig& a,
                         std::vector<std::string>& errors) {
  if (obj) {
    if (obj->contains("beamwidth_deg") || obj->contains("msr_db")) a.omnidirectional = false;
    r.flag(*obj, path, "omnidirectional", a.omnidirectional);
    r.number(*obj, path, "beamwidth_deg", a.beamwidth_deg);
    r.number(*obj, path, "msr_db", a.msr_db);
    r.number(*obj, path, "total_gain", a.total_gain);
  }
  if (!(a.total_gain > 0.0)) errors.push_back(path + ".total_gain: must be > 0");
  if (!a.omnidirectional) {
    if (!(a.beamwidth_deg > 0.0 && a.beamwidth_deg < 360.0))
      errors.push_back(path + ".beamwidth_deg: must lie in (0, 360)");
    if (!(a.msr_db >= 0.0)) errors.push_back(path + ".msr_db: must be >= 0");
  }
}

}  // namespace detail

/// Parses and checks a scenario document. Every violation is reported.
inline ConfigResult validate_config(const std::string& text) {
  ConfigResult result;
  auto& errors = result.errors;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    errors.push_back(std::string("parse error: ") + e.what());
    return result;
  }
  if (!root.is_object()) {
    errors.emplace_back("scenario: expected a JSON object");
    return result;
  }

  detail::Reader r(errors);
  Scenario s;
  s.network.phy.bs_antenna = AntennaConfig::directional(30.0, 20.0);
  s.network.phy.ue_antenna = AntennaConfig::omni();
  auto& g = s.network.phy.geometry;

  if (const json* geo = r.section(root, "geometry", true)) {
    r.number(*geo, "geometry", "bs_height_m", g.bs_height_m);
    const json* ues = geo->contains("ues") ? &(*geo)["ues"] : nullptr;
    if (!ues || !ues->is_array()) {
      errors.emplace_back("geometry.ues: expected an array of UE positions");
    } else {
      g.ue_positions.resize(ues->size());
      for (std::size_t j = 0; j < ues->size(); ++j)
        detail::read_point(r, (*ues)[j], "geometry.ues[" + std::to_string(j) + "]",
                           g.ue_positions[j]);
    }
    const json* bss = geo->contains("base_stations") ? &(*geo)["base_stations"] : nullptr;
    if (!bss || !bss->is_array() || bss->empty()) {
      errors.emplace_back("geometry.base_stations: expected a non-empty array");
    } else {
      const std::size_t k = g.ue_positions.size();
      std::vector<std::vector<std::size_t>> owners(k);
      g.bs_positions.resize(bss->size());
      for (std::size_t i = 0; i < bss->size(); ++i) {
        const std::string path = "geometry.base_stations[" + std::to_string(i) + "]";
        const json& b = (*bss)[i];
        detail::read_point(r, b, path, g.bs_positions[i]);
        if (!b.is_object()) continue;
        if (!b.contains("ues") || !b["ues"].is_array() || b["ues"].empty()) {
          errors.push_back(path + ".ues: every BS must serve at least one UE");
          continue;
        }
        for (const json& u : b["ues"]) {
          if (!u.is_number_integer() || u.get<std::int64_t>() < 0 ||
              u.get<std::size_t>() >= k) {
            errors.push_back(path + ".ues: " + u.dump() + " is not a valid UE index");
            continue;
          }
          owners[u.get<std::size_t>()].push_back(i);
        }
      }
      g.serving_bs.assign(k, 0);
      for (std::size_t j = 0; j < k; ++j) {
        if (owners[j].empty()) {
          errors.push_back("geometry.associations: UE " + std::to_string(j) +
                           " is not associated with any BS");
        } else if (owners[j].size() > 1) {
          std::string list;
          for (std::size_t b : owners[j]) list += (list.empty() ? "" : ", ") + std::to_string(b);
          errors.push_back("geometry.associations: UE " + std::to_string(j) +
                           " is associated with several BSs (" + list + ")");
        } else {
          g.serving_bs[j] = owners[j].front();
        }
      }
    }
    if (!(g.bs_height_m > 0.0)) errors.emplace_back("geometry.bs_height_m: must be > 0");
  }

  detail::read_antenna(r, r.section(root, "bs_antenna", false), "bs_antenna",
                       s.network.phy.bs_antenna, errors);
  detail::read_antenna(r, r.section(root, "ue_antenna", false), "ue_antenna",
                       s.network.phy.ue_antenna, errors);

  auto& radio = s.network.phy.radio;
  if (const json* o = r.section(root, "radio", false)) {
    r.number(*o, "radio", "bandwidth_hz", radio.bandwidth_hz);
    r.number(*o, "radio", "center_freq_hz", radio.center_freq_hz);
    r.number(*o, "radio", "noise_figure_db", radio.noise_figure_db);
    r.number(*o, "radio", "temperature_k", radio.temperature_k);
    r.number(*o, "radio", "pathloss_exp", radio.pathloss_exp);
    r.number(*o, "radio", "p_max_w", s.network.phy.p_max_w);
  }
  for (auto& e : radio.violations()) errors.push_back(std::move(e));
  if (!(s.network.phy.p_max_w > 0.0)) errors.emplace_back("radio.p_max_w: must be > 0");

  if (const json* o = r.section(root, "fading", false)) {
    r.number(*o, "fading", "mu", s.network.phy.fading.mu);
    r.number(*o, "fading", "omega", s.network.phy.fading.omega);
  }
  for (auto& e : s.network.phy.fading.violations()) errors.push_back(std::move(e));

  auto& fr = s.network.frame;
  if (const json* o = r.section(root, "frame", false)) {
    r.count(*o, "frame", "blocks_per_frame", fr.blocks_per_frame);
    r.count(*o, "frame", "slots_per_block", fr.slots_per_block);
    r.number(*o, "frame", "slot_s", fr.slot_s);
  }
  for (auto& e : fr.violations()) errors.push_back(std::move(e));

  auto& lp = s.learning;
  if (const json* o = r.section(root, "learning", false)) {
    r.number(*o, "learning", "epsilon", lp.epsilon);
    r.number(*o, "learning", "discount", lp.discount);
    r.number(*o, "learning", "learning_rate", lp.learning_rate);
    r.count(*o, "learning", "power_levels", lp.power_levels);
    r.count(*o, "learning", "interference_states", lp.interference_states);
    r.count(*o, "learning", "training_frames", lp.training_frames);
  }
  for (auto& e : lp.violations()) errors.push_back(std::move(e));

  if (errors.empty()) result.scenario = std::move(s);
  return result;
}

inline std::string read_text_file(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw RuntimeError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline Scenario load_scenario(const std::filesystem::path& path) {
  ConfigResult r = validate_config(read_text_file(path));
  if (!r.ok()) {
    for (auto& e : r.errors) e = path.string() + ": " + e;
    throw ConfigError(std::move(r.errors));
  }
  return std::move(*r.scenario);
}

inline json antenna_to_json(const AntennaConfig& a) {
  if (a.omnidirectional) return {{"omnidirectional", true}, {"total_gain", a.total_gain}};
  return {{"beamwidth_deg", a.beamwidth_deg}, {"msr_db", a.msr_db}, {"total_gain", a.total_gain}};
}

inline json scenario_to_json(const Scenario& s) {
  const auto& g = s.network.phy.geometry;
  json bss = json::array();
  for (std::size_t i = 0; i < g.num_bs(); ++i)
    bss.push_back({{"x", g.bs_positions[i].x}, {"y", g.bs_positions[i].y}, {"ues", g.ues_of(i)}});
  json ues = json::array();
  for (const Point& p : g.ue_positions) ues.push_back({{"x", p.x}, {"y", p.y}});
  const auto& radio = s.network.phy.radio;
  const auto& fr = s.network.frame;
  const auto& lp = s.learning;
  return {
      {"geometry", {{"bs_height_m", g.bs_height_m}, {"base_stations", bss}, {"ues", ues}}},
      {"bs_antenna", antenna_to_json(s.network.phy.bs_antenna)},
      {"ue_antenna", antenna_to_json(s.network.phy.ue_antenna)},
      {"radio",
       {{"bandwidth_hz", radio.bandwidth_hz},
        {"center_freq_hz", radio.center_freq_hz},
        {"noise_figure_db", radio.noise_figure_db},
        {"temperature_k", radio.temperature_k},
        {"pathloss_exp", radio.pathloss_exp},
        {"p_max_w", s.network.phy.p_max_w}}},
      {"fading", {{"mu", s.network.phy.fading.mu}, {"omega", s.network.phy.fading.omega}}},
      {"frame",
       {{"blocks_per_frame", fr.blocks_per_frame},
        {"slots_per_block", fr.slots_per_block},
        {"slot_s", fr.slot_s}}},
      {"learning",
       {{"epsilon", lp.epsilon},
        {"discount", lp.discount},
        {"learning_rate", lp.learning_rate},
        {"power_levels", lp.power_levels},
        {"interference_states", lp.interference_states},
        {"training_frames", lp.training_frames}}},
  };
}

/// Four BSs at the quadrant centres of a 100 m x 100 m grid with three UEs
/// dropped uniformly in each quadrant. Per BS the UE nearest the grid centre
/// comes first (cell edge) and the one nearest its own BS last (cell centre).
inline Scenario make_default_scenario(std::uint64_t seed) {
  Scenario s;
  auto& g = s.network.phy.geometry;
  g.bs_height_m = 20.0;
  g.bs_positions = {{25.0, 25.0}, {25.0, 75.0}, {75.0, 25.0}, {75.0, 75.0}};
  Rng rng = make_rng(seed, Stream::kPlacement);
  const Point centre{50.0, 50.0};
  for (std::size_t i = 0; i < g.bs_positions.size(); ++i) {
    const Point bs = g.bs_positions[i];
    std::uniform_real_distribution<double> ux(bs.x - 25.0, bs.x + 25.0);
    std::uniform_real_distribution<double> uy(bs.y - 25.0, bs.y + 25.0);
    std::vector<Point> drop;
    for (int k = 0; k < 3; ++k) drop.push_back({ux(rng), uy(rng)});
    auto nearest = [&](Point ref) {
      return std::min_element(drop.begin(), drop.end(), [&](Point a, Point b) {
        return planar_distance(a, ref) < planar_distance(b, ref);
      });
    };
    std::vector<Point> ordered;
    auto edge = nearest(centre);
    ordered.push_back(*edge);
    drop.erase(edge);
    auto inner = nearest(bs);
    const Point cell_centre = *inner;
    drop.erase(inner);
    ordered.push_back(drop.front());
    ordered.push_back(cell_centre);
    for (Point p : ordered) {
      // Round to centimetres so the scenario file reproduces exactly.
      g.ue_positions.push_back({std::round(p.x * 100.0) / 100.0, std::round(p.y * 100.0) / 100.0});
      g.serving_bs.push_back(i);
    }
  }
  s.network.phy.bs_antenna = AntennaConfig::directional(30.0, 20.0);
  s.network.phy.ue_antenna = AntennaConfig::omni();
  return s;
}

}  // namespace mmw
