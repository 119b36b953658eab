#pragma once

// Multi-trial experiment runner: sweeps over quantization sizes, payoff
// weights, BS antennas and UE selection, plays every strategy on common
// random channels, and aggregates running-average rewards (or Lyapunov
// utilities) across trials.
//
// Experiment spec (JSON):
// {
//   "scenario": "default.json",            // relative to the spec file
//   "mode": "block",                       // block | lyapunov
//   "strategies": ["learner", "gt"],       // learner | gt | random
//   "trials": 50, "seed": 1, "threads": 0,
//   "sweep": {
//     "power_levels": [10], "interference_states": [10],
//     "alpha": 1, "beta": [0, "0.1W"],      // "xW" means x times the bandwidth
//     "antenna": [{"msr_db": 20, "beamwidth_deg": 30}],
//     "ue_rank": [1]                        // 1 = first UE of every BS
//   },
//   "lyapunov": {"v": 1e9, "p_avg_w": 3.97, "n_frames": 50, "utility_exponent": 0.6}
// }

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <limits>
#include <mutex>
#include <optional>
#include <ostream>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "json.hpp"
#include "mmwsched/config.hpp"
#include "mmwsched/lyapunov.hpp"
#include "mmwsched/network_env.hpp"
#include "mmwsched/strategy.hpp"

namespace mmw {

enum class Mode { kBlock, kLyapunov };

inline std::string_view to_string(Mode m) { return m == Mode::kBlock ? "block" : "lyapunov"; }

inline std::optional<Mode> parse_mode(std::string_view s) {
  if (s == "block" || s == "single-block") return Mode::kBlock;
  if (s == "lyapunov") return Mode::kLyapunov;
  return std::nullopt;
}

struct AntennaSetting {
  double msr_db = 20.0;
  double beamwidth_deg = 30.0;
  bool operator==(const AntennaSetting&) const = default;
};

// One coordinate of the sweep grid.
struct SweepPoint {
  std::size_t power_levels = 10;
  std::size_t interference_states = 10;
  double alpha = 1.0;
  double beta = 0.0;
  AntennaSetting antenna;
  std::size_t ue_rank = 1;  // 1-based
  bool operator==(const SweepPoint&) const = default;
};

struct ExperimentSpec {
  Scenario scenario;
  std::vector<Strategy> strategies{Strategy::kLearner, Strategy::kGt};
  Mode mode = Mode::kBlock;
  std::size_t trials = 50;
  std::uint64_t base_seed = 1;
  std::size_t threads = 0;  // 0 = hardware concurrency
  bool keep_traces = false;

  std::vector<std::size_t> power_levels{10};
  std::vector<std::size_t> interference_states{10};
  double alpha = 1.0;
  std::vector<double> betas{0.0};
  std::vector<AntennaSetting> antennas{{20.0, 30.0}};
  std::vector<std::size_t> ue_ranks{1};
  LyapunovConfig lyapunov;

  std::uint64_t trial_seed(std::size_t trial) const { return base_seed + trial; }

  std::vector<SweepPoint> sweep_points() const {
    std::vector<SweepPoint> out;
    for (std::size_t pq : power_levels)
      for (std::size_t iq : interference_states)
        for (double b : betas)
          for (const auto& a : antennas)
            for (std::size_t r : ue_ranks) out.push_back({pq, iq, alpha, b, a, r});
    return out;
  }
};

struct ResultRecord {
  SweepPoint point;
  Strategy strategy = Strategy::kLearner;
  Mode mode = Mode::kBlock;
  std::size_t trials = 0;
  // Per slot (block mode: running-average network reward) or per frame
  // (lyapunov mode: cumulative utility).
  std::vector<double> mean;
  std::vector<double> se;

  double final_mean() const { return mean.empty() ? 0.0 : mean.back(); }
  double final_se() const { return se.empty() ? 0.0 : se.back(); }
};

struct TrialResult {
  std::vector<double> series;
  Trace trace;  // block mode, when traces are kept
  std::vector<FrameRecord> frames;  // lyapunov mode, when traces are kept
};

// ---------------------------------------------------------------------------
// Statistics

struct MeanSe {
  double mean = 0.0;
  double se = 0.0;
};

inline MeanSe mean_se(std::span<const double> xs) {
  require(!xs.empty(), "mean of an empty sample");
  const double n = static_cast<double>(xs.size());
  double sum = 0.0;
  for (double x : xs) sum += x;
  const double mean = sum / n;
  if (xs.size() < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : xs) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1.0)) / std::sqrt(n)};
}

// Trials must be ordered by trial index; the reduce is sequential.
inline ResultRecord aggregate(const SweepPoint& point, Strategy s, Mode mode,
                              std::span<const TrialResult> trials) {
  require(!trials.empty(), "cannot aggregate zero trials");
  ResultRecord rec{point, s, mode, trials.size(), {}, {}};
  const std::size_t len = trials.front().series.size();
  std::vector<double> column(trials.size());
  for (std::size_t t = 0; t < len; ++t) {
    for (std::size_t k = 0; k < trials.size(); ++k) column[k] = trials[k].series.at(t);
    const MeanSe ms = mean_se(column);
    rec.mean.push_back(ms.mean);
    rec.se.push_back(ms.se);
  }
  return rec;
}

// ---------------------------------------------------------------------------
// Running

inline NetworkConfig apply_point(const NetworkConfig& base, const SweepPoint& p) {
  NetworkConfig c = base;
  c.phy.bs_antenna = AntennaConfig::directional(p.antenna.beamwidth_deg, p.antenna.msr_db,
                                                base.phy.bs_antenna.total_gain);
  return c;
}

inline LearningParams apply_point(const LearningParams& base, const SweepPoint& p) {
  LearningParams l = base;
  l.power_levels = p.power_levels;
  l.interference_states = p.interference_states;
  return l;
}

/// One independent trial of one strategy at one sweep point.
inline TrialResult run_trial(const ExperimentSpec& spec, const NetworkConfig& config,
                             const LearningParams& learning, const SweepPoint& point,
                             Strategy strategy, std::size_t trial) {
  require(point.ue_rank >= 1, "ue_rank is 1-based");
  const std::uint64_t seed = spec.trial_seed(trial);
  const auto scheduled = schedule_by_rank(config.phy.geometry, point.ue_rank - 1);
  auto player = make_player(strategy, config, learning, scheduled, seed);
  TrialResult out;
  if (spec.mode == Mode::kBlock) {
    const ChannelRealization ch =
        redraw_channel(config.phy, execution_frame_index(learning, 0), seed);
    const auto weights = PayoffWeights::uniform(config.num_bs(), point.alpha, point.beta);
    Trace trace = player->play(ch, weights, config.frame.slots_per_block);
    out.series = running_average_series(trace);
    if (spec.keep_traces) out.trace = std::move(trace);
  } else {
    LyapunovRun run = run_lyapunov(config, *player, spec.lyapunov, learning, scheduled, seed);
    for (const auto& f : run.frames) out.series.push_back(f.utility);
    if (spec.keep_traces) out.frames = std::move(run.frames);
  }
  return out;
}

// Runs `jobs` on a small worker pool; job k writes only its own slot.
inline void parallel_for(std::size_t jobs, std::size_t threads,
                         const std::function<void(std::size_t)>& body) {
  if (threads == 0) threads = std::max<std::size_t>(1, std::thread::hardware_concurrency());
  threads = std::min(threads, jobs);
  if (threads <= 1) {
    for (std::size_t k = 0; k < jobs; ++k) body(k);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::jthread> pool;
  for (std::size_t w = 0; w < threads; ++w)
    pool.emplace_back([&] {
      for (std::size_t k = next++; k < jobs; k = next++) {
        try {
          body(k);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  pool.clear();
  if (failure) std::rethrow_exception(failure);
}

struct ExperimentOutput {
  std::vector<ResultRecord> records;
  // traces[r][trial] for record r, only with keep_traces.
  std::vector<std::vector<TrialResult>> traces;
};

inline ExperimentOutput run_experiment_full(const ExperimentSpec& spec) {
  require(spec.trials >= 1, "trials must be >= 1");
  require(!spec.strategies.empty(), "at least one strategy is required");
  ExperimentOutput out;
  for (const SweepPoint& point : spec.sweep_points()) {
    const NetworkConfig config = apply_point(spec.scenario.network, point);
    const LearningParams learning = apply_point(spec.scenario.learning, point);
    for (Strategy s : spec.strategies) {
      std::vector<TrialResult> trials(spec.trials);
      parallel_for(spec.trials, spec.threads, [&](std::size_t k) {
        trials[k] = run_trial(spec, config, learning, point, s, k);
      });
      out.records.push_back(aggregate(point, s, spec.mode, trials));
      if (spec.keep_traces) out.traces.push_back(std::move(trials));
    }
  }
  return out;
}

inline std::vector<ResultRecord> run_experiment(const ExperimentSpec& spec) {
  return run_experiment_full(spec).records;
}

// ---------------------------------------------------------------------------
// Spec parsing

namespace detail {

inline double parse_beta(const json& v, double bandwidth_hz, std::vector<std::string>& errors,
                         const std::string& path) {
  if (v.is_number()) return v.get<double>();
  if (v.is_string()) {
    std::string s = v.get<std::string>();
    if (!s.empty() && (s.back() == 'W' || s.back() == 'w')) {
      s.pop_back();
      try {
        std::size_t used = 0;
        const double f = std::stod(s, &used);
        if (used == s.size()) return f * bandwidth_hz;
      } catch (const std::exception&) {
      }
    }
  }
  errors.push_back(path + ": expected a number or a bandwidth multiple such as \"0.1W\"");
  return 0.0;
}

template <typename T>
void read_list(const json& obj, const char* key, const std::string& path, std::vector<T>& out,
               std::vector<std::string>& errors) {
  if (!obj.contains(key)) return;
  const json& v = obj[key];
  const json arr = v.is_array() ? v : json::array({v});
  std::vector<T> vals;
  for (const json& e : arr) {
    if constexpr (std::is_integral_v<T>) {
      if (!e.is_number_integer() || e.get<std::int64_t>() < 0) {
        errors.push_back(path + "." + key + ": expected non-negative integers");
        return;
      }
    } else if (!e.is_number()) {
      errors.push_back(path + "." + key + ": expected numbers");
      return;
    }
    vals.push_back(e.get<T>());
  }
  if (vals.empty()) errors.push_back(path + "." + key + ": must not be empty");
  out = std::move(vals);
}

}  // namespace detail

/// Parses an experiment spec; the scenario path is resolved against
/// `base_dir`. All violations are collected before throwing ConfigError.
inline ExperimentSpec parse_experiment_spec(const std::string& text,
                                            const std::filesystem::path& base_dir) {
  std::vector<std::string> errors;
  json root;
  try {
    root = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError({std::string("parse error: ") + e.what()});
  }
  if (!root.is_object()) throw ConfigError({"experiment: expected a JSON object"});

  ExperimentSpec spec;
  if (!root.contains("scenario") || !root["scenario"].is_string()) {
    errors.emplace_back("scenario: path to a scenario file is required");
  } else {
    const std::filesystem::path p = base_dir / root["scenario"].get<std::string>();
    try {
      spec.scenario = load_scenario(p);
    } catch (const ConfigError& e) {
      errors.insert(errors.end(), e.errors().begin(), e.errors().end());
    } catch (const RuntimeError& e) {
      errors.emplace_back(std::string("scenario: ") + e.what());
    }
  }

  if (root.contains("mode")) {
    const auto m = root["mode"].is_string() ? parse_mode(root["mode"].get<std::string>())
                                            : std::nullopt;
    if (m) spec.mode = *m;
    else errors.emplace_back("mode: expected \"block\" or \"lyapunov\"");
  }
  if (root.contains("strategies")) {
    spec.strategies.clear();
    const json& arr = root["strategies"];
    if (!arr.is_array() || arr.empty()) errors.emplace_back("strategies: expected a non-empty array");
    else
      for (const json& e : arr) {
        const auto s = e.is_string() ? parse_strategy(e.get<std::string>()) : std::nullopt;
        if (s) spec.strategies.push_back(*s);
        else errors.push_back("strategies: unknown strategy " + e.dump());
      }
  }
  auto read_count = [&](const char* key, auto& out) {
    if (!root.contains(key)) return;
    if (!root[key].is_number_integer() || root[key].get<std::int64_t>() < 0)
      errors.push_back(std::string(key) + ": expected a non-negative integer");
    else
      out = root[key].get<std::remove_reference_t<decltype(out)>>();
  };
  read_count("trials", spec.trials);
  read_count("seed", spec.base_seed);
  read_count("threads", spec.threads);
  if (spec.trials < 1) errors.emplace_back("trials: must be >= 1");

  const double bw = spec.scenario.network.phy.radio.bandwidth_hz;
  spec.power_levels = {spec.scenario.learning.power_levels};
  spec.interference_states = {spec.scenario.learning.interference_states};
  spec.antennas = {{spec.scenario.network.phy.bs_antenna.msr_db,
                    spec.scenario.network.phy.bs_antenna.beamwidth_deg}};
  if (root.contains("sweep")) {
    const json& sw = root["sweep"];
    if (!sw.is_object()) {
      errors.emplace_back("sweep: expected an object");
    } else {
      detail::read_list(sw, "power_levels", "sweep", spec.power_levels, errors);
      detail::read_list(sw, "interference_states", "sweep", spec.interference_states, errors);
      detail::read_list(sw, "ue_rank", "sweep", spec.ue_ranks, errors);
      if (sw.contains("alpha")) {
        if (sw["alpha"].is_number() && sw["alpha"].get<double>() >= 0.0)
          spec.alpha = sw["alpha"].get<double>();
        else errors.emplace_back("sweep.alpha: expected a non-negative number");
      }
      if (sw.contains("beta")) {
        spec.betas.clear();
        const json arr = sw["beta"].is_array() ? sw["beta"] : json::array({sw["beta"]});
        for (std::size_t k = 0; k < arr.size(); ++k) {
          const double b = detail::parse_beta(arr[k], bw, errors,
                                              "sweep.beta[" + std::to_string(k) + "]");
          if (b < 0.0) errors.push_back("sweep.beta[" + std::to_string(k) + "]: must be >= 0");
          spec.betas.push_back(b);
        }
        if (spec.betas.empty()) errors.emplace_back("sweep.beta: must not be empty");
      }
      if (sw.contains("antenna")) {
        spec.antennas.clear();
        const json& arr = sw["antenna"];
        if (!arr.is_array() || arr.empty()) errors.emplace_back("sweep.antenna: expected a non-empty array");
        else
          for (std::size_t k = 0; k < arr.size(); ++k) {
            const std::string path = "sweep.antenna[" + std::to_string(k) + "]";
            const json& a = arr[k];
            if (!a.is_object() || !a.contains("msr_db") || !a.contains("beamwidth_deg") ||
                !a["msr_db"].is_number() || !a["beamwidth_deg"].is_number()) {
              errors.push_back(path + ": expected {\"msr_db\": x, \"beamwidth_deg\": y}");
              continue;
            }
            AntennaSetting s{a["msr_db"].get<double>(), a["beamwidth_deg"].get<double>()};
            if (!(s.beamwidth_deg > 0.0 && s.beamwidth_deg < 360.0))
              errors.push_back(path + ".beamwidth_deg: must lie in (0, 360)");
            if (!(s.msr_db >= 0.0)) errors.push_back(path + ".msr_db: must be >= 0");
            spec.antennas.push_back(s);
          }
      }
    }
  }
  for (std::size_t pq : spec.power_levels)
    if (pq < 2) errors.emplace_back("sweep.power_levels: every entry must be >= 2");
  for (std::size_t iq : spec.interference_states)
    if (iq < 1) errors.emplace_back("sweep.interference_states: every entry must be >= 1");
  for (std::size_t r : spec.ue_ranks)
    if (r < 1) errors.emplace_back("sweep.ue_rank: ranks are 1-based");

  spec.lyapunov.p_avg_w = 0.5 * spec.scenario.network.phy.p_max_w;
  if (root.contains("lyapunov")) {
    const json& ly = root["lyapunov"];
    detail::Reader r(errors);
    if (!ly.is_object()) {
      errors.emplace_back("lyapunov: expected an object");
    } else {
      r.number(ly, "lyapunov", "v", spec.lyapunov.v);
      r.number(ly, "lyapunov", "p_avg_w", spec.lyapunov.p_avg_w);
      r.count(ly, "lyapunov", "n_frames", spec.lyapunov.n_frames);
      r.number(ly, "lyapunov", "utility_exponent", spec.lyapunov.utility.exponent);
    }
  }
  if (spec.mode == Mode::kLyapunov)
    for (auto& e : spec.lyapunov.violations(spec.scenario.network.phy.p_max_w))
      errors.push_back(std::move(e));

  if (!errors.empty()) throw ConfigError(std::move(errors));
  return spec;
}

inline ExperimentSpec load_experiment_spec(const std::filesystem::path& path) {
  return parse_experiment_spec(read_text_file(path), path.parent_path());
}

// ---------------------------------------------------------------------------
// Output

struct SummaryRow {
  SweepPoint point;
  std::string strategy;
  std::string mode;
  std::size_t trials = 0;
  double final_mean = 0.0;
  double final_se = 0.0;
  bool operator==(const SummaryRow&) const = default;
};

inline std::vector<SummaryRow> summarize(std::span<const ResultRecord> records) {
  std::vector<SummaryRow> rows;
  for (const auto& r : records)
    rows.push_back({r.point, std::string(to_string(r.strategy)), std::string(to_string(r.mode)),
                    r.trials, r.final_mean(), r.final_se()});
  return rows;
}

inline json point_to_json(const SweepPoint& p) {
  return {{"power_levels", p.power_levels},
          {"interference_states", p.interference_states},
          {"alpha", p.alpha},
          {"beta", p.beta},
          {"msr_db", p.antenna.msr_db},
          {"beamwidth_deg", p.antenna.beamwidth_deg},
          {"ue_rank", p.ue_rank}};
}

inline SweepPoint point_from_json(const json& j) {
  return {j.at("power_levels").get<std::size_t>(),
          j.at("interference_states").get<std::size_t>(),
          j.at("alpha").get<double>(),
          j.at("beta").get<double>(),
          {j.at("msr_db").get<double>(), j.at("beamwidth_deg").get<double>()},
          j.at("ue_rank").get<std::size_t>()};
}

/// JSON summary: final-step mean/SE per record plus learner/GT ratios for
/// every sweep point that has both.
inline json summary_to_json(std::span<const ResultRecord> records) {
  json out;
  json rows = json::array();
  for (const SummaryRow& s : summarize(records)) {
    json row = point_to_json(s.point);
    row["strategy"] = s.strategy;
    row["mode"] = s.mode;
    row["trials"] = s.trials;
    row["final_mean"] = s.final_mean;
    row["final_se"] = s.final_se;
    rows.push_back(std::move(row));
  }
  out["results"] = std::move(rows);

  json ratios = json::array();
  for (const auto& a : records) {
    if (a.strategy != Strategy::kLearner) continue;
    for (const auto& b : records) {
      if (b.strategy != Strategy::kGt || !(b.point == a.point)) continue;
      json row = point_to_json(a.point);
      row["learner_over_gt"] = b.final_mean() != 0.0
                                   ? json(a.final_mean() / b.final_mean())
                                   : json(nullptr);
      ratios.push_back(std::move(row));
    }
  }
  out["ratios"] = std::move(ratios);
  return out;
}

inline std::vector<SummaryRow> summary_from_json(const json& j) {
  std::vector<SummaryRow> rows;
  for (const json& r : j.at("results"))
    rows.push_back({point_from_json(r), r.at("strategy").get<std::string>(),
                    r.at("mode").get<std::string>(), r.at("trials").get<std::size_t>(),
                    r.at("final_mean").get<double>(), r.at("final_se").get<double>()});
  return rows;
}

inline void write_results_csv(std::ostream& os, std::span<const ResultRecord> records) {
  os << std::setprecision(17);
  os << "mode,strategy,power_levels,interference_states,alpha,beta,msr_db,beamwidth_deg,"
        "ue_rank,step,mean,se,trials\n";
  for (const auto& r : records)
    for (std::size_t t = 0; t < r.mean.size(); ++t)
      os << to_string(r.mode) << ',' << to_string(r.strategy) << ',' << r.point.power_levels
         << ',' << r.point.interference_states << ',' << r.point.alpha << ',' << r.point.beta
         << ',' << r.point.antenna.msr_db << ',' << r.point.antenna.beamwidth_deg << ','
         << r.point.ue_rank << ',' << t + 1 << ',' << r.mean[t] << ',' << r.se[t] << ','
         << r.trials << '\n';
}

enum class OutputFormat { kCsv, kJson };

inline void emit_results(std::span<const ResultRecord> records, OutputFormat format,
                         const std::filesystem::path& path) {
  require(!records.empty(), "no results to emit");
  std::ostringstream body;
  if (format == OutputFormat::kCsv) write_results_csv(body, records);
  else body << summary_to_json(records).dump(2) << '\n';
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  out << body.str();
  out.flush();
  if (!out) throw RuntimeError("failed writing " + path.string());
}

// Per-slot trace rows; the header is written when `header` is set.
inline void write_trace_csv(std::ostream& os, std::string_view strategy, std::size_t point,
                            std::size_t trial, std::span<const SlotOutcome> trace, bool header) {
  if (trace.empty()) return;
  const std::size_t m = trace.front().reward.size();
  os << std::setprecision(12);
  if (header) {
    os << "strategy,point,trial,slot";
    for (std::size_t i = 0; i < m; ++i) os << ",power_w_bs" << i + 1;
    for (std::size_t i = 0; i < m; ++i) os << ",sinr_db_bs" << i + 1;
    for (std::size_t i = 0; i < m; ++i) os << ",reward_bs" << i + 1;
    os << ",network_reward\n";
  }
  for (std::size_t t = 0; t < trace.size(); ++t) {
    const auto& s = trace[t];
    os << strategy << ',' << point << ',' << trial << ',' << t + 1;
    for (double p : s.powers_w) os << ',' << p;
    for (double x : s.sinr)
      os << ',' << (x > 0.0 ? linear_to_db(x) : -std::numeric_limits<double>::infinity());
    for (double r : s.reward) os << ',' << r;
    os << ',' << s.network_reward() << '\n';
  }
}

// Per-frame Lyapunov rows mirroring the queue table: gamma, X, H per UE and
// Z, alpha, beta, energy per BS.
inline void write_lyapunov_csv(std::ostream& os, std::string_view strategy, std::size_t point,
                               std::size_t trial, std::span<const FrameRecord> frames,
                               bool header) {
  if (frames.empty()) return;
  const std::size_t m = frames.front().z.size();
  os << std::setprecision(12);
  if (header) {
    os << "strategy,point,trial,frame";
    for (const char* f : {"gamma", "bits", "h", "z", "alpha", "beta", "energy_j"})
      for (std::size_t i = 0; i < m; ++i) os << ',' << f << "_bs" << i + 1;
    os << ",utility\n";
  }
  for (const auto& r : frames) {
    os << strategy << ',' << point << ',' << trial << ',' << r.frame + 1;
    for (const auto* v : {&r.gamma, &r.bits, &r.h, &r.z, &r.alpha, &r.beta, &r.energy_j})
      for (double x : *v) os << ',' << x;
    os << ',' << r.utility << '\n';
  }
}

}  // namespace mmw
