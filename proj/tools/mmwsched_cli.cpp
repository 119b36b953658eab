#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <sstream>
#include <string>

#include "CLI11.hpp"
#include "mmwsched/config.hpp"
#include "mmwsched/experiment.hpp"

namespace {

using namespace mmw;

struct RunOptions {
  std::string spec_path;
  std::string out_path;
  std::string format = "csv";
  std::string trace_path;
  std::optional<std::size_t> trials;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> threads;
  std::optional<std::string> mode;
};

void write_file(const std::filesystem::path& path, const std::string& body) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw RuntimeError("cannot open " + path.string() + " for writing");
  out << body;
  if (!out) throw RuntimeError("failed writing " + path.string());
}

int cmd_run(const RunOptions& o) {
  ExperimentSpec spec = load_experiment_spec(o.spec_path);
  if (o.trials) spec.trials = *o.trials;
  if (o.seed) spec.base_seed = *o.seed;
  if (o.threads) spec.threads = *o.threads;
  if (o.mode) {
    const auto m = parse_mode(*o.mode);
    if (!m) throw InvalidArgument("unknown mode " + *o.mode);
    spec.mode = *m;
  }
  if (spec.trials < 1) throw InvalidArgument("--trials must be >= 1");
  spec.keep_traces = !o.trace_path.empty();

  const ExperimentOutput out = run_experiment_full(spec);
  const OutputFormat fmt = o.format == "json" ? OutputFormat::kJson : OutputFormat::kCsv;
  emit_results(out.records, fmt, o.out_path);

  if (spec.keep_traces) {
    std::ostringstream body;
    const std::size_t per_point = spec.strategies.size();
    bool header = true;
    for (std::size_t r = 0; r < out.traces.size(); ++r) {
      const auto name = to_string(out.records[r].strategy);
      for (std::size_t k = 0; k < out.traces[r].size(); ++k) {
        const TrialResult& t = out.traces[r][k];
        if (spec.mode == Mode::kBlock)
          write_trace_csv(body, name, r / per_point, k, t.trace, header);
        else
          write_lyapunov_csv(body, name, r / per_point, k, t.frames, header);
        header = false;
      }
    }
    write_file(o.trace_path, body.str());
  }

  for (const auto& row : summarize(out.records))
    std::cout << row.mode << ' ' << row.strategy << " P_q=" << row.point.power_levels
              << " I_q=" << row.point.interference_states << " beta=" << row.point.beta
              << " MSR=" << row.point.antenna.msr_db << "dB theta=" << row.point.antenna.beamwidth_deg
              << " ue=" << row.point.ue_rank << " final=" << row.final_mean << " se="
              << row.final_se << '\n';
  return 0;
}

int cmd_validate(const std::string& path) {
  const ConfigResult res = validate_config(read_text_file(path));
  if (res.ok()) {
    const Scenario& s = *res.scenario;
    std::cout << path << ": ok (" << s.network.num_bs() << " BSs, " << s.network.num_ue()
              << " UEs)\n";
    return 0;
  }
  for (const auto& e : res.errors) std::cerr << path << ": " << e << '\n';
  return 1;
}

int cmd_dump(const std::string& spec_path, std::size_t trial, const std::string& out_path) {
  ExperimentSpec spec = load_experiment_spec(spec_path);
  const SweepPoint point = spec.sweep_points().front();
  const NetworkConfig config = apply_point(spec.scenario.network, point);
  const LearningParams learning = apply_point(spec.scenario.learning, point);
  const std::uint64_t seed = spec.trial_seed(trial);
  const auto scheduled = schedule_by_rank(config.phy.geometry, point.ue_rank - 1);
  LearnerPlayer player(config, learning, scheduled, seed);
  const ChannelRealization ch = redraw_channel(config.phy, execution_frame_index(learning, 0), seed);
  player.play(ch, PayoffWeights::uniform(config.num_bs(), point.alpha, point.beta),
              config.frame.slots_per_block);
  std::ostringstream body;
  dump_q_tables(body, player.agents());
  if (out_path.empty()) std::cout << body.str();
  else write_file(out_path, body.str());
  return 0;
}

int cmd_default_scenario(std::uint64_t seed, const std::string& out_path) {
  const std::string body = scenario_to_json(make_default_scenario(seed)).dump(2) + "\n";
  if (out_path.empty()) std::cout << body;
  else write_file(out_path, body);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"mmWave downlink power-allocation simulator"};
  app.require_subcommand(1);

  RunOptions run;
  auto* run_cmd = app.add_subcommand("run", "Run a multi-trial experiment");
  run_cmd->add_option("spec", run.spec_path, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  run_cmd->add_option("-o,--out", run.out_path, "Result file")->required();
  run_cmd->add_option("-f,--format", run.format, "csv or json")
      ->check(CLI::IsMember({"csv", "json"}));
  run_cmd->add_option("--trials", run.trials, "Override the number of trials");
  run_cmd->add_option("--seed", run.seed, "Override the base seed");
  run_cmd->add_option("--threads", run.threads, "Worker threads (0 = all cores)");
  run_cmd->add_option("--mode", run.mode, "block or lyapunov")
      ->check(CLI::IsMember({"block", "lyapunov"}));
  run_cmd->add_option("--trace", run.trace_path, "Per-slot / per-frame trace CSV");

  std::string scenario_path;
  auto* val_cmd = app.add_subcommand("validate", "Validate a scenario file");
  val_cmd->add_option("scenario", scenario_path, "Scenario (JSON)")->required()->check(CLI::ExistingFile);

  std::string dump_spec, dump_out;
  std::size_t dump_trial = 0;
  auto* dump_cmd = app.add_subcommand("dump-qtables", "Train, play one block, print Q-tables");
  dump_cmd->add_option("spec", dump_spec, "Experiment spec (JSON)")->required()->check(CLI::ExistingFile);
  dump_cmd->add_option("--trial", dump_trial, "Trial index");
  dump_cmd->add_option("-o,--out", dump_out, "Output file (default stdout)");

  std::uint64_t scen_seed = 1;
  std::string scen_out;
  auto* scen_cmd = app.add_subcommand("default-scenario", "Write the default 4-BS scenario");
  scen_cmd->add_option("--seed", scen_seed, "Placement seed");
  scen_cmd->add_option("-o,--out", scen_out, "Output file (default stdout)");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run_cmd) return cmd_run(run);
    if (*val_cmd) return cmd_validate(scenario_path);
    if (*dump_cmd) return cmd_dump(dump_spec, dump_trial, dump_out);
    if (*scen_cmd) return cmd_default_scenario(scen_seed, scen_out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 1;
}
