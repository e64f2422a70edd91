// sigroute: train, evaluate and inspect joint signal/routing agents.

#include <CLI11.hpp>

#include <chrono>
#include <fstream>
#include <iostream>
#include <optional>

#include "sigroute/evaluation.hpp"

namespace fs = std::filesystem;
using namespace sigroute;

namespace {

struct EvalArgs {
  std::string ckpt;
  std::string scenario;
  std::string mode = "joint";
  int episodes = 10;
  double compliance = 1.0;
  double demand_factor = 1.0;
  std::uint64_t seed = 0;
  std::string out;
  std::string event_log;
  std::string debug_dump;
};

Scenario scenario_from(const std::string& path) { return path.empty() ? build_sioux_falls() : load_scenario(path); }

void add_eval_options(CLI::App* cmd, EvalArgs& a, bool with_mode) {
  cmd->add_option("--ckpt", a.ckpt, "Checkpoint file (not needed for --mode fixed)");
  cmd->add_option("--scenario", a.scenario, "Scenario file (default: built-in Sioux Falls)");
  if (with_mode) cmd->add_option("--mode", a.mode, "joint|signal|routing|fixed");
  cmd->add_option("--episodes", a.episodes, "Evaluation episodes")->check(CLI::PositiveNumber);
  cmd->add_option("--seed", a.seed, "Evaluation seed");
  cmd->add_option("--out", a.out, "Output directory for CSV/JSON (default: current directory)");
  cmd->add_option("--debug-dump", a.debug_dump, "Write per-step agent JSON lines to this file");
}

EvalOptions eval_options(const EvalArgs& a, std::ofstream& events, std::ofstream& dump) {
  EvalOptions o;
  o.mode = parse_control_mode(a.mode);
  o.episodes = a.episodes;
  o.compliance = a.compliance;
  o.demand_factor = a.demand_factor;
  o.seed = a.seed;
  if (!a.event_log.empty()) {
    events.open(a.event_log);
    if (!events) throw std::runtime_error("cannot write " + a.event_log);
    events << "tick,kind,vehicle,edge,node\n";
    o.event_log = &events;
  }
  if (!a.debug_dump.empty()) {
    dump.open(a.debug_dump);
    if (!dump) throw std::runtime_error("cannot write " + a.debug_dump);
    o.debug_dump = &dump;
  }
  return o;
}

std::optional<Checkpoint> checkpoint_from(const EvalArgs& a, bool required) {
  if (a.ckpt.empty()) {
    if (required) throw std::runtime_error("--ckpt is required for this mode");
    return std::nullopt;
  }
  return load_checkpoint(a.ckpt);
}

fs::path out_dir(const EvalArgs& a) {
  fs::path dir = a.out.empty() ? fs::current_path() : fs::path(a.out);
  fs::create_directories(dir);
  return dir;
}

void print_metrics(const EvalReport& r) {
  const auto& m = r.mean;
  std::cout << to_string(r.mode) << " compliance=" << r.compliance << " demand=" << r.demand_factor
            << " arrived=" << m.arrived << " departed=" << m.departed << " delay=" << m.avg_delay
            << " speed=" << m.avg_speed << " queue=" << m.avg_queue << " completion=" << m.completion_rate << '\n';
}

std::vector<double> parse_list(const std::vector<std::string>& items) {
  std::vector<double> out;
  for (const auto& item : items) {
    std::stringstream ss(item);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      if (!tok.empty()) out.push_back(std::stod(tok));
    }
  }
  return out;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Joint traffic signal control and vehicle routing with multi-agent actor-critic learning"};
  app.require_subcommand(1);

  // train
  auto* train_cmd = app.add_subcommand("train", "Train all agents and write checkpoints and the training curve");
  std::string train_scenario, train_out = "out", train_dump;
  std::uint64_t train_seed = 0;
  long train_steps = -1;
  int ckpt_every = 50;
  bool quiet = false;
  train_cmd->add_option("--scenario", train_scenario, "Scenario file (default: built-in Sioux Falls)");
  train_cmd->add_option("--seed", train_seed, "Training seed");
  train_cmd->add_option("--steps", train_steps, "Total control steps (default: scenario total_steps)");
  train_cmd->add_option("--out", train_out, "Output directory");
  train_cmd->add_option("--checkpoint-every", ckpt_every, "Checkpoint period in episodes (0 = final only)");
  train_cmd->add_option("--debug-dump", train_dump, "Write per-step agent JSON lines to this file");
  train_cmd->add_flag("--quiet", quiet, "No per-episode progress lines");

  // eval
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint with greedy actions");
  EvalArgs eval_args;
  add_eval_options(eval_cmd, eval_args, true);
  eval_cmd->add_option("--compliance", eval_args.compliance, "Compliance rate")->check(CLI::Range(0.0, 1.0));
  eval_cmd->add_option("--demand-factor", eval_args.demand_factor, "Peak-flow multiplier")->check(CLI::PositiveNumber);
  eval_cmd->add_option("--event-log", eval_args.event_log, "Per-tick event CSV");

  auto* comp_cmd = app.add_subcommand("sweep-compliance", "Evaluate the joint policy over compliance rates");
  EvalArgs comp_args;
  std::vector<std::string> rates{"0,0.1,0.2,0.3,0.4,0.5,0.6,0.7,0.8,0.9,1"};
  add_eval_options(comp_cmd, comp_args, false);
  comp_cmd->add_option("--rates", rates, "Rates, comma or space separated");
  comp_cmd->add_option("--demand-factor", comp_args.demand_factor, "Peak-flow multiplier")->check(CLI::PositiveNumber);

  auto* dem_cmd = app.add_subcommand("sweep-demand", "Evaluate over demand multipliers");
  EvalArgs dem_args;
  std::vector<std::string> factors{"0.25,0.5,0.75,1,1.25,1.5,1.75,2"};
  add_eval_options(dem_cmd, dem_args, true);
  dem_cmd->add_option("--factors", factors, "Factors, comma or space separated");
  dem_cmd->add_option("--compliance", dem_args.compliance, "Compliance rate")->check(CLI::Range(0.0, 1.0));

  // scenario
  auto* sc_cmd = app.add_subcommand("scenario", "Scenario utilities");
  sc_cmd->require_subcommand(1);
  auto* validate_cmd = sc_cmd->add_subcommand("validate", "Load a scenario and report its structure");
  std::string validate_path;
  validate_cmd->add_option("file", validate_path, "Scenario file")->required();
  auto* sioux_cmd = sc_cmd->add_subcommand("sioux", "Write the built-in Sioux Falls scenario");
  std::string sioux_out;
  sioux_cmd->add_option("--out", sioux_out, "Destination file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) {
      const Scenario sc = scenario_from(train_scenario);
      TrainConfig cfg = TrainConfig::from(sc.hp);
      cfg.seed = train_seed;
      if (train_steps >= 0) cfg.total_steps = train_steps;
      cfg.out_dir = train_out;
      cfg.checkpoint_every = ckpt_every;
      if (!quiet) cfg.progress = &std::cout;
      std::ofstream dump;
      if (!train_dump.empty()) {
        dump.open(train_dump);
        if (!dump) throw std::runtime_error("cannot write " + train_dump);
        cfg.debug_dump = &dump;
      }
      const auto t0 = std::chrono::steady_clock::now();
      Trainer trainer(sc, cfg);
      const TrainingCurve curve = trainer.train();
      const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
      std::cout << "trained " << trainer.steps_done() << " control steps, " << curve.episodes.size()
                << " complete episodes in " << secs << " s; outputs in " << train_out << '\n';
    } else if (*eval_cmd) {
      std::ofstream events, dump;
      const EvalOptions o = eval_options(eval_args, events, dump);
      const Scenario sc = scenario_from(eval_args.scenario);
      const auto ckpt = checkpoint_from(eval_args, o.mode != ControlMode::FixedBoth);
      const EvalReport r = run_eval(ckpt ? &*ckpt : nullptr, sc, o);
      const fs::path dir = out_dir(eval_args);
      std::ofstream(dir / "eval_report.json") << report_json(r) << '\n';
      emit_plot_data(r, dir / "eval_episodes.csv");
      print_metrics(r);
    } else if (*comp_cmd) {
      std::ofstream events, dump;
      comp_args.mode = "joint";
      const EvalOptions o = eval_options(comp_args, events, dump);
      const Scenario sc = scenario_from(comp_args.scenario);
      const auto ckpt = checkpoint_from(comp_args, true);
      const auto sweep = compliance_sweep(*ckpt, sc, parse_list(rates), o);
      emit_plot_data(sweep, "rate", out_dir(comp_args) / "compliance_sweep.csv");
      for (const auto& r : sweep) print_metrics(r);
    } else if (*dem_cmd) {
      std::ofstream events, dump;
      const EvalOptions o = eval_options(dem_args, events, dump);
      const Scenario sc = scenario_from(dem_args.scenario);
      const auto ckpt = checkpoint_from(dem_args, o.mode != ControlMode::FixedBoth);
      const auto sweep = demand_sweep(ckpt ? &*ckpt : nullptr, sc, parse_list(factors), o);
      emit_plot_data(sweep, "factor", out_dir(dem_args) / "demand_sweep.csv");
      for (const auto& r : sweep) print_metrics(r);
    } else if (*validate_cmd) {
      const Scenario sc = load_scenario(validate_path);
      const AgentSet agents(sc);
      std::cout << "ok: " << sc.network.nodes.size() << " nodes, " << sc.network.edges.size() << " edges, "
                << sc.ods.size() << " OD pairs, " << sc.signal_agents.size() << " signal agents, "
                << sc.routing_agents.size() << " routing agents, " << sc.control_steps_per_episode()
                << " control steps per episode\n";
      for (std::size_t i = 0; i < agents.size(); ++i) {
        const auto b = agents.block_sizes(i);
        std::cout << "  " << agents.name(i) << ": " << agents.action_count(i) << " actions, observation " << b[0]
                  << '+' << b[1] << '+' << b[2] << '+' << b[3] << '\n';
      }
    } else if (*sioux_cmd) {
      std::ofstream out(sioux_out, std::ios::binary);
      if (!out) throw std::runtime_error("cannot write " + sioux_out);
      out << sioux_falls_text();
      if (!out) throw std::runtime_error("failed writing " + sioux_out);
      std::cout << "wrote " << sioux_out << '\n';
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
