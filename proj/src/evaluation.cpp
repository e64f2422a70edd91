#include "sigroute/evaluation.hpp"

#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sigroute {

std::string_view to_string(ControlMode mode) {
  switch (mode) {
    case ControlMode::Joint: return "joint";
    case ControlMode::SignalOnly: return "signal_only";
    case ControlMode::RoutingOnly: return "routing_only";
    case ControlMode::FixedBoth: return "fixed_both";
  }
  return "?";
}

ControlMode parse_control_mode(std::string_view text) {
  if (text == "joint") return ControlMode::Joint;
  if (text == "signal" || text == "signal_only") return ControlMode::SignalOnly;
  if (text == "routing" || text == "routing_only") return ControlMode::RoutingOnly;
  if (text == "fixed" || text == "fixed_both") return ControlMode::FixedBoth;
  throw std::invalid_argument("unknown mode '" + std::string(text) + "' (joint|signal|routing|fixed)");
}

EpisodeMetrics episode_metrics(const Simulation& sim) {
  const auto& m = sim.metrics();
  EpisodeMetrics e;
  e.arrived = m.arrived;
  e.departed = m.spawned;
  e.avg_delay = m.arrived ? m.delay_sum / static_cast<double>(m.arrived) : 0.0;
  e.avg_speed = m.travel_time_sum > 0.0 ? m.distance_sum / m.travel_time_sum : 0.0;
  e.avg_queue = m.queue_samples ? m.queue_sum / static_cast<double>(m.queue_samples) : 0.0;
  e.completion_rate = m.spawned ? static_cast<double>(m.arrived) / static_cast<double>(m.spawned) : 1.0;
  return e;
}

int fixed_time_phase(int step, int phase_count, int green_steps) {
  return (step / (green_steps + 1)) % phase_count;
}

EvalReport run_eval(const Checkpoint* ckpt, const Scenario& scenario, const EvalOptions& opt) {
  if (opt.episodes <= 0) throw std::invalid_argument("episodes must be positive");
  if (opt.compliance < 0.0 || opt.compliance > 1.0) throw std::invalid_argument("compliance must lie in [0,1]");
  if (!(opt.demand_factor > 0.0)) throw std::invalid_argument("demand factor must be positive");
  const AgentSet agents(scenario);
  const bool use_nets = opt.mode != ControlMode::FixedBoth;
  if (use_nets) {
    if (!ckpt) throw std::invalid_argument("mode " + std::string(to_string(opt.mode)) + " needs a checkpoint");
    check_compatible(*ckpt, agents);
  }
  const bool learned_signals = opt.mode == ControlMode::Joint || opt.mode == ControlMode::SignalOnly;
  // signal_only keeps RA nets running for their fingerprints but no vehicle follows them.
  const double compliance = opt.mode == ControlMode::SignalOnly ? 0.0 : opt.compliance;

  EvalReport report;
  report.mode = opt.mode;
  report.compliance = opt.compliance;
  report.demand_factor = opt.demand_factor;
  report.seed = opt.seed;
  const int steps = scenario.control_steps_per_episode();
  const int ticks = scenario.ticks_per_control_step();
  const std::size_t n = agents.size();

  for (int ep = 0; ep < opt.episodes; ++ep) {
    Simulation sim(scenario, episode_seed(opt.seed, ep), {opt.demand_factor, compliance, opt.event_log});
    std::vector<LstmState> states;
    if (use_nets) {
      for (const AgentNet& net : ckpt->nets) states.push_back(LstmState::zeros(net.policy.spec().lstm_units));
    }
    auto fingerprints = agents.uniform_fingerprints();
    std::vector<Observation> obs(n);
    for (int s = 0; s < steps && !sim.finished(); ++s) {
      std::vector<int> actions(n, 0);
      if (use_nets) {
        for (std::size_t i = 0; i < n; ++i) obs[i] = agents.composite_state(i, sim, fingerprints);
        for (std::size_t i = 0; i < n; ++i) {
          PolicyStep p = forward_policy(ckpt->nets[i].policy, obs[i].values, states[i]);
          states[i] = p.state;
          actions[i] = greedy_action(p.probs);
          fingerprints[i].assign(p.probs.data(), p.probs.data() + p.probs.size());
        }
      }
      for (std::size_t i = 0; i < n; ++i) {
        if (agents.id(i).kind == AgentKind::Signal) {
          const int phase = learned_signals ? actions[i] : fixed_time_phase(s, agents.action_count(i));
          agents.apply_action(sim, i, phase);
        } else if (use_nets) {
          agents.apply_action(sim, i, actions[i]);
        }
      }
      sim.begin_control_step();
      sim.advance(ticks);
      if (opt.debug_dump) {
        const StepRewards rw = agents.rewards(sim);
        *opt.debug_dump << debug_step_json(agents, sim, use_nets ? obs : std::vector<Observation>{}, rw, s) << '\n';
      }
    }
    report.episodes.push_back(episode_metrics(sim));
  }

  EpisodeMetrics& m = report.mean;
  const double k = static_cast<double>(report.episodes.size());
  double arrived = 0, departed = 0;
  m.completion_rate = 0.0;
  for (const EpisodeMetrics& e : report.episodes) {
    arrived += static_cast<double>(e.arrived);
    departed += static_cast<double>(e.departed);
    m.avg_delay += e.avg_delay / k;
    m.avg_speed += e.avg_speed / k;
    m.avg_queue += e.avg_queue / k;
    m.completion_rate += e.completion_rate / k;
  }
  m.arrived = std::lround(arrived / k);
  m.departed = std::lround(departed / k);
  return report;
}

std::vector<EvalReport> compliance_sweep(const Checkpoint& ckpt, const Scenario& scenario,
                                         const std::vector<double>& rates, EvalOptions options) {
  std::vector<EvalReport> out;
  for (double rate : rates) {
    if (rate < 0.0 || rate > 1.0) throw std::invalid_argument("compliance rates must lie in [0,1]");
    options.compliance = rate;
    out.push_back(run_eval(&ckpt, scenario, options));
  }
  return out;
}

std::vector<EvalReport> demand_sweep(const Checkpoint* ckpt, const Scenario& scenario,
                                     const std::vector<double>& factors, EvalOptions options) {
  std::vector<EvalReport> out;
  for (double f : factors) {
    if (!(f > 0.0)) throw std::invalid_argument("demand factors must be positive");
    options.demand_factor = f;
    out.push_back(run_eval(ckpt, scenario, options));
  }
  return out;
}

namespace {

nlohmann::ordered_json metrics_to_json(const EpisodeMetrics& e) {
  return {{"arrived", e.arrived},     {"departed", e.departed},   {"avg_delay_s", e.avg_delay},
          {"avg_speed_mps", e.avg_speed}, {"avg_queue_veh", e.avg_queue}, {"completion_rate", e.completion_rate}};
}

std::ofstream open_csv(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  return out;
}

void write_metrics_row(std::ostream& out, const EpisodeMetrics& e) {
  out << e.arrived << ',' << e.departed << ',' << e.avg_delay << ',' << e.avg_speed << ',' << e.avg_queue << ','
      << e.completion_rate << '\n';
}

}  // namespace

std::string report_json(const EvalReport& r) {
  nlohmann::ordered_json j;
  j["mode"] = to_string(r.mode);
  j["compliance"] = r.compliance;
  j["demand_factor"] = r.demand_factor;
  j["seed"] = r.seed;
  j["mean"] = metrics_to_json(r.mean);
  auto& eps = j["episodes"] = nlohmann::ordered_json::array();
  for (const auto& e : r.episodes) eps.push_back(metrics_to_json(e));
  return j.dump(2);
}

void emit_plot_data(const TrainingCurve& curve, const std::filesystem::path& path) { write_curve_csv(curve, path); }

void emit_plot_data(const EvalReport& report, const std::filesystem::path& path) {
  auto out = open_csv(path);
  out << "episode,arrived,departed,delay,speed,queue,completion\n";
  for (std::size_t i = 0; i < report.episodes.size(); ++i) {
    out << i << ',';
    write_metrics_row(out, report.episodes[i]);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

void emit_plot_data(const std::vector<EvalReport>& sweep, std::string_view key, const std::filesystem::path& path) {
  if (key != "rate" && key != "factor") throw std::invalid_argument("sweep key must be rate or factor");
  auto out = open_csv(path);
  out << key << ",arrived,departed,delay,speed,queue,completion\n";
  for (const EvalReport& r : sweep) {
    out << (key == "rate" ? r.compliance : r.demand_factor) << ',';
    write_metrics_row(out, r.mean);
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

CsvTable read_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  CsvTable t;
  std::string line, cell;
  if (!std::getline(in, line)) throw std::runtime_error("empty csv " + path.string());
  std::stringstream header(line);
  while (std::getline(header, cell, ',')) t.header.push_back(cell);
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::vector<double> row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    if (row.size() != t.header.size()) throw std::runtime_error("ragged csv row in " + path.string());
    t.rows.push_back(std::move(row));
  }
  return t;
}

}  // namespace sigroute
