#include "sigroute/maa2c.hpp"

#include <cmath>
#include <fstream>
#include <iomanip>
#include <ostream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

namespace sigroute {

namespace {
constexpr std::uint32_t kEpisodeStream = 0xE9;
constexpr std::uint32_t kActionStream = 0xAC;
constexpr std::uint32_t kInitStream = 0x1A;
}  // namespace

TrainConfig TrainConfig::from(const Hyperparameters& hp) {
  TrainConfig c;
  c.gamma = hp.gamma;
  c.batch_steps = hp.batch_steps;
  c.entropy_sa = hp.entropy_sa;
  c.entropy_ra = hp.entropy_ra;
  c.optimizer = {hp.learning_rate, hp.adam_beta1, hp.adam_beta2, hp.adam_epsilon, hp.grad_clip};
  c.total_steps = hp.total_steps;
  return c;
}

std::vector<double> td_targets(std::span<const double> rewards, double bootstrap, double gamma) {
  std::vector<double> r(rewards.size());
  double next = bootstrap;
  for (std::size_t t = rewards.size(); t-- > 0;) {
    next = rewards[t] + gamma * next;
    r[t] = next;
  }
  return r;
}

std::vector<double> advantages(std::span<const double> targets, std::span<const double> values) {
  if (targets.size() != values.size()) throw std::invalid_argument("advantages: length mismatch");
  std::vector<double> a(targets.size());
  for (std::size_t t = 0; t < a.size(); ++t) a[t] = targets[t] - values[t];
  return a;
}

double value_loss(std::span<const double> targets, std::span<const double> values) {
  if (targets.size() != values.size()) throw std::invalid_argument("value_loss: length mismatch");
  if (targets.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t t = 0; t < targets.size(); ++t) s += (targets[t] - values[t]) * (targets[t] - values[t]);
  return s / (2.0 * static_cast<double>(targets.size()));
}

double policy_objective(std::span<const Vec> probs, std::span<const int> actions, std::span<const double> adv,
                        double beta) {
  if (probs.size() != actions.size() || probs.size() != adv.size()) {
    throw std::invalid_argument("policy_objective: length mismatch");
  }
  if (probs.empty()) return 0.0;
  double j = 0.0;
  for (std::size_t t = 0; t < probs.size(); ++t) j += std::log(probs[t](actions[t])) * adv[t] + beta * entropy(probs[t]);
  return j / static_cast<double>(probs.size());
}

double episode_reward(const std::vector<std::vector<double>>& records) {
  double total = 0.0;
  for (const auto& step : records) {
    for (double r : step) total += r;
  }
  return total;
}

NetSpec agent_net_spec(const AgentSet& agents, std::size_t agent) {
  const Hyperparameters& hp = agents.scenario().hp;
  const auto& widths = agents.id(agent).kind == AgentKind::Signal ? hp.fc_sa : hp.fc_ra;
  NetSpec spec;
  spec.inputs = agents.block_sizes(agent);
  for (std::size_t k = 0; k < kFrontEnds; ++k) spec.widths[k] = widths[k];
  spec.lstm_units = hp.lstm_units;
  spec.outputs = agents.action_count(agent);
  return spec;
}

std::vector<AgentNet> init_agent_nets(const AgentSet& agents, std::uint64_t seed) {
  std::vector<AgentNet> nets;
  for (std::size_t i = 0; i < agents.size(); ++i) {
    nets.push_back(init_agent_net(agent_net_spec(agents, i), make_stream(seed, kInitStream, static_cast<std::uint32_t>(i)).next()));
  }
  return nets;
}

std::uint64_t episode_seed(std::uint64_t seed, long episode) {
  return make_stream(seed, kEpisodeStream, static_cast<std::uint32_t>(episode)).next();
}

Trainer::Trainer(const Scenario& scenario, TrainConfig config)
    : scenario_(&scenario),
      config_(std::move(config)),
      agents_(scenario),
      nets_(init_agent_nets(agents_, config_.seed)),
      action_rng_(make_stream(config_.seed, kActionStream)) {
  if (config_.batch_steps <= 0) throw std::invalid_argument("batch_steps must be positive");
  for (std::size_t i = 0; i < agents_.size(); ++i) curve_.agent_names.push_back(agents_.name(i));
  reset_episode();
}

void Trainer::reset_episode() {
  sim_ = std::make_unique<Simulation>(*scenario_, episode_seed(config_.seed, episode_));
  for (AgentNet& net : nets_) net.reset_state();
  fingerprints_ = agents_.uniform_fingerprints();
  step_in_episode_ = 0;
  episode_local_.assign(agents_.size(), 0.0);
}

void Trainer::finish_episode() {
  const auto& m = sim_->metrics();
  EpisodeRecord rec;
  rec.episode = static_cast<int>(episode_);
  rec.agent_rewards = episode_local_;
  for (double r : episode_local_) rec.total_reward += r;
  rec.arrived = m.arrived;
  rec.departed = m.spawned;
  rec.avg_delay = m.arrived ? m.delay_sum / static_cast<double>(m.arrived) : 0.0;
  curve_.episodes.push_back(rec);
  ++episode_;
  if (config_.progress) {
    *config_.progress << "episode " << rec.episode << " reward " << rec.total_reward << " arrived " << rec.arrived
                      << " delay " << rec.avg_delay << '\n';
  }
  if (!config_.out_dir.empty()) {
    write_curve_csv(curve_, config_.out_dir / "training_curve.csv");
    if (config_.checkpoint_every > 0 && episode_ % config_.checkpoint_every == 0) {
      save_checkpoint(checkpoint(), config_.out_dir / ("ckpt_ep" + std::to_string(episode_)));
    }
  }
  reset_episode();
}

TransitionBatch Trainer::collect_batch(int n) {
  const std::size_t count = agents_.size();
  TransitionBatch batch;
  batch.agents.resize(count);
  const int ticks = scenario_->ticks_per_control_step();
  std::vector<Observation> obs(count);
  std::vector<int> actions(count);
  for (int k = 0; k < n; ++k) {
    for (std::size_t i = 0; i < count; ++i) obs[i] = agents_.composite_state(i, *sim_, fingerprints_);
    std::vector<std::vector<double>> next_fp(count);
    for (std::size_t i = 0; i < count; ++i) {
      AgentNet& net = nets_[i];
      AgentTransitions& tr = batch.agents[i];
      PolicyStep p = forward_policy(net.policy, obs[i].values, net.policy_state);
      ValueStep v = forward_value(net.value, obs[i].values, net.value_state);
      net.policy_state = p.state;
      net.value_state = v.state;
      actions[i] = sample_action(p.probs, action_rng_);
      next_fp[i].assign(p.probs.data(), p.probs.data() + p.probs.size());
      tr.actions.push_back(actions[i]);
      tr.values.push_back(v.value);
      tr.probs.push_back(std::move(p.probs));
      tr.policy_caches.push_back(std::move(p.cache));
      tr.value_caches.push_back(std::move(v.cache));
    }
    fingerprints_ = std::move(next_fp);
    for (std::size_t i = 0; i < count; ++i) agents_.apply_action(*sim_, i, actions[i]);
    sim_->begin_control_step();
    sim_->advance(ticks);
    const StepRewards rw = agents_.rewards(*sim_);
    for (std::size_t i = 0; i < count; ++i) {
      batch.agents[i].rewards.push_back(rw.shared[i]);
      episode_local_[i] += rw.local[i];
    }
    if (config_.debug_dump) *config_.debug_dump << debug_step_json(agents_, *sim_, obs, rw, step_in_episode_) << '\n';
    ++batch.length;
    ++steps_done_;
    ++step_in_episode_;
    if (sim_->finished()) {
      batch.terminal = true;
      break;
    }
  }
  if (!batch.terminal) {
    for (std::size_t i = 0; i < count; ++i) {
      const Observation next = agents_.composite_state(i, *sim_, fingerprints_);
      batch.agents[i].bootstrap = forward_value(nets_[i].value, next.values, nets_[i].value_state).value;
    }
  }
  return batch;
}

void Trainer::update(const TransitionBatch& batch) {
  const int n = batch.length;
  if (n == 0) return;
  for (std::size_t i = 0; i < agents_.size(); ++i) {
    const AgentTransitions& tr = batch.agents[i];
    AgentNet& net = nets_[i];
    const double beta = agents_.id(i).kind == AgentKind::Signal ? config_.entropy_sa : config_.entropy_ra;
    const std::vector<double> targets = td_targets(tr.rewards, tr.bootstrap, config_.gamma);
    const std::vector<double> adv = advantages(targets, tr.values);
    const double lv = value_loss(targets, tr.values);
    const double j = policy_objective(tr.probs, tr.actions, adv, beta);
    if (!std::isfinite(lv) || !std::isfinite(j)) {
      nlohmann::ordered_json d;
      d["agent"] = agents_.name(i);
      d["episode"] = episode_;
      d["step"] = steps_done_;
      d["value_loss"] = std::isfinite(lv) ? nlohmann::ordered_json(lv) : nlohmann::ordered_json(std::to_string(lv));
      d["policy_objective"] = std::isfinite(j) ? nlohmann::ordered_json(j) : nlohmann::ordered_json(std::to_string(j));
      d["rewards"] = tr.rewards;
      d["bootstrap"] = std::to_string(tr.bootstrap);
      std::vector<std::string> values;
      for (double v : tr.values) values.push_back(std::to_string(v));
      d["values"] = values;
      if (!config_.out_dir.empty()) std::ofstream(config_.out_dir / "diverged.json") << d.dump(2) << '\n';
      throw TrainingDiverged("non-finite loss: " + d.dump());
    }

    std::vector<Vec> dv(n);
    for (int t = 0; t < n; ++t) dv[t] = Vec::Constant(1, -(targets[t] - tr.values[t]) / n);
    net.value.zero_grad();
    net.value.backward(tr.value_caches, dv);
    auto vp = net.value.params();
    clip_grad_norm(vp, config_.optimizer.clip_norm);
    adam_step(vp, config_.optimizer);

    std::vector<Vec> dp(n);
    for (int t = 0; t < n; ++t) dp[t] = policy_logit_grad(tr.probs[t], tr.actions[t], adv[t], beta, n);
    net.policy.zero_grad();
    net.policy.backward(tr.policy_caches, dp);
    auto pp = net.policy.params();
    clip_grad_norm(pp, config_.optimizer.clip_norm);
    adam_step(pp, config_.optimizer);
  }
}

TrainingCurve Trainer::train() {
  if (!config_.out_dir.empty()) std::filesystem::create_directories(config_.out_dir);
  while (steps_done_ < config_.total_steps) {
    const int n = static_cast<int>(std::min<long>(config_.batch_steps, config_.total_steps - steps_done_));
    const TransitionBatch batch = collect_batch(n);
    update(batch);
    if (batch.terminal) finish_episode();
  }
  if (!config_.out_dir.empty()) {
    write_curve_csv(curve_, config_.out_dir / "training_curve.csv");
    save_checkpoint(checkpoint(), config_.out_dir / "ckpt_final");
  }
  return curve_;
}

Checkpoint Trainer::checkpoint() const {
  Checkpoint c;
  c.names = curve_.agent_names;
  c.nets = nets_;
  for (AgentNet& net : c.nets) net.reset_state();
  c.episodes = episode_;
  c.steps = steps_done_;
  c.seed = config_.seed;
  return c;
}

TrainingCurve train(const Scenario& scenario, const TrainConfig& config) {
  Trainer trainer(scenario, config);
  return trainer.train();
}

void write_curve_csv(const TrainingCurve& curve, const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  out << std::setprecision(17);
  out << "episode,total_reward,arrived,departed,avg_delay_s";
  for (const auto& name : curve.agent_names) out << ",reward_" << name;
  out << '\n';
  for (const auto& r : curve.episodes) {
    out << r.episode << ',' << r.total_reward << ',' << r.arrived << ',' << r.departed << ',' << r.avg_delay;
    for (double a : r.agent_rewards) out << ',' << a;
    out << '\n';
  }
  if (!out) throw std::runtime_error("failed writing " + path.string());
}

TrainingCurve read_curve_csv(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path.string());
  TrainingCurve curve;
  std::string line;
  std::getline(in, line);
  {
    std::stringstream ss(line);
    std::string cell;
    for (int k = 0; std::getline(ss, cell, ','); ++k) {
      if (k >= 5) curve.agent_names.push_back(cell.substr(7));
    }
  }
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    std::vector<std::string> cells;
    while (std::getline(ss, cell, ',')) cells.push_back(cell);
    if (cells.size() != 5 + curve.agent_names.size()) throw std::runtime_error("malformed curve row: " + line);
    EpisodeRecord r;
    r.episode = std::stoi(cells[0]);
    r.total_reward = std::stod(cells[1]);
    r.arrived = std::stol(cells[2]);
    r.departed = std::stol(cells[3]);
    r.avg_delay = std::stod(cells[4]);
    for (std::size_t k = 5; k < cells.size(); ++k) r.agent_rewards.push_back(std::stod(cells[k]));
    curve.episodes.push_back(std::move(r));
  }
  return curve;
}

}  // namespace sigroute
