#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "sigroute/agents.hpp"
#include "sigroute/neuralcore.hpp"
#include "sigroute/simcore.hpp"

namespace sigroute {

/// Non-finite loss during an update.
class TrainingDiverged : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Checkpoint does not match the scenario's agents.
class TopologyMismatch : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct TrainConfig {
  double gamma = 0.99;
  int batch_steps = 144;
  double entropy_sa = 0.05;
  double entropy_ra = 0.01;
  OptimizerConfig optimizer;
  long total_steps = 500000;
  std::uint64_t seed = 0;
  int checkpoint_every = 50;         // episodes; 0 disables periodic checkpoints
  std::filesystem::path out_dir;     // empty: nothing written
  std::ostream* progress = nullptr;  // one line per episode
  std::ostream* debug_dump = nullptr;  // JSON line per control step

  static TrainConfig from(const Hyperparameters& hp);
};

/// One agent's slice of a batch.
struct AgentTransitions {
  std::vector<int> actions;
  std::vector<double> rewards;  // shared, normalized
  std::vector<double> values;
  std::vector<Vec> probs;
  std::vector<StepCache> policy_caches;
  std::vector<StepCache> value_caches;
  double bootstrap = 0.0;
};

struct TransitionBatch {
  std::vector<AgentTransitions> agents;
  int length = 0;
  bool terminal = false;  // episode ended inside the batch; bootstrap is 0
};

/// R_t = r_t + gamma R_{t+1}, seeded by the bootstrap value.
std::vector<double> td_targets(std::span<const double> rewards, double bootstrap, double gamma);
std::vector<double> advantages(std::span<const double> targets, std::span<const double> values);
/// (1/2n) sum (R - V)^2 over the n entries.
double value_loss(std::span<const double> targets, std::span<const double> values);
/// (1/n) sum [log pi(a_t) A_t + beta H(pi_t)].
double policy_objective(std::span<const Vec> probs, std::span<const int> actions, std::span<const double> adv,
                        double beta);

/// Sum over steps and agents of local rewards. records[t][i].
double episode_reward(const std::vector<std::vector<double>>& records);

struct EpisodeRecord {
  int episode = 0;
  double total_reward = 0.0;
  long arrived = 0;
  long departed = 0;
  double avg_delay = 0.0;
  std::vector<double> agent_rewards;

  friend bool operator==(const EpisodeRecord&, const EpisodeRecord&) = default;
};

struct TrainingCurve {
  std::vector<std::string> agent_names;
  std::vector<EpisodeRecord> episodes;

  friend bool operator==(const TrainingCurve&, const TrainingCurve&) = default;
};

struct Checkpoint {
  std::vector<std::string> names;
  std::vector<AgentNet> nets;
  long episodes = 0;
  long steps = 0;
  std::uint64_t seed = 0;
};

NetSpec agent_net_spec(const AgentSet& agents, std::size_t agent);
std::vector<AgentNet> init_agent_nets(const AgentSet& agents, std::uint64_t seed);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);
void check_compatible(const Checkpoint& ckpt, const AgentSet& agents);

/// Per-episode seed of the simulator.
std::uint64_t episode_seed(std::uint64_t seed, long episode);

class Trainer {
public:
  Trainer(const Scenario& scenario, TrainConfig config);

  /// Runs up to n control steps (fewer at episode end) from the current state.
  TransitionBatch collect_batch(int n);
  /// Value and policy updates for every agent from one batch.
  void update(const TransitionBatch& batch);
  /// Runs until config.total_steps control steps have been executed.
  TrainingCurve train();

  const AgentSet& agents() const { return agents_; }
  std::vector<AgentNet>& nets() { return nets_; }
  const Simulation& sim() const { return *sim_; }
  long steps_done() const { return steps_done_; }
  long episodes_done() const { return episode_; }
  const TrainingCurve& curve() const { return curve_; }
  Checkpoint checkpoint() const;

private:
  void reset_episode();
  void finish_episode();

  const Scenario* scenario_;
  TrainConfig config_;
  AgentSet agents_;
  std::vector<AgentNet> nets_;
  std::unique_ptr<Simulation> sim_;
  std::vector<std::vector<double>> fingerprints_;
  Rng action_rng_;
  long episode_ = 0;
  long steps_done_ = 0;
  int step_in_episode_ = 0;
  std::vector<double> episode_local_;  // per agent
  TrainingCurve curve_;
};

TrainingCurve train(const Scenario& scenario, const TrainConfig& config);

void write_curve_csv(const TrainingCurve& curve, const std::filesystem::path& path);
TrainingCurve read_curve_csv(const std::filesystem::path& path);

}  // namespace sigroute
