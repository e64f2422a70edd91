#pragma once

#include <array>
#include <compare>
#include <span>
#include <string>
#include <vector>

#include "sigroute/netmodel.hpp"
#include "sigroute/simcore.hpp"

namespace sigroute {

enum class AgentKind { Signal, Routing };

struct AgentId {
  AgentKind kind = AgentKind::Signal;
  int index = 0;  // position in Scenario::signal_agents or Scenario::routing_agents

  auto operator<=>(const AgentId&) const = default;
};

struct SignalAgentSpec {
  NodeIdx node = kNone;
  std::vector<ApproachLane> lanes;  // L_i
  int phase_count = 0;
};

struct RoutingAgentSpec {
  int placement = 0;                               // index into Scenario::routing_agents
  std::vector<std::pair<EdgeIdx, double>> downstream;  // (edge, sigma^d)
  int route_count = 0;
};

struct Relation {
  int agent = 0;       // global agent index
  double alpha = 1.0;  // delta^d for SA/RA pairs, 1 otherwise
};

/// Relevant agents of one agent. SAs fill ss/sr, RAs fill rr/rs.
struct Relevance {
  std::vector<Relation> ss, sr, rr, rs;
};

struct RelevanceGraph {
  std::vector<Relevance> of;  // indexed by global agent index
};

/// Front-end input blocks, in network order.
enum class Block { OwnPrimary = 0, OwnSecondary = 1, Relevant = 2, Fingerprint = 3 };
inline constexpr std::size_t kBlockCount = 4;

struct Observation {
  std::vector<double> values;
  std::array<int, kBlockCount> sizes{};

  std::span<const double> block(Block b) const;
};

struct StepRewards {
  std::vector<double> raw_local;   // before sharing
  std::vector<double> local;       // normalized and clipped
  std::vector<double> raw_shared;  // after reward sharing, before normalization
  std::vector<double> shared;      // normalized and clipped
};

/// All SAs (global indices 0..S-1, scenario order) then all RAs.
class AgentSet {
public:
  explicit AgentSet(const Scenario& scenario);

  const Scenario& scenario() const { return *scenario_; }
  std::size_t size() const { return ids_.size(); }
  std::size_t signal_count() const { return signals_.size(); }
  const AgentId& id(std::size_t agent) const { return ids_[agent]; }
  std::string name(std::size_t agent) const;
  int action_count(std::size_t agent) const;
  std::array<int, kBlockCount> block_sizes(std::size_t agent) const;
  const SignalAgentSpec& signal(std::size_t agent) const { return signals_.at(agent); }
  const RoutingAgentSpec& routing(std::size_t agent) const { return routings_.at(agent - signals_.size()); }
  const RoutingAgentPlacement& placement(std::size_t agent) const;
  const RelevanceGraph& relevance() const { return graph_; }

  /// Own wave and wait blocks (normalized, clipped).
  std::pair<std::vector<double>, std::vector<double>> local_state_sa(const Simulation& sim, std::size_t agent) const;
  /// Own arrival and weighted downstream blocks (normalized, clipped).
  std::pair<std::vector<double>, std::vector<double>> local_state_ra(const Simulation& sim, std::size_t agent) const;

  /// fingerprints[j] is agent j's action distribution from the previous step.
  Observation composite_state(std::size_t agent, const Simulation& sim,
                              const std::vector<std::vector<double>>& fingerprints) const;

  double raw_local_reward(const Simulation& sim, std::size_t agent) const;
  double local_reward(const Simulation& sim, std::size_t agent) const;

  /// Reward sharing over raw local rewards (pre-normalization).
  double shared_reward(std::size_t agent, std::span<const double> raw_locals) const;

  double normalize_reward(std::size_t agent, double raw) const;
  double normalize_state(double raw, double factor) const;

  StepRewards rewards(const Simulation& sim) const;

  void apply_action(Simulation& sim, std::size_t agent, int action) const;

  std::vector<std::vector<double>> uniform_fingerprints() const;

private:
  const Scenario* scenario_;
  std::vector<AgentId> ids_;
  std::vector<SignalAgentSpec> signals_;
  std::vector<RoutingAgentSpec> routings_;
  RelevanceGraph graph_;
};

RelevanceGraph build_relevance(const Scenario& scenario);

/// JSON dump of one control step: raw blocks, observations and rewards.
std::string debug_step_json(const AgentSet& agents, const Simulation& sim, const std::vector<Observation>& obs,
                            const StepRewards& rewards, int control_step);

}  // namespace sigroute
