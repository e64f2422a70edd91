#include "sigroute/agents.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace sigroute {

std::span<const double> Observation::block(Block b) const {
  const auto k = static_cast<std::size_t>(b);
  std::size_t offset = 0;
  for (std::size_t i = 0; i < k; ++i) offset += sizes[i];
  return std::span<const double>(values).subspan(offset, sizes[k]);
}

RelevanceGraph build_relevance(const Scenario& scenario) {
  const Network& net = scenario.network;
  const std::size_t n_sa = scenario.signal_agents.size();
  const std::size_t n_ra = scenario.routing_agents.size();
  const double delta = scenario.hp.delta;
  RelevanceGraph g;
  g.of.resize(n_sa + n_ra);

  std::map<NodeIdx, int> sa_of_node;
  for (std::size_t i = 0; i < n_sa; ++i) sa_of_node[scenario.signal_agents[i]] = static_cast<int>(i);

  for (std::size_t i = 0; i < n_sa; ++i) {
    const Node& node = net.nodes[scenario.signal_agents[i]];
    std::vector<int> adjacent;
    for (EdgeIdx e : node.in) {
      if (auto it = sa_of_node.find(net.edges[e].from); it != sa_of_node.end()) adjacent.push_back(it->second);
    }
    for (EdgeIdx e : node.out) {
      if (auto it = sa_of_node.find(net.edges[e].to); it != sa_of_node.end()) adjacent.push_back(it->second);
    }
    std::ranges::sort(adjacent);
    adjacent.erase(std::unique(adjacent.begin(), adjacent.end()), adjacent.end());
    for (int j : adjacent) g.of[i].ss.push_back({j, 1.0});
  }

  for (std::size_t r = 0; r < n_ra; ++r) {
    const RoutingAgentPlacement& ra = scenario.routing_agents[r];
    const int self = static_cast<int>(n_sa + r);
    std::map<int, int> hops;  // SA -> minimum hop distance from the fork
    for (auto [node, d] : ra.route_nodes) {
      auto it = sa_of_node.find(node);
      if (it == sa_of_node.end()) continue;
      auto [pos, fresh] = hops.emplace(it->second, d);
      if (!fresh) pos->second = std::min(pos->second, d);
    }
    for (auto [sa, d] : hops) {
      const double alpha = std::pow(delta, d);
      g.of[self].rs.push_back({sa, alpha});
      g.of[sa].sr.push_back({self, alpha});
    }
    for (std::size_t q = 0; q < n_ra; ++q) {
      if (q != r && scenario.routing_agents[q].od == ra.od) g.of[self].rr.push_back({static_cast<int>(n_sa + q), 1.0});
    }
  }
  for (auto& rel : g.of) std::ranges::sort(rel.sr, {}, &Relation::agent);
  return g;
}

AgentSet::AgentSet(const Scenario& scenario) : scenario_(&scenario), graph_(build_relevance(scenario)) {
  const Network& net = scenario.network;
  for (std::size_t i = 0; i < scenario.signal_agents.size(); ++i) {
    const NodeIdx n = scenario.signal_agents[i];
    ids_.push_back({AgentKind::Signal, static_cast<int>(i)});
    signals_.push_back({n, net.approach_lanes(n), static_cast<int>(net.nodes[n].phases.size())});
    if (signals_.back().phase_count < 2) throw ScenarioValidationError("signal agent at " + net.nodes[n].id + " has fewer than 2 phases");
  }
  for (std::size_t r = 0; r < scenario.routing_agents.size(); ++r) {
    const RoutingAgentPlacement& ra = scenario.routing_agents[r];
    ids_.push_back({AgentKind::Routing, static_cast<int>(r)});
    RoutingAgentSpec spec;
    spec.placement = static_cast<int>(r);
    spec.route_count = static_cast<int>(ra.routes.size());
    for (auto [e, d] : ra.downstream) spec.downstream.emplace_back(e, std::pow(scenario.hp.sigma, d));
    routings_.push_back(std::move(spec));
  }
}

std::string AgentSet::name(std::size_t agent) const {
  const AgentId& a = ids_.at(agent);
  if (a.kind == AgentKind::Signal) return "SA_" + scenario_->network.nodes[signals_[a.index].node].id;
  return scenario_->routing_agents[a.index].name;
}

int AgentSet::action_count(std::size_t agent) const {
  const AgentId& a = ids_.at(agent);
  return a.kind == AgentKind::Signal ? signals_[a.index].phase_count : routings_[a.index].route_count;
}

const RoutingAgentPlacement& AgentSet::placement(std::size_t agent) const {
  return scenario_->routing_agents.at(routing(agent).placement);
}

std::array<int, kBlockCount> AgentSet::block_sizes(std::size_t agent) const {
  const Relevance& rel = graph_.of.at(agent);
  auto wave_size = [&](int sa) { return static_cast<int>(signals_[sa].lanes.size()); };
  std::array<int, kBlockCount> s{};
  int fingerprints = 0;
  if (ids_[agent].kind == AgentKind::Signal) {
    s[0] = s[1] = static_cast<int>(signals_[agent].lanes.size());
    for (const Relation& r : rel.ss) s[2] += wave_size(r.agent), fingerprints += action_count(r.agent);
    for (const Relation& r : rel.sr) s[2] += 1, fingerprints += action_count(r.agent);
  } else {
    s[0] = 1;
    s[1] = static_cast<int>(routing(agent).downstream.size());
    for (const Relation& r : rel.rr) s[2] += 1, fingerprints += action_count(r.agent);
    for (const Relation& r : rel.rs) s[2] += wave_size(r.agent), fingerprints += action_count(r.agent);
  }
  s[3] = fingerprints;
  return s;
}

double AgentSet::normalize_state(double raw, double factor) const {
  return std::clamp(raw / factor, scenario_->hp.state_clip_lo, scenario_->hp.state_clip_hi);
}

std::pair<std::vector<double>, std::vector<double>> AgentSet::local_state_sa(const Simulation& sim,
                                                                            std::size_t agent) const {
  const SignalAgentSpec& sa = signals_.at(agent);
  const Hyperparameters& hp = scenario_->hp;
  std::vector<double> wave, wait;
  for (const ApproachLane& l : sa.lanes) {
    wave.push_back(normalize_state(measure_wave(sim, sa.node, l), hp.norm_wave));
    wait.push_back(normalize_state(measure_wait(sim, sa.node, l), hp.norm_wait));
  }
  return {std::move(wave), std::move(wait)};
}

std::pair<std::vector<double>, std::vector<double>> AgentSet::local_state_ra(const Simulation& sim,
                                                                            std::size_t agent) const {
  const RoutingAgentSpec& spec = routing(agent);
  const Hyperparameters& hp = scenario_->hp;
  std::vector<double> arrival{normalize_state(count_arrival_candidates(sim, placement(agent)), hp.norm_arrival)};
  std::vector<double> down;
  for (auto [e, alpha] : spec.downstream) down.push_back(normalize_state(alpha * count_downstream(sim, e), hp.norm_down));
  return {std::move(arrival), std::move(down)};
}

Observation AgentSet::composite_state(std::size_t agent, const Simulation& sim,
                                      const std::vector<std::vector<double>>& fingerprints) const {
  const Relevance& rel = graph_.of.at(agent);
  Observation obs;
  auto append = [&](const std::vector<double>& v, int block) {
    obs.values.insert(obs.values.end(), v.begin(), v.end());
    obs.sizes[block] += static_cast<int>(v.size());
  };
  std::vector<int> fp_agents;
  if (ids_[agent].kind == AgentKind::Signal) {
    auto [wave, wait] = local_state_sa(sim, agent);
    append(wave, 0);
    append(wait, 1);
    for (const Relation& r : rel.ss) append(local_state_sa(sim, r.agent).first, 2), fp_agents.push_back(r.agent);
    for (const Relation& r : rel.sr) append(local_state_ra(sim, r.agent).first, 2), fp_agents.push_back(r.agent);
  } else {
    auto [arrival, down] = local_state_ra(sim, agent);
    append(arrival, 0);
    append(down, 1);
    for (const Relation& r : rel.rr) append(local_state_ra(sim, r.agent).first, 2), fp_agents.push_back(r.agent);
    for (const Relation& r : rel.rs) append(local_state_sa(sim, r.agent).first, 2), fp_agents.push_back(r.agent);
  }
  for (int j : fp_agents) {
    if (fingerprints.at(j).size() != static_cast<std::size_t>(action_count(j))) {
      throw std::logic_error("fingerprint of " + name(j) + " has wrong size");
    }
    append(fingerprints[j], 3);
  }
  if (obs.sizes != block_sizes(agent)) throw std::logic_error("observation dimension mismatch for " + name(agent));
  return obs;
}

double AgentSet::raw_local_reward(const Simulation& sim, std::size_t agent) const {
  const Hyperparameters& hp = scenario_->hp;
  if (ids_.at(agent).kind == AgentKind::Signal) {
    const SignalAgentSpec& sa = signals_[agent];
    double total = 0.0;
    for (const ApproachLane& l : sa.lanes) {
      total += measure_wait(sim, sa.node, l) + hp.alpha1 * measure_first_wait(sim, sa.node, l);
    }
    return -total;
  }
  return hp.alpha2 * static_cast<double>(arrived_count(sim, placement(agent).od));
}

double AgentSet::normalize_reward(std::size_t agent, double raw) const {
  const Hyperparameters& hp = scenario_->hp;
  const double factor = ids_.at(agent).kind == AgentKind::Signal ? hp.norm_reward_sa : hp.norm_reward_ra;
  return std::clamp(raw / factor, hp.reward_clip_lo, hp.reward_clip_hi);
}

double AgentSet::local_reward(const Simulation& sim, std::size_t agent) const {
  return normalize_reward(agent, raw_local_reward(sim, agent));
}

double AgentSet::shared_reward(std::size_t agent, std::span<const double> raw_locals) const {
  const Hyperparameters& hp = scenario_->hp;
  const Relevance& rel = graph_.of.at(agent);
  auto weighted = [&](const std::vector<Relation>& group) {
    double s = 0.0;
    for (const Relation& j : group) s += j.alpha * raw_locals[j.agent];
    return s;
  };
  if (ids_[agent].kind == AgentKind::Signal) {
    return raw_locals[agent] + hp.beta_ss * weighted(rel.ss) + hp.beta_sr * weighted(rel.sr);
  }
  return raw_locals[agent] + hp.beta_rs * weighted(rel.rs);
}

StepRewards AgentSet::rewards(const Simulation& sim) const {
  StepRewards out;
  const std::size_t n = size();
  for (std::size_t i = 0; i < n; ++i) {
    out.raw_local.push_back(raw_local_reward(sim, i));
    out.local.push_back(normalize_reward(i, out.raw_local.back()));
  }
  for (std::size_t i = 0; i < n; ++i) {
    out.raw_shared.push_back(shared_reward(i, out.raw_local));
    out.shared.push_back(normalize_reward(i, out.raw_shared.back()));
  }
  return out;
}

void AgentSet::apply_action(Simulation& sim, std::size_t agent, int action) const {
  if (ids_.at(agent).kind == AgentKind::Signal) {
    sim.set_phase(signals_[agent].node, action);
  } else {
    sim.assign_route(placement(agent), action);
  }
}

std::vector<std::vector<double>> AgentSet::uniform_fingerprints() const {
  std::vector<std::vector<double>> fp;
  for (std::size_t i = 0; i < size(); ++i) {
    const int k = action_count(i);
    fp.emplace_back(k, 1.0 / k);
  }
  return fp;
}

std::string debug_step_json(const AgentSet& agents, const Simulation& sim, const std::vector<Observation>& obs,
                            const StepRewards& rewards, int control_step) {
  nlohmann::ordered_json j;
  j["control_step"] = control_step;
  j["clock"] = sim.clock();
  auto& list = j["agents"] = nlohmann::ordered_json::array();
  for (std::size_t i = 0; i < agents.size(); ++i) {
    nlohmann::ordered_json a;
    a["name"] = agents.name(i);
    if (agents.id(i).kind == AgentKind::Signal) {
      const auto& sa = agents.signal(i);
      std::vector<int> wave;
      std::vector<double> wait, fwait;
      for (const auto& l : sa.lanes) {
        wave.push_back(measure_wave(sim, sa.node, l));
        wait.push_back(measure_wait(sim, sa.node, l));
        fwait.push_back(measure_first_wait(sim, sa.node, l));
      }
      a["raw"] = {{"wave", wave}, {"wait", wait}, {"first_wait", fwait}};
    } else {
      std::vector<int> down;
      for (auto [e, alpha] : agents.routing(i).downstream) down.push_back(count_downstream(sim, e));
      a["raw"] = {{"arrival", count_arrival_candidates(sim, agents.placement(i))},
                  {"down", down},
                  {"arrived", arrived_count(sim, agents.placement(i).od)}};
    }
    if (i < obs.size()) a["observation"] = obs[i].values;
    a["local_reward"] = rewards.local.at(i);
    a["shared_reward"] = rewards.shared.at(i);
    list.push_back(std::move(a));
  }
  return j.dump();
}

}  // namespace sigroute
