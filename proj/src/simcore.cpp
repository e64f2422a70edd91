#include "sigroute/simcore.hpp"

#include <algorithm>
#include <cmath>
#include <ostream>
#include <stdexcept>

#include <json.hpp>

namespace sigroute {

namespace {
constexpr std::uint32_t kDemandStream = 0x0D;
constexpr std::uint32_t kComplianceStream = 0xC0;
}  // namespace

int LinkState::vehicle_count() const { return static_cast<int>(running.size()) + queued_count(); }

int LinkState::queued_count() const {
  int n = 0;
  for (const auto& lane : lanes) n += static_cast<int>(lane.queue.size());
  return n;
}

Simulation::Simulation(const Scenario& scenario, std::uint64_t seed, SimOptions options)
    : scenario_(&scenario), options_(options), compliance_rng_(make_stream(seed, kComplianceStream)) {
  const Network& net = scenario.network;
  const std::size_t n_od = scenario.ods.size();
  demand_rng_.reserve(n_od);
  for (std::size_t od = 0; od < n_od; ++od) {
    demand_rng_.push_back(make_stream(seed, kDemandStream, static_cast<std::uint32_t>(od)));
    predefined_.push_back(predefined_route(scenario, static_cast<int>(od)));
  }
  pending_.assign(n_od, 0);
  links_.resize(net.edges.size());
  for (std::size_t e = 0; e < net.edges.size(); ++e) links_[e].lanes.resize(net.edges[e].lanes);
  signals_.resize(net.nodes.size());
  metrics_.arrived_in_step.assign(n_od, 0);
  metrics_.arrived_per_od.assign(n_od, 0);
}

Simulation init_sim(const Scenario& scenario, std::uint64_t seed, SimOptions options) {
  return Simulation(scenario, seed, options);
}

bool operator==(const Simulation& a, const Simulation& b) {
  return a.scenario_ == b.scenario_ && a.clock_ == b.clock_ && a.demand_rng_ == b.demand_rng_ &&
         a.compliance_rng_ == b.compliance_rng_ && a.pending_ == b.pending_ && a.vehicles_ == b.vehicles_ &&
         a.links_ == b.links_ && a.signals_ == b.signals_ && a.metrics_ == b.metrics_ &&
         a.in_network_ == b.in_network_;
}

void Simulation::log(int tick, const char* kind, const VehicleState& v, NodeIdx node) const {
  if (!options_.event_log) return;
  const Network& net = scenario_->network;
  *options_.event_log << tick << ',' << kind << ',' << v.id << ','
                      << (v.edge == kNone ? std::string() : net.edges[v.edge].id) << ','
                      << (node == kNone ? std::string() : net.nodes[node].id) << '\n';
}

void Simulation::refresh_movement(VehicleState& v) {
  const Network& net = scenario_->network;
  const Route& route = scenario_->ods[v.od].routes[v.route];
  v.movement = kNone;
  v.lane = kNone;
  if (v.position + 1 >= static_cast<int>(route.edges.size())) return;
  const NodeIdx head = net.edges[v.edge].to;
  v.movement = net.nodes[head].movement_index(v.edge, route.edges[v.position + 1]);
  if (v.movement == kNone) throw std::logic_error("route uses a movement missing from node " + net.nodes[head].id);
  v.lane = net.nodes[head].movements[v.movement].lane;
}

void Simulation::enter_edge(VehicleState& v, int position, int now) {
  const Route& route = scenario_->ods[v.od].routes[v.route];
  v.position = position;
  v.edge = route.edges[position];
  v.phase = TravelPhase::Running;
  v.exit_tick = now + scenario_->network.edges[v.edge].free_flow_ticks();
  v.stop_time = -1;
  refresh_movement(v);
  links_[v.edge].running.push_back(v.id);
}

void Simulation::arrive(VehicleState& v, int now) {
  const Network& net = scenario_->network;
  v.phase = TravelPhase::Arrived;
  v.arrival_time = now + 1;
  v.distance += net.edges[v.edge].length;
  const double travel = v.arrival_time - v.spawn_time;
  const double free_flow = route_free_flow_time(net, scenario_->ods[v.od].routes[v.route]);
  metrics_.arrived += 1;
  metrics_.arrived_in_step[v.od] += 1;
  metrics_.arrived_per_od[v.od] += 1;
  metrics_.delay_sum += travel - free_flow;
  metrics_.travel_time_sum += travel;
  metrics_.distance_sum += v.distance;
  --in_network_;
  log(now, "arrive", v, net.edges[v.edge].to);
}

int Simulation::inject_vehicle(int od, int route, int position, int remaining, bool compliant) {
  VehicleState v;
  v.id = static_cast<int>(vehicles_.size());
  v.od = od;
  v.route = route;
  v.compliant = compliant;
  v.spawn_time = clock_;
  vehicles_.push_back(v);
  VehicleState& ref = vehicles_.back();
  const Route& r = scenario_->ods[od].routes[route];
  ref.position = position;
  ref.edge = r.edges[position];
  refresh_movement(ref);
  if (remaining > 0) {
    ref.phase = TravelPhase::Running;
    ref.exit_tick = clock_ + remaining - 1;
    auto& running = links_[ref.edge].running;
    auto it = std::upper_bound(running.begin(), running.end(), ref.exit_tick,
                               [&](int tick, int id) { return tick < vehicles_[id].exit_tick; });
    running.insert(it, ref.id);
  } else {
    if (ref.lane == kNone) throw std::invalid_argument("cannot queue a vehicle on its final edge");
    ref.phase = TravelPhase::Queued;
    ref.stop_time = clock_;
    links_[ref.edge].lanes[ref.lane].queue.push_back(ref.id);
  }
  ++metrics_.spawned;
  ++in_network_;
  return ref.id;
}

void Simulation::remove_vehicle(int id) {
  VehicleState& v = vehicles_.at(id);
  LinkState& link = links_[v.edge];
  std::erase(link.running, id);
  for (auto& lane : link.lanes) std::erase(lane.queue, id);
  v.phase = TravelPhase::Arrived;  // gone, but never counted as arrived
}

bool Simulation::movement_permitted(NodeIdx n, int movement) const {
  const Node& node = scenario_->network.nodes[n];
  if (node.kind != NodeKind::Signalized) return true;
  const SignalState& s = signals_[n];
  return !s.in_transition() && node.phases[s.active].permits(movement);
}

bool Simulation::lane_green(NodeIdx n, EdgeIdx e, int lane) const {
  const Node& node = scenario_->network.nodes[n];
  for (std::size_t k = 0; k < node.movements.size(); ++k) {
    const Movement& m = node.movements[k];
    if (m.in == e && m.lane == lane && movement_permitted(n, static_cast<int>(k))) return true;
  }
  return false;
}

StepEvents Simulation::step() {
  if (finished()) throw std::logic_error("step past the end of the episode");
  const Network& net = scenario_->network;
  const int now = clock_;
  StepEvents events;

  // (a) spawning
  for (std::size_t od = 0; od < scenario_->ods.size(); ++od) {
    const ODPair& pair = scenario_->ods[od];
    const double rate = pair.peak_flow * options_.demand_factor *
                        scenario_->profile_of(pair).ratio(static_cast<double>(now)) / 3600.0;
    const double u = demand_rng_[od].uniform();
    const double whole = std::floor(rate);
    const int hits = static_cast<int>(whole) + (u < rate - whole ? 1 : 0);
    metrics_.generated += hits;
    pending_[od] += hits;
    const EdgeIdx first = pair.routes[predefined_[od]].edges.front();
    while (pending_[od] > 0 && links_[first].vehicle_count() < net.jam_capacity(first)) {
      VehicleState v;
      v.id = static_cast<int>(vehicles_.size());
      v.od = static_cast<int>(od);
      v.route = predefined_[od];
      v.compliant = compliance_rng_.uniform() < options_.compliance;
      v.spawn_time = now;
      vehicles_.push_back(v);
      // A vehicle entering at tick `now` is also decremented in (b) of this tick.
      enter_edge(vehicles_.back(), 0, now - 1);
      --pending_[od];
      ++metrics_.spawned;
      ++in_network_;
      events.spawned.push_back(v.id);
      log(now, "spawn", vehicles_.back(), net.edges[first].from);
    }
  }

  // (b) running vehicles reach the stop line
  for (std::size_t e = 0; e < links_.size(); ++e) {
    LinkState& link = links_[e];
    while (!link.running.empty() && vehicles_[link.running.front()].exit_tick <= now) {
      VehicleState& v = vehicles_[link.running.front()];
      link.running.pop_front();
      if (v.movement == kNone) {
        arrive(v, now);
        events.arrived.push_back(v.id);
        continue;
      }
      v.phase = TravelPhase::Queued;
      v.stop_time = now;
      link.lanes[v.lane].queue.push_back(v.id);
      log(now, "queue", v, net.edges[e].to);
    }
  }

  // (c) discharge of permitted movements
  for (std::size_t n = 0; n < net.nodes.size(); ++n) {
    const Node& node = net.nodes[n];
    if (node.kind == NodeKind::External) continue;
    for (EdgeIdx in : node.in) {
      const Edge& edge = net.edges[in];
      for (int l = 0; l < edge.lanes; ++l) {
        LaneState& lane = links_[in].lanes[l];
        if (!lane_green(static_cast<NodeIdx>(n), in, l)) {
          lane.credit = 0.0;
          continue;
        }
        lane.credit += edge.saturation;
        while (lane.credit >= 1.0 && !lane.queue.empty()) {
          VehicleState& v = vehicles_[lane.queue.front()];
          if (!movement_permitted(static_cast<NodeIdx>(n), v.movement)) break;
          const Route& route = scenario_->ods[v.od].routes[v.route];
          const int next_pos = v.position + 1;
          const EdgeIdx next = route.edges[next_pos];
          const bool exits = next_pos + 1 == static_cast<int>(route.edges.size()) &&
                             net.nodes[net.edges[next].to].kind == NodeKind::External;
          if (!exits && links_[next].vehicle_count() >= net.jam_capacity(next)) break;
          lane.queue.pop_front();
          lane.credit -= 1.0;
          events.moves.push_back({static_cast<NodeIdx>(n), v.movement, v.id});
          log(now, "discharge", v, static_cast<NodeIdx>(n));
          if (exits) {
            arrive(v, now);
            events.arrived.push_back(v.id);
          } else {
            v.distance += edge.length;
            enter_edge(v, next_pos, now);
          }
        }
        lane.credit = std::min(lane.credit, 1.0);
      }
    }
  }

  // (d) waiting timers
  for (LinkState& link : links_) {
    for (LaneState& lane : link.lanes) {
      lane.step_wait += static_cast<double>(lane.queue.size());
      for (int id : lane.queue) {
        vehicles_[id].cumulative_wait += 1.0;
        vehicles_[id].step_wait += 1.0;
      }
    }
  }

  // (e) phase transitions
  for (SignalState& s : signals_) {
    if (s.transition_remaining > 0 && --s.transition_remaining == 0) s.active = s.pending;
  }

  ++clock_;
  return events;
}

void Simulation::advance(int ticks) {
  for (int t = 0; t < ticks && !finished(); ++t) step();
}

void Simulation::begin_control_step() {
  const Network& net = scenario_->network;
  for (LinkState& link : links_) {
    for (LaneState& lane : link.lanes) {
      lane.step_wait = 0.0;
      for (int id : lane.queue) vehicles_[id].step_wait = 0.0;
    }
    for (int id : link.running) vehicles_[id].step_wait = 0.0;
  }
  std::ranges::fill(metrics_.arrived_in_step, 0);
  for (NodeIdx n : scenario_->signal_agents) {
    for (EdgeIdx e : net.nodes[n].in) {
      metrics_.queue_sum += links_[e].queued_count();
      ++metrics_.queue_samples;
    }
  }
}

void Simulation::set_phase(NodeIdx node, int phase) {
  const Node& n = scenario_->network.nodes.at(node);
  if (n.kind != NodeKind::Signalized) throw std::invalid_argument("set_phase on unsignalized node " + n.id);
  if (phase < 0 || phase >= static_cast<int>(n.phases.size())) {
    throw std::out_of_range("unknown phase " + std::to_string(phase) + " at node " + n.id);
  }
  SignalState& s = signals_[node];
  const int target = s.in_transition() ? s.pending : s.active;
  if (phase == target) return;
  s.pending = phase;
  s.transition_remaining = static_cast<int>(std::lround(scenario_->transition));
  if (s.transition_remaining == 0) s.active = phase;
}

void Simulation::assign_route(const RoutingAgentPlacement& ra, int choice) {
  if (choice < 0 || choice >= static_cast<int>(ra.routes.size())) {
    throw std::out_of_range("route choice " + std::to_string(choice) + " not feasible for " + ra.name);
  }
  const int route = ra.routes[choice];
  const Route& r = scenario_->ods[ra.od].routes[route];
  const int position = r.position_of(ra.upstream);
  if (position == kNone) throw std::logic_error("route does not pass the upstream edge of " + ra.name);
  for (int id : links_[ra.upstream].running) {
    VehicleState& v = vehicles_[id];
    if (v.od != ra.od || !v.compliant || v.route == route) continue;
    v.route = route;
    v.position = position;
    refresh_movement(v);
  }
}

int measure_wave(const Simulation& sim, NodeIdx, const ApproachLane& lane) {
  const LinkState& link = sim.link(lane.edge);
  int count = static_cast<int>(link.lanes[lane.lane].queue.size());
  for (int id : link.running) {
    if (sim.vehicles()[id].lane == lane.lane) ++count;
  }
  return count;
}

double measure_wait(const Simulation& sim, NodeIdx, const ApproachLane& lane) {
  return sim.link(lane.edge).lanes[lane.lane].step_wait;
}

double measure_first_wait(const Simulation& sim, NodeIdx, const ApproachLane& lane) {
  const auto& queue = sim.link(lane.edge).lanes[lane.lane].queue;
  if (queue.empty()) return 0.0;
  return static_cast<double>(sim.clock() - sim.vehicles()[queue.front()].stop_time);
}

int count_arrival_candidates(const Simulation& sim, const RoutingAgentPlacement& ra) {
  int count = 0;
  for (int id : sim.link(ra.upstream).running) {
    if (sim.vehicles()[id].od == ra.od) ++count;
  }
  return count;
}

int count_downstream(const Simulation& sim, EdgeIdx edge) { return sim.link(edge).vehicle_count(); }

long arrived_count(const Simulation& sim, int od) { return sim.metrics().arrived_in_step.at(od); }

bool conservation_check(const Simulation& sim) {
  long present = 0;
  for (std::size_t e = 0; e < sim.scenario().network.edges.size(); ++e) present += sim.link(static_cast<EdgeIdx>(e)).vehicle_count();
  const auto& m = sim.metrics();
  return m.spawned == present + m.arrived && present == sim.in_network();
}

std::string metrics_json(const Simulation& sim) {
  const auto& m = sim.metrics();
  nlohmann::ordered_json j;
  j["clock"] = sim.clock();
  j["generated"] = m.generated;
  j["departed"] = m.spawned;
  j["arrived"] = m.arrived;
  j["in_network"] = sim.in_network();
  j["average_delay_s"] = m.arrived ? m.delay_sum / static_cast<double>(m.arrived) : 0.0;
  j["average_speed_mps"] = m.travel_time_sum > 0 ? m.distance_sum / m.travel_time_sum : 0.0;
  j["average_queue_veh"] = m.queue_samples ? m.queue_sum / static_cast<double>(m.queue_samples) : 0.0;
  j["arrived_per_od"] = m.arrived_per_od;
  return j.dump(2);
}

}  // namespace sigroute
