#include "sigroute/netmodel.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>
#include <sstream>

namespace sigroute {

std::string_view to_string(NodeKind kind) {
  switch (kind) {
    case NodeKind::Signalized: return "signalized";
    case NodeKind::Priority: return "priority";
    case NodeKind::External: return "external";
  }
  return "?";
}

std::string_view to_string(TurnKind kind) {
  switch (kind) {
    case TurnKind::Left: return "left";
    case TurnKind::Through: return "through";
    case TurnKind::Right: return "right";
  }
  return "?";
}

bool Phase::permits(int movement) const {
  return std::binary_search(movements.begin(), movements.end(), movement);
}

int Node::movement_index(EdgeIdx in_edge, EdgeIdx out_edge) const {
  for (std::size_t k = 0; k < movements.size(); ++k) {
    if (movements[k].in == in_edge && movements[k].out == out_edge) return static_cast<int>(k);
  }
  return kNone;
}

int Edge::free_flow_ticks() const {
  // 278 m at 13.9 m/s is exactly 20 ticks; guard against 20.000000001.
  return std::max(1, static_cast<int>(std::ceil(length / speed - 1e-9)));
}

std::optional<NodeIdx> Network::find_node(std::string_view id) const {
  if (auto it = node_lookup_.find(id); it != node_lookup_.end()) return it->second;
  return std::nullopt;
}

std::optional<EdgeIdx> Network::find_edge(NodeIdx from, NodeIdx to) const {
  if (auto it = edge_lookup_.find({from, to}); it != edge_lookup_.end()) return it->second;
  return std::nullopt;
}

int Network::jam_capacity(EdgeIdx e) const {
  const Edge& edge = edges[e];
  return std::max(1, static_cast<int>(std::floor(edge.lanes * edge.length / jam_spacing + 1e-9)));
}

std::vector<ApproachLane> Network::approach_lanes(NodeIdx n) const {
  std::vector<ApproachLane> lanes;
  for (EdgeIdx e : nodes[n].in) {
    for (int l = 0; l < edges[e].lanes; ++l) lanes.push_back({e, l});
  }
  return lanes;
}

namespace {

constexpr double kPi = std::numbers::pi;

double wrap_angle(double a) {
  while (a <= -kPi) a += 2 * kPi;
  while (a > kPi) a -= 2 * kPi;
  return a;
}

double wrap_positive(double a) {
  a = std::fmod(a, 2 * kPi);
  return a < 0 ? a + 2 * kPi : a;
}

// Direction from node `at` toward node `other`.
double bearing(const Network& net, NodeIdx at, NodeIdx other) {
  const Node& a = net.nodes[at];
  const Node& b = net.nodes[other];
  return std::atan2(b.y - a.y, b.x - a.x);
}

TurnKind classify_turn(const Network& net, const Edge& in, const Edge& out) {
  const double heading = bearing(net, in.from, in.to);
  const double exit = bearing(net, out.from, out.to);
  const double phi = wrap_angle(exit - heading);
  constexpr double kThreshold = kPi / 4;
  if (phi > kThreshold) return TurnKind::Left;
  if (phi < -kThreshold) return TurnKind::Right;
  return TurnKind::Through;
}

int lane_for(TurnKind turn, int lanes) {
  if (lanes <= 1) return 0;
  if (lanes == 2) return turn == TurnKind::Left ? 0 : 1;
  switch (turn) {
    case TurnKind::Left: return 0;
    case TurnKind::Through: return 1;
    case TurnKind::Right: return lanes - 1;
  }
  return 0;
}

// True if x lies strictly inside the counter-clockwise arc from a to b.
bool in_arc(double a, double b, double x) {
  const double span = wrap_positive(b - a);
  const double off = wrap_positive(x - a);
  return off > 0.0 && off < span;
}

}  // namespace

void Network::rebuild_topology() {
  node_lookup_.clear();
  edge_lookup_.clear();
  for (std::size_t n = 0; n < nodes.size(); ++n) {
    node_lookup_.emplace(nodes[n].id, static_cast<NodeIdx>(n));
    nodes[n].in.clear();
    nodes[n].out.clear();
    nodes[n].movements.clear();
  }
  for (std::size_t e = 0; e < edges.size(); ++e) {
    const Edge& edge = edges[e];
    edge_lookup_.emplace(std::pair{edge.from, edge.to}, static_cast<EdgeIdx>(e));
    nodes[edge.from].out.push_back(static_cast<EdgeIdx>(e));
    nodes[edge.to].in.push_back(static_cast<EdgeIdx>(e));
  }
  for (Node& node : nodes) {
    if (node.kind == NodeKind::External) continue;
    for (EdgeIdx in : node.in) {
      for (EdgeIdx out : node.out) {
        if (edges[out].to == edges[in].from) continue;  // no U-turns
        const TurnKind turn = classify_turn(*this, edges[in], edges[out]);
        node.movements.push_back({in, out, turn, lane_for(turn, edges[in].lanes)});
      }
    }
  }
}

bool Network::movements_conflict(NodeIdx n, int a, int b) const {
  const Node& node = nodes[n];
  const Movement& ma = node.movements[a];
  const Movement& mb = node.movements[b];
  if (ma.in == mb.in) return false;   // diverging from one approach
  if (ma.out == mb.out) return true;  // merging
  // Right-hand traffic: inbound lanes sit just counter-clockwise of the road
  // axis, outbound lanes just clockwise. Two paths cross iff their chords on
  // a circle around the node interleave.
  constexpr double kOffset = 1e-3;
  auto in_point = [&](const Movement& m) { return bearing(*this, n, edges[m.in].from) + kOffset; };
  auto out_point = [&](const Movement& m) { return bearing(*this, n, edges[m.out].to) - kOffset; };
  const double a1 = in_point(ma), a2 = out_point(ma);
  const double b1 = in_point(mb), b2 = out_point(mb);
  return in_arc(a1, a2, b1) != in_arc(a1, a2, b2);
}

namespace {

bool conflict_free(const Network& net, NodeIdx n, const std::vector<int>& moves) {
  for (std::size_t i = 0; i < moves.size(); ++i) {
    for (std::size_t j = i + 1; j < moves.size(); ++j) {
      if (net.movements_conflict(n, moves[i], moves[j])) return false;
    }
  }
  return true;
}

std::vector<Phase> one_phase_per_approach(const Network& net, NodeIdx n) {
  const Node& node = net.nodes[n];
  std::vector<Phase> phases;
  for (EdgeIdx in : node.in) {
    Phase p;
    for (std::size_t k = 0; k < node.movements.size(); ++k) {
      if (node.movements[k].in == in) p.movements.push_back(static_cast<int>(k));
    }
    if (p.movements.empty()) continue;
    p.id = "P" + std::to_string(phases.size() + 1);
    phases.push_back(std::move(p));
  }
  return phases;
}

}  // namespace

std::vector<Phase> generate_phases(const Network& net, NodeIdx n) {
  const Node& node = net.nodes[n];
  if (node.in.size() != 4) return one_phase_per_approach(net, n);

  std::vector<EdgeIdx> order = node.in;
  std::ranges::sort(order, [&](EdgeIdx a, EdgeIdx b) {
    return wrap_positive(bearing(net, n, net.edges[a].from)) <
           wrap_positive(bearing(net, n, net.edges[b].from));
  });
  const std::array<std::pair<EdgeIdx, EdgeIdx>, 2> pairs{{{order[0], order[2]}, {order[1], order[3]}}};

  std::vector<Phase> phases;
  for (const auto& [a, b] : pairs) {
    Phase through_right;
    Phase left;
    for (std::size_t k = 0; k < node.movements.size(); ++k) {
      const Movement& m = node.movements[k];
      if (m.in != a && m.in != b) continue;
      (m.turn == TurnKind::Left ? left : through_right).movements.push_back(static_cast<int>(k));
    }
    for (Phase* p : {&through_right, &left}) {
      if (p->movements.empty() || !conflict_free(net, n, p->movements)) {
        return one_phase_per_approach(net, n);
      }
      p->id = "P" + std::to_string(phases.size() + 1);
      phases.push_back(std::move(*p));
    }
  }
  return phases;
}

int Route::position_of(EdgeIdx e) const {
  auto it = std::ranges::find(edges, e);
  return it == edges.end() ? kNone : static_cast<int>(it - edges.begin());
}

std::string Route::label(const Network& net) const {
  std::ostringstream out;
  out << '[';
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (i) out << ' ';
    out << (nodes[i] >= 0 ? net.nodes[nodes[i]].id : std::string("?"));
  }
  out << ']';
  return out.str();
}

double FlowProfile::ratio(double t) const {
  if (points.empty()) return 0.0;
  if (t <= points.front().first) return points.front().second;
  if (t >= points.back().first) return points.back().second;
  auto hi = std::ranges::upper_bound(points, t, {}, &std::pair<double, double>::first);
  auto lo = hi - 1;
  const double w = (t - lo->first) / (hi->first - lo->first);
  return lo->second + w * (hi->second - lo->second);
}

double flow_ratio(const FlowProfile& profile, double t, double horizon) {
  if (t < 0.0 || t >= horizon) {
    throw std::out_of_range("flow_ratio: t=" + std::to_string(t) + " outside [0, " +
                            std::to_string(horizon) + ")");
  }
  return profile.ratio(t);
}

int Scenario::control_steps_per_episode() const {
  return static_cast<int>(std::lround(episode_length / control_step));
}

int Scenario::ticks_per_control_step() const { return static_cast<int>(std::lround(control_step)); }

int Scenario::episode_ticks() const { return static_cast<int>(std::lround(episode_length)); }

const FlowProfile& Scenario::profile_of(const ODPair& od) const { return profiles.at(od.profile); }

double route_free_flow_time(const Network& net, const Route& route) {
  double total = 0.0;
  for (EdgeIdx e : route.edges) {
    if (e == kNone) continue;
    if (net.nodes[net.edges[e].to].kind == NodeKind::External) continue;  // exit connector
    total += net.edges[e].free_flow_ticks();
  }
  return total;
}

int predefined_route(const Scenario& scenario, int od) {
  const auto& routes = scenario.ods.at(od).routes;
  int best = 0;
  double best_time = route_free_flow_time(scenario.network, routes.at(0));
  for (std::size_t r = 1; r < routes.size(); ++r) {
    const double t = route_free_flow_time(scenario.network, routes[r]);
    if (t < best_time) {
      best = static_cast<int>(r);
      best_time = t;
    }
  }
  return best;
}

std::vector<std::string> validate_routes(const Scenario& scenario) {
  const Network& net = scenario.network;
  std::vector<std::string> issues;
  for (const ODPair& od : scenario.ods) {
    for (std::size_t r = 0; r < od.routes.size(); ++r) {
      const Route& route = od.routes[r];
      const std::string where = "OD " + std::to_string(od.index) + " route " + route.label(net);
      if (route.nodes.size() < 2) {
        issues.push_back(where + ": fewer than two nodes");
        continue;
      }
      if (route.nodes.front() != od.origin) issues.push_back(where + ": first node is not the origin");
      if (route.nodes.back() != od.destination) {
        issues.push_back(where + ": last node is not the destination");
      }
      for (std::size_t i = 0; i + 1 < route.nodes.size(); ++i) {
        if (!net.find_edge(route.nodes[i], route.nodes[i + 1])) {
          issues.push_back(where + ": no edge " + net.nodes[route.nodes[i]].id + ">" +
                           net.nodes[route.nodes[i + 1]].id);
        }
      }
      std::set<NodeIdx> seen(route.nodes.begin(), route.nodes.end());
      if (seen.size() != route.nodes.size()) issues.push_back(where + ": revisits a node");
    }
  }
  return issues;
}

namespace {

void place_group(const Scenario& scenario, int od_pos, std::vector<int> group,
                 std::vector<RoutingAgentPlacement>& out) {
  const Network& net = scenario.network;
  const auto& routes = scenario.ods[od_pos].routes;
  if (group.size() < 2) return;

  // First edge position where the group's routes disagree.
  std::size_t q = 0;
  for (;; ++q) {
    const auto& first = routes[group[0]].edges;
    bool same = q < first.size();
    for (int r : group) {
      const auto& edges = routes[r].edges;
      if (q >= edges.size() || edges[q] != first[q]) same = false;
    }
    if (!same) break;
  }
  if (q == 0) {
    throw ScenarioValidationError("OD " + std::to_string(scenario.ods[od_pos].index) +
                                  ": routes fork at the origin with no upstream edge");
  }

  RoutingAgentPlacement ra;
  ra.od = od_pos;
  ra.upstream = routes[group[0]].edges[q - 1];
  ra.fork = net.edges[ra.upstream].to;
  ra.routes = group;
  std::map<EdgeIdx, int> edge_hops;
  std::map<NodeIdx, int> node_hops;
  node_hops[ra.fork] = 0;
  for (int r : group) {
    const auto& edges = routes[r].edges;
    for (std::size_t p = q; p < edges.size(); ++p) {
      const int hop = static_cast<int>(p - q);
      auto [it, fresh] = edge_hops.emplace(edges[p], hop);
      if (!fresh) it->second = std::min(it->second, hop);
      const NodeIdx head = net.edges[edges[p]].to;
      if (net.nodes[head].kind != NodeKind::External) {
        auto [nit, nfresh] = node_hops.emplace(head, hop + 1);
        if (!nfresh) nit->second = std::min(nit->second, hop + 1);
      }
    }
  }
  for (auto [e, d] : edge_hops) ra.downstream.emplace_back(e, d);
  std::ranges::stable_sort(ra.downstream, {}, &std::pair<EdgeIdx, int>::second);
  for (auto [n, d] : node_hops) ra.route_nodes.emplace_back(n, d);
  out.push_back(std::move(ra));

  // Partition by the edge leaving the fork and recurse, ordered by first route.
  std::map<EdgeIdx, std::vector<int>> by_edge;
  std::vector<EdgeIdx> edge_order;
  for (int r : group) {
    const EdgeIdx e = routes[r].edges[q];
    if (!by_edge.contains(e)) edge_order.push_back(e);
    by_edge[e].push_back(r);
  }
  for (EdgeIdx e : edge_order) place_group(scenario, od_pos, by_edge[e], out);
}

}  // namespace

std::vector<RoutingAgentPlacement> place_routing_agents(const Scenario& scenario) {
  std::vector<RoutingAgentPlacement> out;
  for (std::size_t od = 0; od < scenario.ods.size(); ++od) {
    std::vector<int> all(scenario.ods[od].routes.size());
    for (std::size_t r = 0; r < all.size(); ++r) all[r] = static_cast<int>(r);
    place_group(scenario, static_cast<int>(od), std::move(all), out);
  }
  for (std::size_t i = 0; i < out.size(); ++i) out[i].name = "RA" + std::to_string(i + 1);
  return out;
}

}  // namespace sigroute
