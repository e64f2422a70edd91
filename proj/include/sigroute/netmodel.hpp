#pragma once

#include <filesystem>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace sigroute {

using NodeIdx = int;
using EdgeIdx = int;

inline constexpr int kNone = -1;

/// Raised by the scenario parser. Carries the 1-based line number of the
/// offending line (0 when the problem is not tied to a line).
class ScenarioParseError : public std::runtime_error {
public:
  ScenarioParseError(int line, const std::string& what)
      : std::runtime_error(line > 0 ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  int line() const noexcept { return line_; }

private:
  int line_;
};

/// Raised when a parsed scenario violates a type invariant.
class ScenarioValidationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

enum class NodeKind { Signalized, Priority, External };
enum class TurnKind { Left, Through, Right };

std::string_view to_string(NodeKind kind);
std::string_view to_string(TurnKind kind);

/// One (inbound edge -> outbound edge) movement at a node, with the lane of
/// the inbound edge that serves it.
struct Movement {
  EdgeIdx in = kNone;
  EdgeIdx out = kNone;
  TurnKind turn = TurnKind::Through;
  int lane = 0;
};

struct Phase {
  std::string id;
  std::vector<int> movements;  // indices into Node::movements, sorted

  bool permits(int movement) const;
};

struct Node {
  std::string id;
  NodeKind kind = NodeKind::Priority;
  double x = 0.0;
  double y = 0.0;
  std::vector<EdgeIdx> in;
  std::vector<EdgeIdx> out;
  std::vector<Movement> movements;
  std::vector<Phase> phases;
  NodeIdx gateway = kNone;  // attached external node, if any

  /// Movement index for (in, out), or kNone.
  int movement_index(EdgeIdx in_edge, EdgeIdx out_edge) const;
};

struct Edge {
  std::string id;  // "from>to"
  NodeIdx from = kNone;
  NodeIdx to = kNone;
  double length = 300.0;  // m
  int lanes = 2;
  double speed = 13.9;       // m/s
  double saturation = 0.5;   // veh/s per lane

  int free_flow_ticks() const;
  double free_flow_time() const { return length / speed; }
};

/// An inbound lane of a node: the observation unit of a signal agent.
struct ApproachLane {
  EdgeIdx edge = kNone;
  int lane = 0;

  friend bool operator==(const ApproachLane&, const ApproachLane&) = default;
};

class Network {
public:
  std::vector<Node> nodes;
  std::vector<Edge> edges;
  double jam_spacing = 7.5;  // m of storage per queued vehicle

  std::optional<NodeIdx> find_node(std::string_view id) const;
  std::optional<EdgeIdx> find_edge(NodeIdx from, NodeIdx to) const;

  /// Queue storage of an edge in vehicles: lanes * length / jam_spacing.
  int jam_capacity(EdgeIdx e) const;

  /// All inbound lanes of a node ordered by inbound edge, then lane.
  std::vector<ApproachLane> approach_lanes(NodeIdx n) const;

  /// Rebuilds node in/out lists and the movement tables from the edge list.
  void rebuild_topology();

  bool movements_conflict(NodeIdx n, int a, int b) const;

private:
  std::map<std::pair<NodeIdx, NodeIdx>, EdgeIdx> edge_lookup_;
  std::map<std::string, NodeIdx, std::less<>> node_lookup_;
};

/// Phases for a signalized node derived from its layout class.
std::vector<Phase> generate_phases(const Network& net, NodeIdx n);

struct Route {
  std::vector<NodeIdx> nodes;  // as declared, e.g. [1 3 4 5]
  std::vector<EdgeIdx> edges;  // derived, including gateway connectors

  int position_of(EdgeIdx e) const;  // index in edges, or kNone
  std::string label(const Network& net) const;
};

struct FlowProfile {
  int type = 0;
  std::vector<std::pair<double, double>> points;  // (time s, ratio), time ascending

  /// Linear interpolation; clamps to the end points outside the declared range.
  double ratio(double t) const;
};

struct ODPair {
  int index = 0;
  NodeIdx origin = kNone;
  NodeIdx destination = kNone;
  double peak_flow = 0.0;  // veh/h
  int profile = 0;
  std::vector<Route> routes;
  std::vector<std::string> routing_agents;  // filled from placements
};

struct RoutingAgentPlacement {
  std::string name;
  int od = 0;                 // position in Scenario::ods
  EdgeIdx upstream = kNone;   // U_i
  NodeIdx fork = kNone;
  std::vector<int> routes;    // Route_i, indices into ODPair::routes
  /// D_i with hop distance from the fork node.
  std::vector<std::pair<EdgeIdx, int>> downstream;
  /// Nodes on the feasible routes from the fork on, with their hop distance.
  std::vector<std::pair<NodeIdx, int>> route_nodes;

  friend bool operator==(const RoutingAgentPlacement&, const RoutingAgentPlacement&) = default;
};

struct Hyperparameters {
  int batch_steps = 144;
  double gamma = 0.99;
  double entropy_sa = 0.05;
  double entropy_ra = 0.01;
  double grad_clip = 30.0;
  double learning_rate = 2.5e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_epsilon = 1e-8;
  int lstm_units = 128;
  std::vector<int> fc_sa{140, 60, 50, 70};
  std::vector<int> fc_ra{20, 70, 200, 50};
  double state_clip_lo = 0.0;
  double state_clip_hi = 2.0;
  double norm_wave = 2.0;
  double norm_wait = 8.0;
  double norm_arrival = 16.0;
  double norm_down = 7.0;
  double reward_clip_lo = -6.0;
  double reward_clip_hi = 6.0;
  double norm_reward_sa = 400.0;
  double norm_reward_ra = 100.0;
  double alpha1 = 1.0;
  double alpha2 = 1000.0;
  double sigma = 0.5;
  double delta = 0.5;
  double beta_ss = 0.3;
  double beta_sr = 0.1;
  double beta_rs = 0.1;
  long total_steps = 500000;
};

struct Scenario {
  Network network;
  std::vector<ODPair> ods;
  std::map<int, FlowProfile> profiles;
  double episode_length = 3600.0;  // s
  double control_step = 5.0;       // s
  double transition = 5.0;         // s
  std::vector<NodeIdx> signal_agents;
  std::vector<RoutingAgentPlacement> routing_agents;
  Hyperparameters hp;

  int control_steps_per_episode() const;
  int ticks_per_control_step() const;
  int episode_ticks() const;
  const FlowProfile& profile_of(const ODPair& od) const;
};

/// Parses scenario text. Throws ScenarioParseError / ScenarioValidationError.
Scenario parse_scenario(std::string_view text);
Scenario load_scenario(const std::filesystem::path& path);

/// Text of the shipped Sioux Falls scenario file.
std::string_view sioux_falls_text();
Scenario build_sioux_falls();

double flow_ratio(const FlowProfile& profile, double t, double horizon);

/// One RA per node where an OD's remaining route set diverges, on the edge
/// immediately upstream of that node. Ordered by OD, then from origin on.
std::vector<RoutingAgentPlacement> place_routing_agents(const Scenario& scenario);

/// One human-readable diagnostic per route invariant violation.
std::vector<std::string> validate_routes(const Scenario& scenario);

/// Free-flow travel time along a route (connectors included).
double route_free_flow_time(const Network& net, const Route& route);

/// Index of the route with minimum free-flow time; ties go to the first listed.
int predefined_route(const Scenario& scenario, int od);

}  // namespace sigroute
