// Scenario text format: INI-like sections holding `key = value` lines.
// See data/README.md for the schema.

#include "sigroute/netmodel.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <functional>
#include <set>
#include <sstream>

namespace sigroute {

namespace {

struct Entry {
  int line = 0;
  std::string key;
  std::string value;
};

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r");
  return std::string(s.substr(first, last - first + 1));
}

std::vector<std::string> split_ws(std::string_view s) {
  std::vector<std::string> out;
  std::istringstream in{std::string(s)};
  std::string tok;
  while (in >> tok) out.push_back(tok);
  return out;
}

double to_double(const Entry& e, const std::string& tok) {
  double v = 0.0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end || !std::isfinite(v)) {
    throw ScenarioParseError(e.line, e.key + ": expected a number, got '" + tok + "'");
  }
  return v;
}

long to_long(const Entry& e, const std::string& tok) {
  long v = 0;
  const auto* end = tok.data() + tok.size();
  auto [ptr, ec] = std::from_chars(tok.data(), end, v);
  if (ec != std::errc{} || ptr != end) {
    throw ScenarioParseError(e.line, e.key + ": expected an integer, got '" + tok + "'");
  }
  return v;
}

bool to_bool(const Entry& e, const std::string& tok) {
  if (tok == "true" || tok == "1" || tok == "yes") return true;
  if (tok == "false" || tok == "0" || tok == "no") return false;
  throw ScenarioParseError(e.line, e.key + ": expected true/false, got '" + tok + "'");
}

using Sections = std::map<std::string, std::vector<Entry>>;

const std::map<std::string, std::set<std::string>>& known_keys() {
  static const std::map<std::string, std::set<std::string>> keys{
      {"network",
       {"default_length", "default_lanes", "default_speed", "default_saturation", "jam_spacing", "node",
        "road", "link", "gateway"}},
      {"phases", {"auto", "phase"}},
      {"profiles", {"profile"}},
      {"demand", {"od"}},
      {"agents", {"ra"}},
      {"hyperparameters",
       {"episode_length", "control_step", "transition", "batch_steps", "gamma", "entropy_sa", "entropy_ra",
        "grad_clip", "learning_rate", "adam_beta1", "adam_beta2", "adam_epsilon", "lstm_units", "fc_sa",
        "fc_ra", "state_clip", "norm_wave", "norm_wait", "norm_arrival", "norm_down", "reward_clip",
        "norm_reward_sa", "norm_reward_ra", "alpha1", "alpha2", "sigma", "delta", "beta_ss", "beta_sr",
        "beta_rs", "total_steps"}},
  };
  return keys;
}

const std::set<std::string>& repeatable_keys() {
  static const std::set<std::string> keys{"node", "road", "link", "gateway", "phase", "profile", "od", "ra"};
  return keys;
}

Sections tokenize(std::string_view text) {
  Sections sections;
  std::string current;
  std::set<std::pair<std::string, std::string>> singles;
  int line_no = 0;
  std::istringstream in{std::string(text)};
  std::string raw;
  while (std::getline(in, raw)) {
    ++line_no;
    if (auto hash = raw.find('#'); hash != std::string::npos) raw.resize(hash);
    const std::string line = trim(raw);
    if (line.empty()) continue;
    if (line.front() == '[' && line.back() == ']' && line.find('=') == std::string::npos) {
      current = trim(std::string_view(line).substr(1, line.size() - 2));
      if (!known_keys().contains(current)) {
        throw ScenarioParseError(line_no, "unknown section [" + current + "]");
      }
      sections[current];
      continue;
    }
    const auto eq = line.find('=');
    if (eq == std::string::npos) throw ScenarioParseError(line_no, "expected 'key = value'");
    if (current.empty()) throw ScenarioParseError(line_no, "entry outside of any section");
    Entry e{line_no, trim(std::string_view(line).substr(0, eq)), trim(std::string_view(line).substr(eq + 1))};
    if (!known_keys().at(current).contains(e.key)) {
      throw ScenarioParseError(line_no, "unknown key '" + e.key + "' in [" + current + "]");
    }
    if (!repeatable_keys().contains(e.key) && !singles.emplace(current, e.key).second) {
      throw ScenarioParseError(line_no, "duplicate key '" + e.key + "'");
    }
    if (e.value.empty()) throw ScenarioParseError(line_no, e.key + ": missing value");
    sections[current].push_back(std::move(e));
  }
  return sections;
}

NodeIdx node_ref(const Network& net, const Entry& e, const std::string& id) {
  if (auto n = net.find_node(id)) return *n;
  throw ScenarioValidationError("line " + std::to_string(e.line) + ": unknown node '" + id + "'");
}

EdgeIdx edge_ref(const Network& net, const Entry& e, const std::string& token) {
  const auto gt = token.find('>');
  if (gt == std::string::npos) throw ScenarioParseError(e.line, "expected edge 'from>to', got '" + token + "'");
  const NodeIdx a = node_ref(net, e, token.substr(0, gt));
  const NodeIdx b = node_ref(net, e, token.substr(gt + 1));
  if (auto edge = net.find_edge(a, b)) return *edge;
  throw ScenarioValidationError("line " + std::to_string(e.line) + ": unknown edge '" + token + "'");
}

void parse_network(const std::vector<Entry>& entries, Network& net) {
  double def_length = 300.0, def_speed = 13.9, def_sat = 0.5;
  int def_lanes = 2;
  for (const Entry& e : entries) {
    if (e.key == "default_length") def_length = to_double(e, e.value);
    else if (e.key == "default_lanes") def_lanes = static_cast<int>(to_long(e, e.value));
    else if (e.key == "default_speed") def_speed = to_double(e, e.value);
    else if (e.key == "default_saturation") def_sat = to_double(e, e.value);
    else if (e.key == "jam_spacing") net.jam_spacing = to_double(e, e.value);
  }
  if (!(net.jam_spacing > 0)) throw ScenarioValidationError("jam_spacing must be positive");

  std::set<std::string> ids;
  for (const Entry& e : entries) {
    if (e.key != "node") continue;
    const auto tok = split_ws(e.value);
    if (tok.size() != 4) throw ScenarioParseError(e.line, "node: expected 'id kind x y'");
    Node node;
    node.id = tok[0];
    if (tok[1] == "signalized") node.kind = NodeKind::Signalized;
    else if (tok[1] == "priority") node.kind = NodeKind::Priority;
    else if (tok[1] == "external") node.kind = NodeKind::External;
    else throw ScenarioParseError(e.line, "node: unknown kind '" + tok[1] + "'");
    node.x = to_double(e, tok[2]);
    node.y = to_double(e, tok[3]);
    if (!ids.insert(node.id).second) throw ScenarioParseError(e.line, "duplicate node '" + node.id + "'");
    net.nodes.push_back(std::move(node));
  }
  net.rebuild_topology();

  std::set<std::pair<NodeIdx, NodeIdx>> seen;
  for (const Entry& e : entries) {
    if (e.key != "road" && e.key != "link") continue;
    const auto tok = split_ws(e.value);
    if (tok.size() < 2) throw ScenarioParseError(e.line, e.key + ": expected 'from to [attr=value...]'");
    Edge proto;
    proto.length = def_length;
    proto.lanes = def_lanes;
    proto.speed = def_speed;
    proto.saturation = def_sat;
    for (std::size_t i = 2; i < tok.size(); ++i) {
      const auto eq = tok[i].find('=');
      if (eq == std::string::npos) throw ScenarioParseError(e.line, "expected attr=value, got '" + tok[i] + "'");
      const std::string k = tok[i].substr(0, eq);
      const std::string v = tok[i].substr(eq + 1);
      if (k == "length") proto.length = to_double(e, v);
      else if (k == "lanes") proto.lanes = static_cast<int>(to_long(e, v));
      else if (k == "speed") proto.speed = to_double(e, v);
      else if (k == "saturation") proto.saturation = to_double(e, v);
      else throw ScenarioParseError(e.line, "unknown edge attribute '" + k + "'");
    }
    if (!(proto.length > 0)) throw ScenarioValidationError("line " + std::to_string(e.line) + ": edge length must be > 0");
    if (proto.lanes < 1) throw ScenarioValidationError("line " + std::to_string(e.line) + ": edge needs >= 1 lane");
    if (!(proto.speed > 0)) throw ScenarioValidationError("line " + std::to_string(e.line) + ": free-flow speed must be > 0");
    if (!(proto.saturation > 0)) throw ScenarioValidationError("line " + std::to_string(e.line) + ": saturation flow must be > 0");
    const NodeIdx a = node_ref(net, e, tok[0]);
    const NodeIdx b = node_ref(net, e, tok[1]);
    if (a == b) throw ScenarioValidationError("line " + std::to_string(e.line) + ": self loop");
    auto add = [&](NodeIdx from, NodeIdx to) {
      if (!seen.emplace(from, to).second) {
        throw ScenarioValidationError("line " + std::to_string(e.line) + ": duplicate edge " +
                                      net.nodes[from].id + ">" + net.nodes[to].id);
      }
      Edge edge = proto;
      edge.from = from;
      edge.to = to;
      edge.id = net.nodes[from].id + ">" + net.nodes[to].id;
      net.edges.push_back(std::move(edge));
    };
    add(a, b);
    if (e.key == "road") add(b, a);
  }
  net.rebuild_topology();

  for (const Entry& e : entries) {
    if (e.key != "gateway") continue;
    const auto tok = split_ws(e.value);
    if (tok.size() != 2) throw ScenarioParseError(e.line, "gateway: expected 'node external'");
    const NodeIdx n = node_ref(net, e, tok[0]);
    const NodeIdx x = node_ref(net, e, tok[1]);
    if (net.nodes[x].kind != NodeKind::External) {
      throw ScenarioValidationError("line " + std::to_string(e.line) + ": gateway '" + tok[1] + "' is not external");
    }
    if (!net.find_edge(n, x) || !net.find_edge(x, n)) {
      throw ScenarioValidationError("line " + std::to_string(e.line) + ": gateway needs edges in both directions");
    }
    net.nodes[n].gateway = x;
  }
}

void parse_phases(const std::vector<Entry>& entries, Network& net) {
  bool automatic = false;
  for (const Entry& e : entries) {
    if (e.key == "auto") automatic = to_bool(e, e.value);
  }
  std::set<NodeIdx> explicit_nodes;
  for (const Entry& e : entries) {
    if (e.key != "phase") continue;
    const auto tok = split_ws(e.value);
    if (tok.size() < 3) throw ScenarioParseError(e.line, "phase: expected 'node id from>to ...'");
    const NodeIdx n = node_ref(net, e, tok[0]);
    Node& node = net.nodes[n];
    if (node.kind != NodeKind::Signalized) {
      throw ScenarioValidationError("line " + std::to_string(e.line) + ": phases on non-signalized node '" + node.id + "'");
    }
    Phase phase;
    phase.id = tok[1];
    for (std::size_t i = 2; i < tok.size(); ++i) {
      const auto gt = tok[i].find('>');
      if (gt == std::string::npos) throw ScenarioParseError(e.line, "expected movement 'from>to', got '" + tok[i] + "'");
      const NodeIdx from = node_ref(net, e, tok[i].substr(0, gt));
      const NodeIdx to = node_ref(net, e, tok[i].substr(gt + 1));
      const auto in = net.find_edge(from, n);
      const auto out = net.find_edge(n, to);
      const int m = (in && out) ? node.movement_index(*in, *out) : kNone;
      if (m == kNone) {
        throw ScenarioValidationError("line " + std::to_string(e.line) + ": no movement " + tok[i] + " at node " + node.id);
      }
      phase.movements.push_back(m);
    }
    std::ranges::sort(phase.movements);
    phase.movements.erase(std::unique(phase.movements.begin(), phase.movements.end()), phase.movements.end());
    for (const Phase& other : node.phases) {
      if (other.id == phase.id) throw ScenarioParseError(e.line, "duplicate phase id '" + phase.id + "'");
    }
    node.phases.push_back(std::move(phase));
    explicit_nodes.insert(n);
  }
  if (automatic) {
    for (std::size_t n = 0; n < net.nodes.size(); ++n) {
      if (net.nodes[n].kind == NodeKind::Signalized && !explicit_nodes.contains(static_cast<NodeIdx>(n))) {
        net.nodes[n].phases = generate_phases(net, static_cast<NodeIdx>(n));
      }
    }
  }
}

void parse_profiles(const std::vector<Entry>& entries, std::map<int, FlowProfile>& profiles) {
  for (const Entry& e : entries) {
    const auto tok = split_ws(e.value);
    if (tok.size() < 2) throw ScenarioParseError(e.line, "profile: expected 'type t:ratio ...'");
    FlowProfile p;
    p.type = static_cast<int>(to_long(e, tok[0]));
    for (std::size_t i = 1; i < tok.size(); ++i) {
      const auto colon = tok[i].find(':');
      if (colon == std::string::npos) throw ScenarioParseError(e.line, "expected 't:ratio', got '" + tok[i] + "'");
      const double t = to_double(e, tok[i].substr(0, colon));
      const double r = to_double(e, tok[i].substr(colon + 1));
      if (r < 0.0 || r > 1.0) throw ScenarioValidationError("line " + std::to_string(e.line) + ": flow ratio outside [0,1]");
      if (!p.points.empty() && t <= p.points.back().first) {
        throw ScenarioValidationError("line " + std::to_string(e.line) + ": profile times must increase");
      }
      p.points.emplace_back(t, r);
    }
    if (!profiles.emplace(p.type, std::move(p)).second) {
      throw ScenarioParseError(e.line, "duplicate profile type");
    }
  }
}

Route make_route(const Network& net, const Entry& e, const std::vector<std::string>& ids) {
  Route route;
  for (const auto& id : ids) route.nodes.push_back(node_ref(net, e, id));
  std::vector<NodeIdx> path = route.nodes;
  if (!path.empty()) {
    const Node& first = net.nodes[path.front()];
    if (first.kind != NodeKind::External && first.gateway != kNone) path.insert(path.begin(), first.gateway);
    const Node& last = net.nodes[path.back()];
    if (last.kind != NodeKind::External && last.gateway != kNone) path.push_back(last.gateway);
  }
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    route.edges.push_back(net.find_edge(path[i], path[i + 1]).value_or(kNone));
  }
  return route;
}

void parse_demand(const std::vector<Entry>& entries, Scenario& sc) {
  std::set<int> indices;
  for (const Entry& e : entries) {
    // od = index origin destination peak profile [n n n] [n n n] ...
    const auto open = e.value.find('[');
    if (open == std::string::npos) throw ScenarioParseError(e.line, "od: no routes given");
    const auto head = split_ws(std::string_view(e.value).substr(0, open));
    if (head.size() != 5) throw ScenarioParseError(e.line, "od: expected 'index origin destination peak profile [route]...'");
    ODPair od;
    od.index = static_cast<int>(to_long(e, head[0]));
    od.origin = node_ref(sc.network, e, head[1]);
    od.destination = node_ref(sc.network, e, head[2]);
    od.peak_flow = to_double(e, head[3]);
    od.profile = static_cast<int>(to_long(e, head[4]));
    if (!(od.peak_flow > 0)) throw ScenarioValidationError("line " + std::to_string(e.line) + ": peak flow must be > 0");
    if (!sc.profiles.contains(od.profile)) {
      throw ScenarioValidationError("line " + std::to_string(e.line) + ": unknown flow profile " + head[4]);
    }
    if (!indices.insert(od.index).second) throw ScenarioParseError(e.line, "duplicate OD index");
    std::string_view rest = std::string_view(e.value).substr(open);
    while (!rest.empty()) {
      const auto lb = rest.find('[');
      if (lb == std::string_view::npos) {
        if (!trim(rest).empty() && trim(rest) != ",") throw ScenarioParseError(e.line, "od: trailing text after routes");
        break;
      }
      if (!trim(rest.substr(0, lb)).empty() && trim(rest.substr(0, lb)) != ",") {
        throw ScenarioParseError(e.line, "od: unexpected text between routes");
      }
      const auto rb = rest.find(']', lb);
      if (rb == std::string_view::npos) throw ScenarioParseError(e.line, "od: unterminated route");
      od.routes.push_back(make_route(sc.network, e, split_ws(rest.substr(lb + 1, rb - lb - 1))));
      rest = rest.substr(rb + 1);
    }
    if (od.routes.empty()) throw ScenarioValidationError("line " + std::to_string(e.line) + ": OD has no route");
    sc.ods.push_back(std::move(od));
  }
}

void parse_hyper(const std::vector<Entry>& entries, Scenario& sc) {
  Hyperparameters& hp = sc.hp;
  auto ints = [](const Entry& e) {
    std::vector<int> v;
    for (const auto& t : split_ws(e.value)) v.push_back(static_cast<int>(to_long(e, t)));
    return v;
  };
  auto range = [](const Entry& e, double& lo, double& hi) {
    const auto t = split_ws(e.value);
    if (t.size() != 2) throw ScenarioParseError(e.line, e.key + ": expected 'lo hi'");
    lo = to_double(e, t[0]);
    hi = to_double(e, t[1]);
    if (!(lo < hi)) throw ScenarioValidationError("line " + std::to_string(e.line) + ": empty range");
  };
  const std::map<std::string, double*> reals{
      {"episode_length", &sc.episode_length}, {"control_step", &sc.control_step},
      {"transition", &sc.transition},         {"gamma", &hp.gamma},
      {"entropy_sa", &hp.entropy_sa},         {"entropy_ra", &hp.entropy_ra},
      {"grad_clip", &hp.grad_clip},           {"learning_rate", &hp.learning_rate},
      {"adam_beta1", &hp.adam_beta1},         {"adam_beta2", &hp.adam_beta2},
      {"adam_epsilon", &hp.adam_epsilon},     {"norm_wave", &hp.norm_wave},
      {"norm_wait", &hp.norm_wait},           {"norm_arrival", &hp.norm_arrival},
      {"norm_down", &hp.norm_down},           {"norm_reward_sa", &hp.norm_reward_sa},
      {"norm_reward_ra", &hp.norm_reward_ra}, {"alpha1", &hp.alpha1},
      {"alpha2", &hp.alpha2},                 {"sigma", &hp.sigma},
      {"delta", &hp.delta},                   {"beta_ss", &hp.beta_ss},
      {"beta_sr", &hp.beta_sr},               {"beta_rs", &hp.beta_rs},
  };
  for (const Entry& e : entries) {
    if (auto it = reals.find(e.key); it != reals.end()) *it->second = to_double(e, e.value);
    else if (e.key == "batch_steps") hp.batch_steps = static_cast<int>(to_long(e, e.value));
    else if (e.key == "lstm_units") hp.lstm_units = static_cast<int>(to_long(e, e.value));
    else if (e.key == "total_steps") hp.total_steps = to_long(e, e.value);
    else if (e.key == "fc_sa") hp.fc_sa = ints(e);
    else if (e.key == "fc_ra") hp.fc_ra = ints(e);
    else if (e.key == "state_clip") range(e, hp.state_clip_lo, hp.state_clip_hi);
    else if (e.key == "reward_clip") range(e, hp.reward_clip_lo, hp.reward_clip_hi);
  }
  auto positive = [](double v, const char* what) {
    if (!(v > 0)) throw ScenarioValidationError(std::string(what) + " must be positive");
  };
  positive(sc.episode_length, "episode_length");
  positive(sc.control_step, "control_step");
  if (sc.transition < 0) throw ScenarioValidationError("transition must be >= 0");
  const double steps = sc.episode_length / sc.control_step;
  if (std::abs(steps - std::round(steps)) > 1e-9 || std::abs(sc.control_step - std::round(sc.control_step)) > 1e-9) {
    throw ScenarioValidationError("episode length must be an integer multiple of the control step");
  }
  if (hp.fc_sa.size() != 4 || hp.fc_ra.size() != 4) throw ScenarioValidationError("fc_sa/fc_ra need 4 layer widths");
  for (int w : hp.fc_sa) positive(w, "fc_sa width");
  for (int w : hp.fc_ra) positive(w, "fc_ra width");
  positive(hp.lstm_units, "lstm_units");
  positive(hp.batch_steps, "batch_steps");
  if (!(hp.gamma > 0 && hp.gamma <= 1)) throw ScenarioValidationError("gamma must lie in (0,1]");
  if (!(hp.adam_beta1 > 0 && hp.adam_beta1 < 1 && hp.adam_beta2 > 0 && hp.adam_beta2 < 1)) {
    throw ScenarioValidationError("Adam decay rates must lie in (0,1)");
  }
  positive(hp.learning_rate, "learning_rate");
  positive(hp.adam_epsilon, "adam_epsilon");
  positive(hp.grad_clip, "grad_clip");
  for (double f : {hp.norm_wave, hp.norm_wait, hp.norm_arrival, hp.norm_down, hp.norm_reward_sa, hp.norm_reward_ra}) {
    positive(f, "normalization factor");
  }
  if (!(hp.sigma > 0 && hp.sigma <= 1)) throw ScenarioValidationError("sigma must lie in (0,1]");
  if (!(hp.delta > 0 && hp.delta < 1)) throw ScenarioValidationError("delta must lie in (0,1)");
}

void check_network(const Scenario& sc) {
  const Network& net = sc.network;
  for (std::size_t n = 0; n < net.nodes.size(); ++n) {
    const Node& node = net.nodes[n];
    if (node.kind == NodeKind::External && !node.phases.empty()) {
      throw ScenarioValidationError("external node '" + node.id + "' has phases");
    }
    if (node.kind != NodeKind::Signalized) continue;
    if (node.in.size() < 2) {
      throw ScenarioValidationError("signalized node '" + node.id + "' needs at least 2 inbound edges");
    }
    if (node.phases.size() < 2) {
      throw ScenarioValidationError("signalized node '" + node.id + "' needs at least 2 phases");
    }
    for (const Phase& p : node.phases) {
      for (std::size_t i = 0; i < p.movements.size(); ++i) {
        for (std::size_t j = i + 1; j < p.movements.size(); ++j) {
          if (net.movements_conflict(static_cast<NodeIdx>(n), p.movements[i], p.movements[j])) {
            throw ScenarioValidationError("phase " + p.id + " at node '" + node.id + "' holds conflicting movements");
          }
        }
      }
    }
  }
}

void check_profiles(const Scenario& sc) {
  for (const auto& [type, p] : sc.profiles) {
    if (p.points.front().first > 0.0 || p.points.back().first < sc.episode_length) {
      throw ScenarioValidationError("profile " + std::to_string(type) + " does not cover the episode horizon");
    }
  }
}

void resolve_agents(const std::vector<Entry>& entries, Scenario& sc) {
  sc.signal_agents.clear();
  for (std::size_t n = 0; n < sc.network.nodes.size(); ++n) {
    if (sc.network.nodes[n].kind == NodeKind::Signalized) sc.signal_agents.push_back(static_cast<NodeIdx>(n));
  }
  sc.routing_agents = place_routing_agents(sc);
  if (!entries.empty()) {
    if (entries.size() != sc.routing_agents.size()) {
      throw ScenarioValidationError("declared " + std::to_string(entries.size()) + " routing agents but the route forks yield " +
                                    std::to_string(sc.routing_agents.size()));
    }
    std::set<std::string> names;
    for (const Entry& e : entries) {
      const auto tok = split_ws(e.value);
      if (tok.size() != 3) throw ScenarioParseError(e.line, "ra: expected 'name od upstream_edge'");
      const int od_index = static_cast<int>(to_long(e, tok[1]));
      const EdgeIdx up = edge_ref(sc.network, e, tok[2]);
      auto it = std::ranges::find_if(sc.routing_agents, [&](const RoutingAgentPlacement& ra) {
        return sc.ods[ra.od].index == od_index && ra.upstream == up;
      });
      if (it == sc.routing_agents.end()) {
        throw ScenarioValidationError("line " + std::to_string(e.line) + ": routing agent " + tok[0] +
                                      " does not sit upstream of a fork of OD " + tok[1]);
      }
      if (!names.insert(tok[0]).second) throw ScenarioParseError(e.line, "duplicate agent name");
      it->name = tok[0];
    }
  }
  for (auto& od : sc.ods) od.routing_agents.clear();
  for (const auto& ra : sc.routing_agents) sc.ods[ra.od].routing_agents.push_back(ra.name);
}

}  // namespace

Scenario parse_scenario(std::string_view text) {
  const Sections sections = tokenize(text);
  auto section = [&](const char* name) -> const std::vector<Entry>& {
    static const std::vector<Entry> empty;
    auto it = sections.find(name);
    return it == sections.end() ? empty : it->second;
  };

  Scenario sc;
  parse_network(section("network"), sc.network);
  if (sc.network.nodes.empty()) throw ScenarioValidationError("network has no nodes");
  parse_phases(section("phases"), sc.network);
  parse_hyper(section("hyperparameters"), sc);
  parse_profiles(section("profiles"), sc.profiles);
  parse_demand(section("demand"), sc);
  if (sc.ods.empty()) throw ScenarioValidationError("no demand: the [demand] section lists no OD pair");
  check_network(sc);
  check_profiles(sc);
  if (auto issues = validate_routes(sc); !issues.empty()) {
    std::string msg = "invalid route: " + issues.front();
    if (issues.size() > 1) msg += " (+" + std::to_string(issues.size() - 1) + " more)";
    throw ScenarioValidationError(msg);
  }
  resolve_agents(section("agents"), sc);
  return sc;
}

Scenario load_scenario(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ScenarioParseError(0, "cannot open scenario file '" + path.string() + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_scenario(buf.str());
}

Scenario build_sioux_falls() { return parse_scenario(sioux_falls_text()); }

}  // namespace sigroute
