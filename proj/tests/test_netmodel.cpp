#include <gtest/gtest.h>

#include <numeric>

#include "testutil.hpp"

using namespace sigroute;
using namespace sigroute::testing;

namespace {

const ODPair& od_by_index(const Scenario& sc, int index) {
  for (const auto& od : sc.ods) {
    if (od.index == index) return od;
  }
  throw std::out_of_range("no OD " + std::to_string(index));
}

std::vector<std::string> ids(const Scenario& sc, const Route& r) {
  std::vector<std::string> out;
  for (NodeIdx n : r.nodes) out.push_back(sc.network.nodes[n].id);
  return out;
}

const char* kTiny = R"(
[network]
node = A signalized 0 0
node = W external -1 0
node = E external 1 0
node = N external 0 1
link = W A
link = N A
link = A E
[phases]
auto = true
[profiles]
profile = 1 0:1 3600:1
[demand]
)";

}  // namespace

TEST(SiouxFalls, Counts) {
  const Scenario& sc = sioux();
  EXPECT_EQ(sc.signal_agents.size(), 17u);
  EXPECT_EQ(sc.routing_agents.size(), 12u);
  EXPECT_EQ(sc.ods.size(), 26u);
  EXPECT_EQ(sc.control_steps_per_episode(), 720);
  EXPECT_DOUBLE_EQ(sc.episode_length, 3600.0);
  EXPECT_DOUBLE_EQ(sc.control_step, 5.0);
  EXPECT_DOUBLE_EQ(sc.transition, 5.0);
  int priority = 0;
  for (const auto& n : sc.network.nodes) priority += n.kind == NodeKind::Priority;
  EXPECT_EQ(priority, 7);
}

TEST(SiouxFalls, PeakFlowSumMatchesGolden) {
  const Scenario& sc = sioux();
  const double total = std::accumulate(sc.ods.begin(), sc.ods.end(), 0.0,
                                       [](double s, const ODPair& od) { return s + od.peak_flow; });
  EXPECT_DOUBLE_EQ(total, 6780.0);
  EXPECT_NE(std::string(sioux_falls_text()).find("6780 veh/h"), std::string::npos);
}

TEST(SiouxFalls, OdThree) {
  const Scenario& sc = sioux();
  const ODPair& od = od_by_index(sc, 3);
  EXPECT_EQ(sc.network.nodes[od.origin].id, "1");
  EXPECT_EQ(sc.network.nodes[od.destination].id, "7");
  EXPECT_DOUBLE_EQ(od.peak_flow, 360.0);
  ASSERT_EQ(od.routes.size(), 2u);
  EXPECT_EQ(ids(sc, od.routes[0]), (std::vector<std::string>{"1", "3", "4", "5", "6", "8", "7"}));
  EXPECT_EQ(ids(sc, od.routes[1]), (std::vector<std::string>{"1", "3", "4", "5", "9", "8", "7"}));
  EXPECT_EQ(od.routing_agents, std::vector<std::string>{"RA1"});
}

TEST(SiouxFalls, OdThirteenAndNine) {
  const Scenario& sc = sioux();
  const ODPair& od13 = od_by_index(sc, 13);
  EXPECT_DOUBLE_EQ(od13.peak_flow, 480.0);
  EXPECT_EQ(od13.routes.size(), 3u);
  EXPECT_EQ(od13.routing_agents, (std::vector<std::string>{"RA6", "RA7"}));
  EXPECT_EQ(od_by_index(sc, 9).routing_agents, (std::vector<std::string>{"RA3", "RA4"}));
}

TEST(SiouxFalls, LayoutClassesGivePhaseCounts) {
  const Scenario& sc = sioux();
  for (NodeIdx n : sc.signal_agents) {
    const Node& node = sc.network.nodes[n];
    // Gateway connectors are not approaches of the road layout but still feed the node.
    const std::size_t approaches = node.in.size();
    EXPECT_EQ(node.phases.size(), approaches) << node.id;
    EXPECT_GE(approaches, 3u);
    EXPECT_LE(approaches, 5u);
  }
}

TEST(SiouxFalls, PhasesAreConflictFree) {
  const Scenario& sc = sioux();
  for (NodeIdx n : sc.signal_agents) {
    for (const Phase& p : sc.network.nodes[n].phases) {
      ASSERT_FALSE(p.movements.empty());
      for (std::size_t i = 0; i < p.movements.size(); ++i) {
        for (std::size_t j = i + 1; j < p.movements.size(); ++j) {
          EXPECT_FALSE(sc.network.movements_conflict(n, p.movements[i], p.movements[j]));
        }
      }
    }
  }
}

TEST(SiouxFalls, ValidatesCleanly) { EXPECT_TRUE(validate_routes(sioux()).empty()); }

TEST(SiouxFalls, PredefinedRouteOfOdThreeIsFirstListed) {
  const Scenario& sc = sioux();
  for (std::size_t i = 0; i < sc.ods.size(); ++i) {
    if (sc.ods[i].index == 3) EXPECT_EQ(predefined_route(sc, static_cast<int>(i)), 0);
  }
}

TEST(LoadScenario, UnknownNodeInRoute) {
  const std::string text = std::string(kTiny) + "od = 1 W E 100 1 [W A 99 E]\n";
  try {
    parse_scenario(text);
    FAIL() << "expected a validation error";
  } catch (const ScenarioValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("unknown node"), std::string::npos) << e.what();
  }
}

TEST(LoadScenario, EmptyDemand) {
  try {
    parse_scenario(kTiny);
    FAIL() << "expected a validation error";
  } catch (const ScenarioValidationError& e) {
    EXPECT_NE(std::string(e.what()).find("no demand"), std::string::npos) << e.what();
  }
}

TEST(LoadScenario, UnknownKeyCarriesLine) {
  const std::string text = std::string(kTiny) + "od = 1 W E 100 1 [W A E]\n[hyperparameters]\nwarp = 9\n";
  try {
    parse_scenario(text);
    FAIL() << "expected a parse error";
  } catch (const ScenarioParseError& e) {
    EXPECT_EQ(e.line(), 17);
    EXPECT_NE(std::string(e.what()).find("warp"), std::string::npos);
  }
}

TEST(LoadScenario, MissingFile) { EXPECT_THROW(load_scenario("/nonexistent/x.scn"), ScenarioParseError); }

TEST(LoadScenario, EpisodeMustBeMultipleOfControlStep) {
  const std::string text = std::string(kTiny) + "od = 1 W E 100 1 [W A E]\n[hyperparameters]\ncontrol_step = 7\n";
  EXPECT_THROW(parse_scenario(text), ScenarioValidationError);
}

TEST(LoadScenario, ShippedFilesAgreeWithEmbeddedText) {
  const Scenario a = load_scenario(data_path("sioux_falls.scn"));
  EXPECT_EQ(a.routing_agents, sioux().routing_agents);
}

TEST(FlowRatio, ConstantProfile) {
  FlowProfile p{9, {{0, 1.0}, {3600, 1.0}}};
  EXPECT_DOUBLE_EQ(flow_ratio(p, 1000, 3600), 1.0);
}

TEST(FlowRatio, TypeOnePeaksAtDeclaredTime) {
  const FlowProfile& p = sioux().profiles.at(1);
  EXPECT_DOUBLE_EQ(flow_ratio(p, 900, 3600), 1.0);
  EXPECT_DOUBLE_EQ(flow_ratio(p, 0, 3600), 0.4);
  EXPECT_NEAR(flow_ratio(p, 450, 3600), 0.7, 1e-12);
  for (int t = 0; t < 3600; t += 7) {
    for (const auto& [type, prof] : sioux().profiles) {
      const double r = flow_ratio(prof, t, 3600);
      EXPECT_GE(r, 0.0);
      EXPECT_LE(r, 1.0);
    }
  }
}

TEST(FlowRatio, OutsideHorizonThrows) {
  const FlowProfile& p = sioux().profiles.at(4);
  EXPECT_THROW(flow_ratio(p, 3600, 3600), std::out_of_range);
  EXPECT_THROW(flow_ratio(p, -1, 3600), std::out_of_range);
}

TEST(PlaceRoutingAgents, ExampleGrid) {
  const Scenario& sc = grid();
  ASSERT_EQ(sc.routing_agents.size(), 3u);
  const auto& ra1 = sc.routing_agents[0];
  EXPECT_EQ(ra1.name, "RA1");
  EXPECT_EQ(ra1.upstream, edge(sc, "O1", "I1"));
  EXPECT_EQ(ra1.fork, node(sc, "I1"));
  EXPECT_EQ(ra1.routes, (std::vector<int>{0, 1, 2}));
  const auto& ra2 = sc.routing_agents[1];
  EXPECT_EQ(ra2.upstream, edge(sc, "I1", "I2"));
  EXPECT_EQ(ra2.routes, (std::vector<int>{0, 1}));
  const auto& ra3 = sc.routing_agents[2];
  EXPECT_EQ(ra3.upstream, edge(sc, "O2", "I2"));
  EXPECT_EQ(ra3.od, 1);
}

TEST(PlaceRoutingAgents, ExampleGridDownstreamHops) {
  const Scenario& sc = grid();
  const auto& ra2 = sc.routing_agents[1];
  auto hop_of = [&](const std::string& a, const std::string& b) {
    for (auto [e, d] : ra2.downstream) {
      if (e == edge(sc, a, b)) return d;
    }
    return -1;
  };
  EXPECT_EQ(hop_of("I2", "I3"), 0);
  EXPECT_EQ(hop_of("I2", "I5"), 0);
  EXPECT_EQ(hop_of("I3", "I6"), 1);
  EXPECT_EQ(hop_of("I5", "I6"), 1);
  EXPECT_EQ(hop_of("I6", "D1"), 2);
}

TEST(PlaceRoutingAgents, SingleRouteOdHasNone) {
  const Scenario sc = parse_scenario(std::string(kTiny) + "od = 1 W E 100 1 [W A E]\n");
  EXPECT_TRUE(place_routing_agents(sc).empty());
}

TEST(PlaceRoutingAgents, DeterministicAndRoutesPassUpstream) {
  const Scenario& sc = sioux();
  EXPECT_EQ(place_routing_agents(sc), place_routing_agents(sc));
  EXPECT_EQ(place_routing_agents(sc), sc.routing_agents);
  for (const auto& ra : sc.routing_agents) {
    ASSERT_GE(ra.routes.size(), 2u);
    for (int r : ra.routes) EXPECT_NE(sc.ods[ra.od].routes[r].position_of(ra.upstream), kNone) << ra.name;
  }
}

TEST(ValidateRoutes, Diagnostics) {
  Scenario sc = grid();
  Route& r = sc.ods[0].routes[0];
  r.nodes = {node(sc, "O1"), node(sc, "I1"), node(sc, "I3"), node(sc, "I6"), node(sc, "D1")};
  EXPECT_EQ(validate_routes(sc).size(), 1u);  // I1 and I3 are not adjacent

  Scenario sc2 = grid();
  sc2.ods[0].routes[1].nodes.pop_back();
  const auto issues = validate_routes(sc2);
  ASSERT_EQ(issues.size(), 1u);
  EXPECT_NE(issues[0].find("destination"), std::string::npos);
}

TEST(Edge, FreeFlowTicks) {
  Edge e;
  e.length = 278;
  e.speed = 13.9;
  EXPECT_EQ(e.free_flow_ticks(), 20);
  e.length = 300;
  EXPECT_EQ(e.free_flow_ticks(), 22);
}

TEST(Network, JamCapacity) {
  const Scenario& sc = mini();
  EXPECT_EQ(sc.network.jam_capacity(edge(sc, "W", "A")), 80);
  EXPECT_EQ(sc.network.jam_capacity(edge(sc, "A", "P")), 160);
}

TEST(Network, TurnClassification) {
  const Scenario& sc = mini();
  const Node& a = sc.network.nodes[node(sc, "A")];
  const int through = a.movement_index(edge(sc, "W", "A"), edge(sc, "A", "B"));
  const int right = a.movement_index(edge(sc, "W", "A"), edge(sc, "A", "P"));
  ASSERT_NE(through, kNone);
  ASSERT_NE(right, kNone);
  EXPECT_EQ(a.movements[through].turn, TurnKind::Through);
  EXPECT_EQ(a.movements[right].turn, TurnKind::Right);
  EXPECT_EQ(a.movements[through].lane, 1);
  EXPECT_EQ(a.movements[right].lane, 1);
}

TEST(Network, ExplicitPhasesParsed) {
  const Scenario& sc = mini();
  const Node& a = sc.network.nodes[node(sc, "A")];
  ASSERT_EQ(a.phases.size(), 2u);
  EXPECT_EQ(a.phases[0].id, "ew");
  EXPECT_EQ(a.phases[0].movements.size(), 2u);
  EXPECT_EQ(a.phases[1].id, "ns");
}
