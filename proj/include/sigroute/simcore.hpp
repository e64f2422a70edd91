#pragma once

#include <cstdint>
#include <deque>
#include <iosfwd>
#include <vector>

#include "sigroute/netmodel.hpp"
#include "sigroute/rng.hpp"

namespace sigroute {

enum class TravelPhase { Running, Queued, Arrived };

struct VehicleState {
  int id = 0;
  int od = 0;      // position in Scenario::ods
  int route = 0;   // index into ODPair::routes
  bool compliant = true;
  EdgeIdx edge = kNone;
  int position = 0;        // index of `edge` in the route's edge list
  TravelPhase phase = TravelPhase::Running;
  int exit_tick = 0;       // running: tick at which the stop line is reached
  int movement = kNone;    // movement at the head node of `edge`; kNone on the final edge
  int lane = kNone;        // lane serving `movement`
  double cumulative_wait = 0.0;
  double step_wait = 0.0;
  int spawn_time = 0;
  int arrival_time = -1;
  int stop_time = -1;      // tick the vehicle joined its current queue
  double distance = 0.0;   // m

  friend bool operator==(const VehicleState&, const VehicleState&) = default;
};

struct LaneState {
  std::deque<int> queue;
  double credit = 0.0;     // fractional discharge allowance
  double step_wait = 0.0;  // vehicle-seconds queued in this lane during the control step

  friend bool operator==(const LaneState&, const LaneState&) = default;
};

struct LinkState {
  std::deque<int> running;  // ordered by exit tick
  std::vector<LaneState> lanes;

  int vehicle_count() const;
  int queued_count() const;

  friend bool operator==(const LinkState&, const LinkState&) = default;
};

struct SignalState {
  int active = 0;
  int pending = 0;
  int transition_remaining = 0;

  bool in_transition() const { return transition_remaining > 0; }
  friend bool operator==(const SignalState&, const SignalState&) = default;
};

struct MetricsAccumulator {
  std::vector<long> arrived_in_step;  // per OD, current control step
  std::vector<long> arrived_per_od;
  long generated = 0;  // Bernoulli demand hits
  long spawned = 0;    // vehicles that entered the network (departed)
  long arrived = 0;
  double delay_sum = 0.0;
  double distance_sum = 0.0;
  double travel_time_sum = 0.0;
  double queue_sum = 0.0;
  long queue_samples = 0;

  friend bool operator==(const MetricsAccumulator&, const MetricsAccumulator&) = default;
};

struct MovementEvent {
  NodeIdx node = kNone;
  int movement = kNone;
  int vehicle = kNone;
};

struct StepEvents {
  std::vector<int> spawned;
  std::vector<int> arrived;
  std::vector<MovementEvent> moves;
};

struct SimOptions {
  double demand_factor = 1.0;
  double compliance = 1.0;
  std::ostream* event_log = nullptr;  // CSV: tick,kind,vehicle,edge,node
};

/// Point-queue simulator advancing in 1 s ticks. Holds a pointer to the
/// scenario, which must outlive the simulation.
class Simulation {
public:
  Simulation(const Scenario& scenario, std::uint64_t seed, SimOptions options = {});

  const Scenario& scenario() const { return *scenario_; }
  const SimOptions& options() const { return options_; }
  int clock() const { return clock_; }
  bool finished() const { return clock_ >= scenario_->episode_ticks(); }

  StepEvents step();
  void advance(int ticks);

  /// Resets per-control-step accumulators and samples approach queues.
  void begin_control_step();

  void set_phase(NodeIdx node, int phase);

  /// Reroutes the compliant decision-pending vehicles of `ra` onto
  /// ra.routes[choice].
  void assign_route(const RoutingAgentPlacement& ra, int choice);

  const std::vector<VehicleState>& vehicles() const { return vehicles_; }
  const LinkState& link(EdgeIdx e) const { return links_[e]; }
  const SignalState& signal(NodeIdx n) const { return signals_[n]; }
  const MetricsAccumulator& metrics() const { return metrics_; }
  long in_network() const { return in_network_; }
  int pending_demand(int od) const { return pending_[od]; }

  /// Places a vehicle on route `route` of `od` at edge position `position`,
  /// running with `remaining` ticks to the stop line, or queued when
  /// `remaining` is 0. Counts as spawned. For tests and tooling.
  int inject_vehicle(int od, int route, int position, int remaining, bool compliant = true);

  /// Deletes a vehicle without recording an arrival (fault injection).
  void remove_vehicle(int id);

  friend bool operator==(const Simulation& a, const Simulation& b);

private:
  bool movement_permitted(NodeIdx n, int movement) const;
  bool lane_green(NodeIdx n, EdgeIdx e, int lane) const;
  void enter_edge(VehicleState& v, int position, int now);
  void refresh_movement(VehicleState& v);
  void arrive(VehicleState& v, int now);
  void log(int tick, const char* kind, const VehicleState& v, NodeIdx node) const;

  const Scenario* scenario_;
  SimOptions options_;
  int clock_ = 0;
  std::vector<Rng> demand_rng_;  // one stream per OD
  Rng compliance_rng_;
  std::vector<int> predefined_;
  std::vector<int> pending_;
  std::vector<VehicleState> vehicles_;
  std::vector<LinkState> links_;
  std::vector<SignalState> signals_;
  MetricsAccumulator metrics_;
  long in_network_ = 0;
};

Simulation init_sim(const Scenario& scenario, std::uint64_t seed, SimOptions options = {});

// Raw measurements.
int measure_wave(const Simulation& sim, NodeIdx node, const ApproachLane& lane);
double measure_wait(const Simulation& sim, NodeIdx node, const ApproachLane& lane);
double measure_first_wait(const Simulation& sim, NodeIdx node, const ApproachLane& lane);
int count_arrival_candidates(const Simulation& sim, const RoutingAgentPlacement& ra);
int count_downstream(const Simulation& sim, EdgeIdx edge);
long arrived_count(const Simulation& sim, int od);
bool conservation_check(const Simulation& sim);

/// Episode-end metrics snapshot as a JSON document.
std::string metrics_json(const Simulation& sim);

}  // namespace sigroute
