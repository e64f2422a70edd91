#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "sigroute/maa2c.hpp"

namespace sigroute {

enum class ControlMode { Joint, SignalOnly, RoutingOnly, FixedBoth };

std::string_view to_string(ControlMode mode);
/// Accepts joint|signal|routing|fixed (and the *_only / fixed_both spellings).
ControlMode parse_control_mode(std::string_view text);

struct EpisodeMetrics {
  long arrived = 0;
  long departed = 0;
  double avg_delay = 0.0;   // s
  double avg_speed = 0.0;   // m/s
  double avg_queue = 0.0;   // veh per signalized approach
  double completion_rate = 1.0;

  friend bool operator==(const EpisodeMetrics&, const EpisodeMetrics&) = default;
};

EpisodeMetrics episode_metrics(const Simulation& sim);

struct EvalReport {
  ControlMode mode = ControlMode::Joint;
  double compliance = 1.0;
  double demand_factor = 1.0;
  std::uint64_t seed = 0;
  std::vector<EpisodeMetrics> episodes;
  EpisodeMetrics mean;  // arithmetic means over episodes

  friend bool operator==(const EvalReport&, const EvalReport&) = default;
};

struct EvalOptions {
  ControlMode mode = ControlMode::Joint;
  int episodes = 10;
  double compliance = 1.0;
  double demand_factor = 1.0;
  std::uint64_t seed = 0;
  std::ostream* event_log = nullptr;
  std::ostream* debug_dump = nullptr;
};

/// Phase for control step `step` of a fixed-time plan: each phase holds for
/// one transition step plus `green_steps` green steps, round robin.
int fixed_time_phase(int step, int phase_count, int green_steps = 6);

/// Greedy evaluation. `ckpt` may be null only for ControlMode::FixedBoth.
EvalReport run_eval(const Checkpoint* ckpt, const Scenario& scenario, const EvalOptions& options);

std::vector<EvalReport> compliance_sweep(const Checkpoint& ckpt, const Scenario& scenario,
                                         const std::vector<double>& rates, EvalOptions options);
std::vector<EvalReport> demand_sweep(const Checkpoint* ckpt, const Scenario& scenario,
                                     const std::vector<double>& factors, EvalOptions options);

std::string report_json(const EvalReport& report);

/// CSV writers. Each overwrites `path`.
void emit_plot_data(const TrainingCurve& curve, const std::filesystem::path& path);
void emit_plot_data(const EvalReport& report, const std::filesystem::path& path);
/// key is "rate" or "factor".
void emit_plot_data(const std::vector<EvalReport>& sweep, std::string_view key, const std::filesystem::path& path);

struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<double>> rows;
};
CsvTable read_csv(const std::filesystem::path& path);

}  // namespace sigroute
