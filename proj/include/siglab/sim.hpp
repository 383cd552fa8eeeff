#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "siglab/core.hpp"

namespace siglab {

enum class SimMode { Fluid, Stochastic };

struct DemandModel {
  SimMode mode = SimMode::Fluid;
  /// Demand stops after this many seconds; infinity keeps it running until
  /// the hard cap.
  double generation_horizon = 3600.0;

  bool operator==(const DemandModel&) const = default;
};

struct ServiceModel {
  double saturation_rate = 1.0;  // veh/s per lane under green
  double vehicle_length = 7.5;   // m per queued vehicle, for sensor-cap conversion

  bool operator==(const ServiceModel&) const = default;
};

/// Mutable simulation state. In fluid mode queues are reals; in stochastic
/// mode they hold exact integers.
struct SimState {
  double t = 0.0;
  std::vector<double> x;
  std::vector<SignalProgram> programs;  // per junction
  double cum_vehicle_seconds = 0.0;
  double generated = 0.0;
  double exited = 0.0;
  long long blocked_events = 0;
};

struct RunResult {
  /// Total queue sampled once per second; index is the timestamp, index 0 is
  /// the initial state.
  std::vector<double> queue_series;
  double ttt_hours = 0.0;
  bool infinite = false;  // run hit the hard cap with vehicles still inside
  long long blocked_events = 0;
  std::vector<std::vector<double>> cycle_lengths;  // per junction, per program
  std::uint64_t seed = 0;
  std::string scenario_hash;

  double mean_cycle_s() const;

  /// Canonical byte-stable text dump; equal runs serialize identically.
  std::string serialize() const;
};

/// Total travel time in hours: sum of the per-second samples (excluding the
/// initial one) divided by 3600.
double total_travel_time_hours(const std::vector<double>& queue_series,
                               double dt = 1.0);

/// Non-overlapping window means, timestamped at each window start. Partial
/// trailing windows are averaged over the samples they contain.
std::vector<std::pair<double, double>> aggregate_queue(
    const std::vector<double>& series, double window = 300.0);

/// Shortest round-trip decimal formatting; used everywhere results are
/// written so outputs are byte-identical across runs and machines.
std::string format_double(double v);

}  // namespace siglab
