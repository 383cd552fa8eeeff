#pragma once

#include <cstdint>
#include <vector>

#include "siglab/rng.hpp"
#include "siglab/scenario.hpp"
#include "siglab/sim.hpp"

namespace siglab {

class SimError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Discrete-time point-queue simulator.
///
/// Time advances in 1 s steps, but inside a step service is apportioned
/// exactly across the program entries overlapping it, so controllers may emit
/// programs ending at arbitrary instants. A lane discharges at the saturation
/// rate while its phase is lit and keeps discharging through the clearance
/// interval that follows that phase (vehicles already rolling clear the
/// junction); lanes of every other phase hold. In fluid mode arrivals flow
/// continuously and service absorbs them within the segment; in stochastic
/// mode queues are integers, arrivals are Bernoulli draws at each whole
/// second, and departing vehicles sample their next lane from the routing row.
///
/// Runs are deterministic: demand uses one counter-based stream per lane,
/// routing one per junction, and all state updates are applied in a fixed
/// order, so a (scenario, seed) pair yields byte-identical results whether or
/// not the per-junction loops run on OpenMP threads.
class Engine {
 public:
  struct Options {
    bool parallel = false;  // evaluate junctions on OpenMP threads inside a step
  };

  Engine(const Scenario& scenario, std::uint64_t seed)
      : Engine(scenario, seed, Options()) {}
  Engine(const Scenario& scenario, std::uint64_t seed, Options options);

  /// Advances dt seconds (default one tick; larger dt is substepped at 1 s).
  void step(double dt = 1.0);

  /// Sensor view of one junction: queues saturated at each lane's sensor cap,
  /// plus one-hop downstream measurements when its controller needs them.
  Measurement measure(int junction) const;

  /// Steps until demand has ended and the network is empty, or until the hard
  /// cap is reached (the run is then flagged infinite).
  RunResult run();

  const SimState& state() const { return state_; }
  double total_queue() const;
  const std::vector<std::vector<double>>& cycle_lengths() const {
    return cycle_lengths_;
  }

  /// generated - exited - in-network; exactly 0 in stochastic mode, fp noise
  /// in fluid mode.
  double conservation_error() const;

 private:
  Measurement make_measurement(int junction, double t) const;
  void refresh_programs(double t);
  void advance_segment(double t, double t_end);
  void stochastic_arrivals(long long second);
  void add_generated(double amount);
  void add_exited(double amount);

  const Scenario* scenario_;
  std::uint64_t seed_;
  Options options_;
  SimState state_;

  std::vector<std::vector<std::vector<int>>> phase_lanes_;  // junction, phase, lane ids
  std::vector<std::vector<int>> downstream_;  // junction -> measured one-hop lanes
  std::vector<int> stub_lanes_;               // lanes owned by no junction
  std::vector<int> demand_lanes_;             // lanes with positive arrival rate
  std::vector<RngStream> routing_rng_;        // per junction, then per stub lane
  std::vector<std::vector<double>> cycle_lengths_;

  // scratch buffers reused across segments
  std::vector<double> outflow_;
  std::vector<double> credit_;      // stochastic service credit
  std::vector<char> served_;
  std::vector<char> served_prev_;
  std::vector<int> expired_;

  double kahan_generated_ = 0.0;
  double kahan_exited_ = 0.0;
};

}  // namespace siglab
