#pragma once

#include <array>
#include <map>
#include <string>
#include <vector>

#include "siglab/controllers.hpp"
#include "siglab/core.hpp"
#include "siglab/sim.hpp"

namespace siglab {

/// Per-junction turning probabilities; must sum to 1.
struct TurnSpec {
  double left = 0.2;
  double straight = 0.6;
  double right = 0.2;

  void validate() const;

  bool operator==(const TurnSpec&) const = default;
};

struct ControllerTable {
  ControllerConfig fallback;
  std::map<int, ControllerConfig> per_junction;

  const ControllerConfig& for_junction(int id) const {
    auto it = per_junction.find(id);
    return it == per_junction.end() ? fallback : it->second;
  }

  bool operator==(const ControllerTable&) const = default;
};

/// One reproducible experiment: the plant, two routing matrices (ground truth
/// and what MaxPressure believes), demand, service, controllers and horizons.
struct Scenario {
  Network network;
  RoutingMatrix routing;
  RoutingMatrix controller_routing;
  DemandModel demand;
  ServiceModel service;
  ControllerTable controllers;
  double hard_cap = 0.0;  // 0 = 10 * generation_horizon
  std::vector<double> initial_queues;
  std::map<std::string, std::string> meta;

  double effective_hard_cap() const;
  std::vector<std::string> validate() const;

  bool operator==(const Scenario&) const = default;
};

class ScenarioError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

enum class Side { North = 0, South = 1, East = 2, West = 3 };
enum class QueueRole { Through = 0, ThroughRight = 1, LeftPocket = 2 };

struct ApproachInfo {
  Side side = Side::North;
  int width = 1;          // physical lanes per direction on this street
  bool boundary = false;  // fed from outside the grid
  std::vector<int> lanes; // global ids: [Through (wide only)], ThroughRight, LeftPocket
};

/// Grid layout with movement-class queues: every approach carries a left-turn
/// pocket plus one through+right queue (narrow street) or an inner through
/// queue and an outer through+right queue (wide street). Street widths
/// alternate: odd-indexed streets are one lane per direction, even-indexed two.
struct ManhattanGrid {
  int rows = 0;
  int cols = 0;
  Network network;
  std::vector<std::array<ApproachInfo, 4>> approaches;  // per junction, by Side

  struct QueueInfo {
    int junction = 0;
    Side side = Side::North;
    QueueRole role = QueueRole::ThroughRight;
  };
  std::vector<QueueInfo> queues;  // per lane
};

ManhattanGrid make_manhattan_grid(int rows, int cols, double clearance_time = 5.0,
                                  double sensor_range_m = 50.0,
                                  double vehicle_length_m = 7.5);

/// How a straight flow of mass p_straight splits across n through lanes when
/// the outermost lane also carries the right-turn flow p_right: vehicles join
/// the least-loaded lane, so expected loads equalize where possible.
std::vector<double> straight_lane_split(double p_straight, double p_right,
                                        int n_through);

/// Fraction of the flow entering an approach that joins each of its queues,
/// in the approach's lane order.
std::vector<double> entry_fractions(const ApproachInfo& approach,
                                    const TurnSpec& spec);

/// Compiles turn probabilities and lane choice into a per-lane routing matrix.
/// Interior rows sum to 1; rows that leave the grid carry the exit deficit.
RoutingMatrix derive_routing(const ManhattanGrid& grid, const TurnSpec& spec);

/// Full Manhattan experiment: stochastic Bernoulli(delta) demand on boundary
/// approaches, four orthogonal phases per junction, fixed-time plan
/// 30/15/30/15 s with 5 s clearances (110 s cycle).
Scenario build_manhattan(int rows, int cols, double delta,
                         const TurnSpec& spec = TurnSpec{},
                         const TurnSpec* believed_spec = nullptr);

/// Two-lane junction with one phase per lane, fluid arrivals lambda on both
/// lanes, unit saturation, unbounded sensors, initial queues (initial, 0) and
/// a shorted-cycle allocation controller.
Scenario build_isolated_junction(double lambda, double kappa, double t_w,
                                 double w_bar, double initial);

Scenario parse_scenario(const std::string& text);
std::string serialize_scenario(const Scenario& scenario);
std::string scenario_hash(const Scenario& scenario);

}  // namespace siglab
