#pragma once

#include <map>
#include <optional>
#include <string>
#include <string_view>

#include "siglab/core.hpp"
#include "siglab/gpa.hpp"

namespace siglab {

enum class ControllerKind { GpaFull, GpaShorted, MaxPressure, FixedTime, PropFair };

std::string to_string(ControllerKind kind);
std::optional<ControllerKind> controller_kind_from(std::string_view name);

struct ControllerConfig {
  ControllerKind kind = ControllerKind::GpaShorted;
  GpaParams gpa;                     // gpa-full / gpa-shorted
  double mp_duration = 10.0;         // max-pressure phase hold d [s]
  std::vector<double> ft_durations;  // fixed-time per-phase green [s]
  double pf_cycle = 110.0;           // prop-fair fixed cycle [s]
  double min_green = 0.0;            // optional floor on emitted greens; 0 = off

  /// Checks the fields of the selected variant against a junction.
  std::vector<std::string> validate(const Junction& junction) const;

  bool operator==(const ControllerConfig&) const = default;
};

/// What a controller is allowed to see: the sensor-saturated queues of its own
/// junction, and (for MaxPressure only) the measured queues one hop downstream.
struct Measurement {
  int junction = 0;
  double t = 0.0;
  std::vector<double> x_hat;               // local lanes, junction order
  std::map<int, double> downstream_x_hat;  // keyed by global lane id
};

SignalProgram gpa_full_program(const Measurement& m, const Junction& junction,
                               const ControllerConfig& cfg);

SignalProgram gpa_shorted_program(const Measurement& m, const Junction& junction,
                                  const ControllerConfig& cfg);

/// Pressure of one phase: sum over its lanes of (own queue - routing-weighted
/// downstream queues). Downstream mass that exits the network contributes 0.
double phase_pressure(const Measurement& m, const Junction& junction,
                      const RoutingMatrix& believed, int phase);

SignalProgram maxpressure_program(const Measurement& m, const Junction& junction,
                                  const ControllerConfig& cfg,
                                  const RoutingMatrix& believed);

SignalProgram fixed_time_program(double t, const Junction& junction,
                                 const ControllerConfig& cfg);

SignalProgram prop_fair_program(const Measurement& m, const Junction& junction,
                                const ControllerConfig& cfg);

/// Uniform entry point used by the simulator.
SignalProgram make_program(const Measurement& m, const Junction& junction,
                           const ControllerConfig& cfg,
                           const RoutingMatrix& believed);

}  // namespace siglab
