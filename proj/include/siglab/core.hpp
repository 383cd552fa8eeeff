#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace siglab {

constexpr int kNoJunction = -1;
constexpr double kUnbounded = std::numeric_limits<double>::infinity();

/// One queueing lane. Interior lanes have arrival_rate 0; lanes owned by no
/// junction are exit stubs that discharge continuously.
struct Lane {
  int id = 0;
  int junction = kNoJunction;
  double sensor_cap = kUnbounded;   // max measurable queue [veh]
  std::optional<double> capacity;   // max physical queue [veh]; nullopt = unbounded
  double arrival_rate = 0.0;        // exogenous demand [veh/s]

  bool operator==(const Lane&) const = default;
};

/// Binary phase matrix of one junction: rows are phases, columns are the
/// junction's incoming lanes in the junction's lane order. A lane may appear
/// in several phases; the matrix is orthogonal when every lane appears in
/// exactly one.
class PhaseMatrix {
 public:
  PhaseMatrix() = default;
  PhaseMatrix(int n_phases, int n_lanes)
      : rows_(n_phases, std::vector<std::uint8_t>(n_lanes, 0)) {}

  static PhaseMatrix identity(int n);

  void set(int phase, int lane, bool member = true) {
    rows_.at(phase).at(lane) = member ? 1 : 0;
  }
  bool contains(int phase, int lane) const {
    return rows_.at(phase).at(lane) != 0;
  }
  int n_phases() const { return static_cast<int>(rows_.size()); }
  int n_lanes() const {
    return rows_.empty() ? 0 : static_cast<int>(rows_.front().size());
  }
  bool orthogonal() const;
  std::vector<int> lanes_in_phase(int phase) const;
  int column_sum(int lane) const;

  bool operator==(const PhaseMatrix&) const = default;

 private:
  std::vector<std::vector<std::uint8_t>> rows_;
};

struct Junction {
  int id = 0;
  std::vector<int> lanes;  // global lane ids; order matches phase-matrix columns
  PhaseMatrix phases;
  double clearance_time = 5.0;  // T_w [s]

  int local_index(int lane_id) const;  // -1 when the lane is not incoming here

  bool operator==(const Junction&) const = default;
};

/// Reference to a phase row or to the clearance interval that follows it.
struct PhaseRef {
  int index = 0;
  bool clearance = false;

  bool operator==(const PhaseRef&) const = default;
};

struct ProgramEntry {
  PhaseRef phase;
  double t_end = 0.0;  // absolute end time [s]

  bool operator==(const ProgramEntry&) const = default;
};

class ProgramExpired : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// One controller-emitted schedule: ordered (phase, end-time) entries covering
/// [start, end]. End times are non-decreasing; zero-duration entries are legal
/// and never reported active.
class SignalProgram {
 public:
  SignalProgram() = default;
  SignalProgram(double start, std::vector<ProgramEntry> entries);

  bool empty() const { return entries_.empty(); }
  double start() const { return start_; }

  /// Program end T = max end time. Throws on an empty program.
  double end() const;

  /// The entry with the smallest end time strictly greater than t. Throws
  /// ProgramExpired when t >= end.
  PhaseRef active_phase(double t) const;

  /// End time of the entry active at t (the next switching instant).
  double next_boundary(double t) const;

  std::span<const ProgramEntry> entries() const { return entries_; }
  int phase_entry_count() const;
  double span() const { return empty() ? 0.0 : end() - start_; }

  bool operator==(const SignalProgram&) const = default;

 private:
  double start_ = 0.0;
  std::vector<ProgramEntry> entries_;
};

/// Row-substochastic routing over all lanes. R(l,k) is the fraction of lane
/// l's outflow that joins lane k; missing row mass exits the network.
class RoutingMatrix {
 public:
  RoutingMatrix() = default;
  explicit RoutingMatrix(int n_lanes) : rows_(n_lanes) {}

  int n_lanes() const { return static_cast<int>(rows_.size()); }
  void set(int from, int to, double fraction);
  double at(int from, int to) const;
  const std::vector<std::pair<int, double>>& row(int from) const {
    return rows_.at(from);
  }
  double row_sum(int from) const;

  bool operator==(const RoutingMatrix&) const = default;

 private:
  // each row sorted by target lane id
  std::vector<std::vector<std::pair<int, double>>> rows_;
};

struct Network {
  std::vector<Lane> lanes;
  std::vector<Junction> junctions;

  int lane_count() const { return static_cast<int>(lanes.size()); }
  int junction_count() const { return static_cast<int>(junctions.size()); }

  bool operator==(const Network&) const = default;
};

/// Report-style validation of the static plant; empty result means well-formed.
/// Pass the routing matrix as well to have its rows checked.
std::vector<std::string> validate_network(const Network& net,
                                          const RoutingMatrix* routing = nullptr);

/// Structural checks for controller output: every phase entry is immediately
/// followed by its own clearance entry of duration T_w. A lone clearance hold
/// (idle junction) is tolerated.
std::vector<std::string> program_shape_violations(const SignalProgram& program,
                                                  double clearance_time);

}  // namespace siglab
