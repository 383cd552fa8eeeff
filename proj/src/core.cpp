#include "siglab/core.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace siglab {

PhaseMatrix PhaseMatrix::identity(int n) {
  PhaseMatrix p(n, n);
  for (int i = 0; i < n; ++i) p.set(i, i);
  return p;
}

bool PhaseMatrix::orthogonal() const {
  for (int l = 0; l < n_lanes(); ++l)
    if (column_sum(l) != 1) return false;
  return true;
}

std::vector<int> PhaseMatrix::lanes_in_phase(int phase) const {
  std::vector<int> out;
  for (int l = 0; l < n_lanes(); ++l)
    if (contains(phase, l)) out.push_back(l);
  return out;
}

int PhaseMatrix::column_sum(int lane) const {
  int s = 0;
  for (const auto& row : rows_) s += row.at(lane);
  return s;
}

int Junction::local_index(int lane_id) const {
  for (int i = 0; i < static_cast<int>(lanes.size()); ++i)
    if (lanes[i] == lane_id) return i;
  return -1;
}

SignalProgram::SignalProgram(double start, std::vector<ProgramEntry> entries)
    : start_(start), entries_(std::move(entries)) {
  double prev = start_;
  for (const auto& e : entries_) {
    if (e.t_end < prev)
      throw std::invalid_argument("signal program end times must be non-decreasing");
    prev = e.t_end;
  }
}

double SignalProgram::end() const {
  if (entries_.empty()) throw std::invalid_argument("empty signal program");
  return entries_.back().t_end;
}

PhaseRef SignalProgram::active_phase(double t) const {
  // First entry with t_end > t; zero-duration entries are skipped because no
  // t satisfies t < t_end for them once their predecessor has ended.
  auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                             [](double v, const ProgramEntry& e) { return v < e.t_end; });
  if (it == entries_.end()) {
    std::ostringstream msg;
    msg << "signal program expired at t=" << t;
    throw ProgramExpired(msg.str());
  }
  return it->phase;
}

double SignalProgram::next_boundary(double t) const {
  auto it = std::upper_bound(entries_.begin(), entries_.end(), t,
                             [](double v, const ProgramEntry& e) { return v < e.t_end; });
  if (it == entries_.end()) throw ProgramExpired("signal program expired");
  return it->t_end;
}

int SignalProgram::phase_entry_count() const {
  int n = 0;
  for (const auto& e : entries_)
    if (!e.phase.clearance) ++n;
  return n;
}

void RoutingMatrix::set(int from, int to, double fraction) {
  auto& row = rows_.at(from);
  auto it = std::lower_bound(row.begin(), row.end(), to,
                             [](const auto& e, int v) { return e.first < v; });
  if (it != row.end() && it->first == to) {
    it->second = fraction;
  } else {
    row.insert(it, {to, fraction});
  }
}

double RoutingMatrix::at(int from, int to) const {
  const auto& row = rows_.at(from);
  auto it = std::lower_bound(row.begin(), row.end(), to,
                             [](const auto& e, int v) { return e.first < v; });
  return (it != row.end() && it->first == to) ? it->second : 0.0;
}

double RoutingMatrix::row_sum(int from) const {
  double s = 0;
  for (const auto& [to, p] : rows_.at(from)) s += p;
  return s;
}

namespace {

void check_junction(const Network& net, const Junction& j,
                    std::vector<std::string>& out) {
  std::ostringstream id;
  id << "junction " << j.id << ": ";
  if (j.clearance_time <= 0)
    out.push_back(id.str() + "clearance time must be positive");
  if (j.phases.n_lanes() != static_cast<int>(j.lanes.size())) {
    out.push_back(id.str() + "phase matrix column count does not match lane count");
    return;
  }
  for (int i = 0; i < j.phases.n_phases(); ++i) {
    if (j.phases.lanes_in_phase(i).empty()) {
      std::ostringstream m;
      m << id.str() << "phase " << i << " contains no lane";
      out.push_back(m.str());
    }
  }
  for (int l = 0; l < static_cast<int>(j.lanes.size()); ++l) {
    int lane_id = j.lanes[l];
    if (lane_id < 0 || lane_id >= net.lane_count()) {
      std::ostringstream m;
      m << id.str() << "unknown lane " << lane_id;
      out.push_back(m.str());
      continue;
    }
    if (j.phases.column_sum(l) == 0) {
      std::ostringstream m;
      m << id.str() << "lane " << lane_id << " is in no phase";
      out.push_back(m.str());
    }
    if (net.lanes[lane_id].junction != j.id) {
      std::ostringstream m;
      m << id.str() << "lane " << lane_id << " does not name this junction as owner";
      out.push_back(m.str());
    }
  }
}

}  // namespace

std::vector<std::string> validate_network(const Network& net,
                                          const RoutingMatrix* routing) {
  std::vector<std::string> out;
  std::vector<int> owner(net.lane_count(), kNoJunction);
  for (int i = 0; i < net.lane_count(); ++i) {
    const Lane& lane = net.lanes[i];
    std::ostringstream id;
    id << "lane " << lane.id << ": ";
    if (lane.id != i) out.push_back(id.str() + "ids must be dense and ordered");
    if (lane.sensor_cap < 0) out.push_back(id.str() + "sensor cap must be >= 0");
    if (lane.arrival_rate < 0) out.push_back(id.str() + "arrival rate must be >= 0");
    if (lane.capacity && *lane.capacity < 0)
      out.push_back(id.str() + "capacity must be >= 0");
    if (lane.capacity && std::isfinite(*lane.capacity) &&
        std::isfinite(lane.sensor_cap) && lane.sensor_cap > *lane.capacity)
      out.push_back(id.str() + "sensor cap exceeds physical capacity");
  }
  for (int ji = 0; ji < net.junction_count(); ++ji) {
    const Junction& j = net.junctions[ji];
    if (j.id != ji) {
      std::ostringstream m;
      m << "junction " << j.id << ": ids must be dense and ordered";
      out.push_back(m.str());
    }
    check_junction(net, j, out);
    for (int lane_id : j.lanes) {
      if (lane_id < 0 || lane_id >= net.lane_count()) continue;
      if (owner[lane_id] != kNoJunction) {
        std::ostringstream m;
        m << "lane " << lane_id << ": belongs to more than one junction";
        out.push_back(m.str());
      }
      owner[lane_id] = j.id;
    }
  }
  for (int i = 0; i < net.lane_count(); ++i) {
    if (net.lanes[i].junction != kNoJunction && owner[i] == kNoJunction) {
      std::ostringstream m;
      m << "lane " << i << ": names junction " << net.lanes[i].junction
        << " but is not among its incoming lanes";
      out.push_back(m.str());
    }
  }
  if (routing) {
    if (routing->n_lanes() != net.lane_count()) {
      out.push_back("routing: matrix dimension does not match lane count");
    } else {
      for (int l = 0; l < routing->n_lanes(); ++l) {
        for (const auto& [to, p] : routing->row(l)) {
          if (to < 0 || to >= net.lane_count()) {
            std::ostringstream m;
            m << "routing: row " << l << " targets unknown lane " << to;
            out.push_back(m.str());
          }
          if (p < 0 || p > 1 + 1e-12) {
            std::ostringstream m;
            m << "routing: entry (" << l << "," << to << ") outside [0,1]";
            out.push_back(m.str());
          }
        }
        if (routing->row_sum(l) > 1 + 1e-9) {
          std::ostringstream m;
          m << "routing: row " << l << " sum > 1";
          out.push_back(m.str());
        }
      }
    }
  }
  return out;
}

std::vector<std::string> program_shape_violations(const SignalProgram& program,
                                                  double clearance_time) {
  std::vector<std::string> out;
  if (program.empty()) {
    out.push_back("program is empty");
    return out;
  }
  auto entries = program.entries();
  // Lone clearance hold: tolerated regardless of duration.
  if (entries.size() == 1 && entries[0].phase.clearance) return out;
  double prev_end = program.start();
  for (std::size_t i = 0; i < entries.size(); ++i) {
    const auto& e = entries[i];
    if (!e.phase.clearance) {
      if (i + 1 >= entries.size() || !entries[i + 1].phase.clearance ||
          entries[i + 1].phase.index != e.phase.index) {
        std::ostringstream m;
        m << "phase entry " << i << " is not followed by its own clearance";
        out.push_back(m.str());
      }
    } else {
      double dur = e.t_end - prev_end;
      if (std::abs(dur - clearance_time) > 1e-9) {
        std::ostringstream m;
        m << "clearance entry " << i << " has duration " << dur << " instead of "
          << clearance_time;
        out.push_back(m.str());
      }
    }
    prev_end = e.t_end;
  }
  if (entries.back().phase.clearance == false)
    out.push_back("program does not end with a clearance entry");
  return out;
}

}  // namespace siglab
