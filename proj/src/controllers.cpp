#include "siglab/controllers.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace siglab {

namespace {
// Solver round-off guard for the "phase active" test; for orthogonal phases
// this coincides with "phase queue sum > 0".
constexpr double kActiveThreshold = 1e-9;
}  // namespace

std::string to_string(ControllerKind kind) {
  switch (kind) {
    case ControllerKind::GpaFull: return "gpa-full";
    case ControllerKind::GpaShorted: return "gpa-shorted";
    case ControllerKind::MaxPressure: return "max-pressure";
    case ControllerKind::FixedTime: return "fixed-time";
    case ControllerKind::PropFair: return "prop-fair";
  }
  return "unknown";
}

std::optional<ControllerKind> controller_kind_from(std::string_view name) {
  if (name == "gpa-full") return ControllerKind::GpaFull;
  if (name == "gpa-shorted") return ControllerKind::GpaShorted;
  if (name == "max-pressure") return ControllerKind::MaxPressure;
  if (name == "fixed-time") return ControllerKind::FixedTime;
  if (name == "prop-fair") return ControllerKind::PropFair;
  return std::nullopt;
}

std::vector<std::string> ControllerConfig::validate(const Junction& junction) const {
  std::vector<std::string> out;
  const int n_p = junction.phases.n_phases();
  switch (kind) {
    case ControllerKind::GpaFull:
    case ControllerKind::GpaShorted:
      try {
        gpa.validate();
      } catch (const std::exception& e) {
        out.push_back(e.what());
      }
      break;
    case ControllerKind::MaxPressure:
      if (!(mp_duration > 0)) out.push_back("max-pressure duration must be > 0");
      break;
    case ControllerKind::FixedTime:
      if (static_cast<int>(ft_durations.size()) != n_p)
        out.push_back("fixed-time needs one duration per phase");
      for (double d : ft_durations)
        if (d < 0) out.push_back("fixed-time durations must be >= 0");
      break;
    case ControllerKind::PropFair:
      if (!(pf_cycle > n_p * junction.clearance_time))
        out.push_back("prop-fair cycle must exceed the total clearance time");
      break;
  }
  if (min_green < 0) out.push_back("min green must be >= 0");
  return out;
}

namespace {

std::vector<double> phase_queue_sums(const Measurement& m, const Junction& junction) {
  const auto& P = junction.phases;
  if (static_cast<int>(m.x_hat.size()) != P.n_lanes())
    throw std::invalid_argument("measurement length does not match junction");
  std::vector<double> sums(P.n_phases(), 0.0);
  for (int i = 0; i < P.n_phases(); ++i)
    for (int l = 0; l < P.n_lanes(); ++l)
      if (P.contains(i, l)) sums[i] += m.x_hat[l];
  return sums;
}

// Lays out greens in fixed phase order, each followed by its clearance.
// Phases with no entry in `greens` (NaN) are skipped entirely.
SignalProgram lay_out_cycle(double t, const Junction& junction,
                            const std::vector<double>& greens) {
  std::vector<ProgramEntry> entries;
  double t_end = t;
  for (int i = 0; i < static_cast<int>(greens.size()); ++i) {
    if (std::isnan(greens[i])) continue;
    t_end += greens[i];
    entries.push_back({{i, false}, t_end});
    t_end += junction.clearance_time;
    entries.push_back({{i, true}, t_end});
  }
  return SignalProgram(t, std::move(entries));
}

}  // namespace

SignalProgram gpa_full_program(const Measurement& m, const Junction& junction,
                               const ControllerConfig& cfg) {
  const int n_p = junction.phases.n_phases();
  Allocation a = solve_gpa(m.x_hat, junction.phases, cfg.gpa.kappa, cfg.gpa.w_bar);
  double t_cyc = cycle_length(a, n_p, junction.clearance_time);
  std::vector<double> greens(n_p);
  for (int i = 0; i < n_p; ++i)
    greens[i] = std::max(a.nu[i] * t_cyc, cfg.min_green);
  return lay_out_cycle(m.t, junction, greens);
}

SignalProgram gpa_shorted_program(const Measurement& m, const Junction& junction,
                                  const ControllerConfig& cfg) {
  const int n_p = junction.phases.n_phases();
  Allocation a = solve_gpa(m.x_hat, junction.phases, cfg.gpa.kappa, cfg.gpa.w_bar);
  int n_active = 0;
  for (double nu : a.nu)
    if (nu > kActiveThreshold) ++n_active;
  if (n_active == 0) {
    // Idle junction: hold a clearance phase for one time unit.
    return SignalProgram(m.t, {{{0, true}, m.t + 1.0}});
  }
  double t_cyc = cycle_length(a, n_active, junction.clearance_time);
  std::vector<double> greens(n_p, std::numeric_limits<double>::quiet_NaN());
  for (int i = 0; i < n_p; ++i)
    if (a.nu[i] > kActiveThreshold)
      greens[i] = std::max(a.nu[i] * t_cyc, cfg.min_green);
  return lay_out_cycle(m.t, junction, greens);
}

double phase_pressure(const Measurement& m, const Junction& junction,
                      const RoutingMatrix& believed, int phase) {
  const auto& P = junction.phases;
  if (static_cast<int>(m.x_hat.size()) != P.n_lanes())
    throw std::invalid_argument("measurement length does not match junction");
  double pressure = 0;
  for (int l = 0; l < P.n_lanes(); ++l) {
    if (!P.contains(phase, l)) continue;
    int lane_id = junction.lanes[l];
    if (lane_id >= believed.n_lanes())
      throw std::invalid_argument("routing row missing for lane");
    double downstream = 0;
    for (const auto& [to, p] : believed.row(lane_id)) {
      auto it = m.downstream_x_hat.find(to);
      if (it == m.downstream_x_hat.end())
        throw std::invalid_argument("downstream measurement missing for lane");
      downstream += p * it->second;
    }
    pressure += m.x_hat[l] - downstream;
  }
  return pressure;
}

SignalProgram maxpressure_program(const Measurement& m, const Junction& junction,
                                  const ControllerConfig& cfg,
                                  const RoutingMatrix& believed) {
  const int n_p = junction.phases.n_phases();
  int best = 0;
  double best_pressure = -std::numeric_limits<double>::infinity();
  for (int i = 0; i < n_p; ++i) {
    double p = phase_pressure(m, junction, believed, i);
    if (p > best_pressure) {  // ties break to the lowest phase index
      best_pressure = p;
      best = i;
    }
  }
  double d = cfg.mp_duration;
  return SignalProgram(m.t, {{{best, false}, m.t + d},
                             {{best, true}, m.t + d + junction.clearance_time}});
}

SignalProgram fixed_time_program(double t, const Junction& junction,
                                 const ControllerConfig& cfg) {
  const int n_p = junction.phases.n_phases();
  if (static_cast<int>(cfg.ft_durations.size()) != n_p)
    throw std::invalid_argument("fixed-time needs one duration per phase");
  return lay_out_cycle(t, junction, cfg.ft_durations);
}

SignalProgram prop_fair_program(const Measurement& m, const Junction& junction,
                                const ControllerConfig& cfg) {
  const int n_p = junction.phases.n_phases();
  double green_budget = cfg.pf_cycle - n_p * junction.clearance_time;
  if (!(green_budget > 0))
    throw std::invalid_argument("prop-fair cycle must exceed the total clearance time");
  std::vector<double> sums = phase_queue_sums(m, junction);
  double total = std::accumulate(sums.begin(), sums.end(), 0.0);
  std::vector<double> greens(n_p);
  for (int i = 0; i < n_p; ++i) {
    // All queues empty: any split is optimal; share the budget equally.
    double share = total > 0 ? sums[i] / total : 1.0 / n_p;
    greens[i] = std::max(green_budget * share, cfg.min_green);
  }
  return lay_out_cycle(m.t, junction, greens);
}

SignalProgram make_program(const Measurement& m, const Junction& junction,
                           const ControllerConfig& cfg,
                           const RoutingMatrix& believed) {
  switch (cfg.kind) {
    case ControllerKind::GpaFull: return gpa_full_program(m, junction, cfg);
    case ControllerKind::GpaShorted: return gpa_shorted_program(m, junction, cfg);
    case ControllerKind::MaxPressure:
      return maxpressure_program(m, junction, cfg, believed);
    case ControllerKind::FixedTime: return fixed_time_program(m.t, junction, cfg);
    case ControllerKind::PropFair: return prop_fair_program(m, junction, cfg);
  }
  throw std::logic_error("unknown controller kind");
}

}  // namespace siglab
