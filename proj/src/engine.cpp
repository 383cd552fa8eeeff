#include "siglab/engine.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

namespace siglab {

namespace {
constexpr double kTimeEps = 1e-9;    // program-expiry snap
constexpr double kFluidEmpty = 1e-9; // "network empty" threshold in fluid mode
}  // namespace

Engine::Engine(const Scenario& scenario, std::uint64_t seed, Options options)
    : scenario_(&scenario), seed_(seed), options_(options) {
  std::vector<std::string> report = scenario.validate();
  if (!report.empty()) {
    std::ostringstream msg;
    msg << "scenario failed validation:";
    for (const std::string& v : report) msg << "\n  " << v;
    throw SimError(msg.str());
  }
  const Network& net = scenario.network;
  const int n_lanes = net.lane_count();
  const int n_junctions = net.junction_count();

  state_.x = scenario.initial_queues.empty()
                 ? std::vector<double>(n_lanes, 0.0)
                 : scenario.initial_queues;
  state_.programs.resize(n_junctions);
  state_.generated = total_queue();  // initial vehicles count as generated

  phase_lanes_.resize(n_junctions);
  downstream_.resize(n_junctions);
  cycle_lengths_.resize(n_junctions);
  for (int j = 0; j < n_junctions; ++j) {
    const Junction& junction = net.junctions[j];
    phase_lanes_[j].resize(junction.phases.n_phases());
    for (int i = 0; i < junction.phases.n_phases(); ++i)
      for (int local : junction.phases.lanes_in_phase(i))
        phase_lanes_[j][i].push_back(junction.lanes[local]);
    if (scenario.controllers.for_junction(j).kind == ControllerKind::MaxPressure) {
      std::vector<int> reachable;
      for (int lane : junction.lanes)
        for (const auto& [to, p] : scenario.controller_routing.row(lane))
          if (p > 0) reachable.push_back(to);
      std::sort(reachable.begin(), reachable.end());
      reachable.erase(std::unique(reachable.begin(), reachable.end()),
                      reachable.end());
      downstream_[j] = std::move(reachable);
    }
    routing_rng_.emplace_back(seed, RngDomain::Routing, static_cast<std::uint64_t>(j));
  }
  for (int l = 0; l < n_lanes; ++l) {
    if (net.lanes[l].junction == kNoJunction) {
      stub_lanes_.push_back(l);
      routing_rng_.emplace_back(seed, RngDomain::Routing,
                                static_cast<std::uint64_t>(n_junctions + l));
    }
    if (net.lanes[l].arrival_rate > 0) demand_lanes_.push_back(l);
  }
  outflow_.assign(n_lanes, 0.0);
  credit_.assign(n_lanes, 0.0);
  served_.assign(n_lanes, 0);
  served_prev_.assign(n_lanes, 0);
}

double Engine::total_queue() const {
  double total = 0;
  for (double q : state_.x) total += q;
  return total;
}

double Engine::conservation_error() const {
  return state_.generated - state_.exited - total_queue();
}

void Engine::add_generated(double amount) {
  double y = amount - kahan_generated_;
  double t = state_.generated + y;
  kahan_generated_ = (t - state_.generated) - y;
  state_.generated = t;
}

void Engine::add_exited(double amount) {
  double y = amount - kahan_exited_;
  double t = state_.exited + y;
  kahan_exited_ = (t - state_.exited) - y;
  state_.exited = t;
}

Measurement Engine::make_measurement(int junction, double t) const {
  const Network& net = scenario_->network;
  const Junction& j = net.junctions[junction];
  Measurement m;
  m.junction = junction;
  m.t = t;
  m.x_hat.reserve(j.lanes.size());
  for (int lane : j.lanes)
    m.x_hat.push_back(std::min(state_.x[lane], net.lanes[lane].sensor_cap));
  for (int lane : downstream_[junction])
    m.downstream_x_hat[lane] =
        std::min(state_.x[lane], net.lanes[lane].sensor_cap);
  return m;
}

Measurement Engine::measure(int junction) const {
  return make_measurement(junction, state_.t);
}

void Engine::refresh_programs(double t) {
  const Network& net = scenario_->network;
  const int n = net.junction_count();
  expired_.clear();
  for (int j = 0; j < n; ++j) {
    const SignalProgram& program = state_.programs[j];
    if (program.empty() || program.end() <= t + kTimeEps) expired_.push_back(j);
  }
  if (expired_.empty()) return;

  auto evaluate = [&](int j, std::string& error) {
    try {
      Measurement m = make_measurement(j, t);
      state_.programs[j] = make_program(m, net.junctions[j],
                                        scenario_->controllers.for_junction(j),
                                        scenario_->controller_routing);
      cycle_lengths_[j].push_back(state_.programs[j].end() - t);
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "junction " << j << " at t=" << t << ": " << e.what();
      if (error.empty()) error = msg.str();
    }
  };

#ifdef _OPENMP
  // Controllers are pure functions of a frozen snapshot, so evaluating the
  // expired junctions on worker threads cannot change the result.
  if (options_.parallel && expired_.size() >= 4) {
    std::vector<std::string> errors(expired_.size());
#pragma omp parallel for schedule(dynamic, 2)
    for (std::size_t k = 0; k < expired_.size(); ++k)
      evaluate(expired_[k], errors[k]);
    for (const std::string& error : errors)
      if (!error.empty()) throw SimError(error);
    return;
  }
#endif
  std::string error;
  for (int j : expired_) evaluate(j, error);
  if (!error.empty()) throw SimError(error);
}

void Engine::advance_segment(double t, double t_end) {
  const double seg = t_end - t;
  if (!(seg > 0)) return;
  const Network& net = scenario_->network;
  const bool fluid = scenario_->demand.mode == SimMode::Fluid;
  const bool demand_on = fluid && t < scenario_->demand.generation_horizon;
  const double sat = scenario_->service.saturation_rate;
  const int n_junctions = net.junction_count();

  std::swap(served_, served_prev_);
  std::fill(served_.begin(), served_.end(), 0);

  // Phase 1: per-junction service amounts from the frozen segment-start state.
  // Junctions only write their own lanes. This loop is memory-bound and cheap
  // (a handful of lanes per junction), so it stays serial; the parallel
  // kernels are the controller evaluations and the run batches.
  for (int j = 0; j < n_junctions; ++j) {
    PhaseRef active = state_.programs[j].active_phase(t);
    // A clearance interval keeps discharging the lanes of the phase it follows.
    for (int lane : phase_lanes_[j][active.index]) {
      served_[lane] = 1;
      if (fluid) {
        double inflow = demand_on ? net.lanes[lane].arrival_rate * seg : 0.0;
        outflow_[lane] = std::min(state_.x[lane] + inflow, sat * seg);
      } else {
        if (!served_prev_[lane]) credit_[lane] = 0.0;  // service was interrupted
        credit_[lane] += sat * seg;
        double whole = std::floor(credit_[lane] + 1e-9);
        double out = std::min(state_.x[lane], whole);
        credit_[lane] -= out;
        outflow_[lane] = out;
      }
    }
  }
  for (int lane : stub_lanes_) {
    served_[lane] = 1;
    if (fluid) {
      double inflow = demand_on ? net.lanes[lane].arrival_rate * seg : 0.0;
      outflow_[lane] = std::min(state_.x[lane] + inflow, sat * seg);
    } else {
      credit_[lane] += sat * seg;
      double whole = std::floor(credit_[lane] + 1e-9);
      double out = std::min(state_.x[lane], whole);
      credit_[lane] -= out;
      outflow_[lane] = out;
    }
  }

  // Phase 2: apply in fixed lane order (exogenous inflow, discharge, routing).
  // Routed flow lands at segment end and becomes servable next segment.
  int stub_index = 0;
  for (int lane = 0; lane < net.lane_count(); ++lane) {
    if (demand_on && net.lanes[lane].arrival_rate > 0) {
      double a = net.lanes[lane].arrival_rate * seg;
      state_.x[lane] += a;
      add_generated(a);
    }
    if (!served_[lane]) continue;
    double out = outflow_[lane];
    outflow_[lane] = 0.0;
    if (out <= 0) continue;
    state_.x[lane] -= out;
    if (state_.x[lane] < 0) state_.x[lane] = 0;  // fp guard

    const auto& row = scenario_->routing.row(lane);
    RngStream* rng = nullptr;
    if (!fluid) {
      int owner = net.lanes[lane].junction;
      if (owner == kNoJunction) {
        while (stub_lanes_[stub_index] != lane) ++stub_index;
        rng = &routing_rng_[n_junctions + stub_index];
      } else {
        rng = &routing_rng_[owner];
      }
    }
    if (fluid) {
      double remaining = out;
      for (const auto& [to, p] : row) {
        double amount = out * p;
        remaining -= amount;
        if (amount <= 0) continue;
        const auto& cap = net.lanes[to].capacity;
        if (cap) {
          double room = std::max(0.0, *cap - state_.x[to]);
          if (amount > room) {
            state_.x[lane] += amount - room;  // blocked flow stays queued
            ++state_.blocked_events;
            amount = room;
          }
        }
        state_.x[to] += amount;
      }
      add_exited(remaining);
    } else {
      long long vehicles = static_cast<long long>(out);
      for (long long v = 0; v < vehicles; ++v) {
        double u = rng->next_uniform();
        double cum = 0;
        int dest = -1;
        for (const auto& [to, p] : row) {
          cum += p;
          if (u < cum) {
            dest = to;
            break;
          }
        }
        if (dest < 0) {
          add_exited(1.0);
          continue;
        }
        const auto& cap = net.lanes[dest].capacity;
        if (cap && state_.x[dest] >= *cap) {
          state_.x[lane] += 1.0;  // bounced back; service slot is spent
          ++state_.blocked_events;
          continue;
        }
        state_.x[dest] += 1.0;
      }
    }
  }
}

void Engine::stochastic_arrivals(long long second) {
  if (static_cast<double>(second) >= scenario_->demand.generation_horizon) return;
  for (int lane : demand_lanes_) {
    double rate = scenario_->network.lanes[lane].arrival_rate;
    double whole = std::floor(rate);
    double frac = rate - whole;
    long long n = static_cast<long long>(whole);
    if (frac > 0 && uniform_at(seed_, RngDomain::Demand,
                               static_cast<std::uint64_t>(lane),
                               static_cast<std::uint64_t>(second)) < frac)
      ++n;
    if (n > 0) {
      state_.x[lane] += static_cast<double>(n);
      add_generated(static_cast<double>(n));
    }
  }
}

void Engine::step(double dt) {
  if (!(dt > 0)) throw std::invalid_argument("step size must be > 0");
  const double horizon = scenario_->demand.generation_horizon;
  double remaining = dt;
  while (remaining > kTimeEps) {
    double sub = std::min(1.0, remaining);
    const double target = state_.t + sub;
    double t = state_.t;
    while (t < target - 1e-12) {
      refresh_programs(t);
      double bound = target;
      if (t < horizon && horizon < bound) bound = horizon;
      for (const SignalProgram& program : state_.programs) {
        double nb = program.next_boundary(t);
        if (nb < bound) bound = nb;
      }
      advance_segment(t, bound);
      t = bound;
    }
    state_.t = target;
    if (scenario_->demand.mode == SimMode::Stochastic &&
        std::abs(target - std::round(target)) < 1e-9) {
      // Bernoulli arrivals for the whole second that just elapsed.
      stochastic_arrivals(static_cast<long long>(std::llround(target)) - 1);
    }
    state_.cum_vehicle_seconds += total_queue() * sub;
    remaining -= sub;
  }
}

RunResult Engine::run() {
  const double horizon = scenario_->demand.generation_horizon;
  const double cap = scenario_->effective_hard_cap();
  const double empty_eps =
      scenario_->demand.mode == SimMode::Fluid ? kFluidEmpty : 0.0;

  RunResult result;
  result.seed = seed_;
  result.scenario_hash = scenario_hash(*scenario_);
  result.queue_series.push_back(total_queue());
  bool capped = false;
  while (true) {
    step(1.0);
    double total = total_queue();
    result.queue_series.push_back(total);
    if (state_.t >= horizon && total <= empty_eps) break;
    if (state_.t >= cap - 1e-9) {
      capped = total > empty_eps;
      break;
    }
  }
  result.infinite = capped;
  result.ttt_hours = capped ? kUnbounded
                            : total_travel_time_hours(result.queue_series);
  result.blocked_events = state_.blocked_events;
  result.cycle_lengths = cycle_lengths_;
  return result;
}

}  // namespace siglab
