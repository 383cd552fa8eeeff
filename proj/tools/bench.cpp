// Benchmark: serial reference vs OpenMP paths for the oracle grid scan, the
// per-step junction evaluation, and a sweep-style batch of runs. Every
// parallel result is checked against its serial twin before timing is
// reported.

#include <chrono>
#include <cstdio>
#include <string>

#ifdef _OPENMP
#include <omp.h>
#endif

#include "siglab/engine.hpp"
#include "siglab/gpa.hpp"
#include "siglab/scenario.hpp"

using namespace siglab;
using Clock = std::chrono::steady_clock;

namespace {

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

void report(const char* name, double serial_s, double parallel_s, bool equal) {
  std::printf("%-28s serial %8.3f s   parallel %8.3f s   speedup %.2fx   %s\n",
              name, serial_s, parallel_s, serial_s / parallel_s,
              equal ? "results identical" : "RESULTS DIFFER");
}

void bench_oracle() {
  PhaseMatrix P(3, 4);
  P.set(0, 0);
  P.set(0, 1);
  P.set(1, 1);
  P.set(1, 2);
  P.set(2, 3);
  std::vector<double> x{23.0, 11.0, 42.0, 7.0};

  auto t0 = Clock::now();
  Allocation serial = brute_force_oracle(x, P, 8.0, 0.3, 1e-3, false);
  double serial_s = seconds_since(t0);

  t0 = Clock::now();
  Allocation parallel = brute_force_oracle(x, P, 8.0, 0.3, 1e-3, true);
  double parallel_s = seconds_since(t0);

  bool equal = serial.nu == parallel.nu && serial.w == parallel.w;
  report("oracle grid scan", serial_s, parallel_s, equal);
}

// Junctions with overlapping phases force the iterative allocation solver at
// every program refresh; with identical demand they stay synchronized, so
// whole batches of solves land on the same instant.
Scenario overlapping_phase_field(int n_junctions) {
  Scenario s;
  const int lanes_per = 8;
  for (int j = 0; j < n_junctions; ++j) {
    Junction junction;
    junction.id = j;
    junction.clearance_time = 5.0;
    PhaseMatrix P(4, lanes_per);
    for (int l = 0; l < lanes_per; ++l) {
      Lane lane;
      lane.id = j * lanes_per + l;
      lane.junction = j;
      lane.arrival_rate = 0.05;
      s.network.lanes.push_back(lane);
      junction.lanes.push_back(lane.id);
      P.set(l / 2, l);
      if (l % 2 == 1 && l / 2 + 1 < 4) P.set(l / 2 + 1, l);  // shared lanes
    }
    junction.phases = P;
    s.network.junctions.push_back(std::move(junction));
  }
  s.routing = RoutingMatrix(s.network.lane_count());
  s.controller_routing = s.routing;
  s.demand.mode = SimMode::Fluid;
  s.demand.generation_horizon = kUnbounded;
  s.hard_cap = 400.0;
  ControllerConfig cfg;
  cfg.kind = ControllerKind::GpaFull;
  cfg.gpa = GpaParams{5.0, 0.1};
  s.controllers.fallback = cfg;
  s.initial_queues.assign(s.network.lane_count(), 0.0);
  return s;
}

void bench_engine() {
  Scenario s = overlapping_phase_field(96);

  Engine::Options serial_opts;
  serial_opts.parallel = false;
  auto t0 = Clock::now();
  Engine serial_engine(s, 7, serial_opts);
  serial_engine.step(400.0);
  double serial_s = seconds_since(t0);

  Engine::Options parallel_opts;
  parallel_opts.parallel = true;
  t0 = Clock::now();
  Engine parallel_engine(s, 7, parallel_opts);
  parallel_engine.step(400.0);
  double parallel_s = seconds_since(t0);

  bool equal = serial_engine.state().x == parallel_engine.state().x &&
               serial_engine.cycle_lengths() == parallel_engine.cycle_lengths();
  report("96 overlapping-phase solves", serial_s, parallel_s, equal);
}

void bench_batch() {
  Scenario s = build_manhattan(4, 4, 0.1);
  const int n_runs = 8;

  std::vector<std::string> serial_out(n_runs), parallel_out(n_runs);
  auto t0 = Clock::now();
  for (int i = 0; i < n_runs; ++i)
    serial_out[i] = Engine(s, static_cast<std::uint64_t>(i + 1)).run().serialize();
  double serial_s = seconds_since(t0);

  t0 = Clock::now();
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic)
#endif
  for (int i = 0; i < n_runs; ++i)
    parallel_out[i] = Engine(s, static_cast<std::uint64_t>(i + 1)).run().serialize();
  double parallel_s = seconds_since(t0);

  report("4x4 grid, 8-run batch", serial_s, parallel_s,
         serial_out == parallel_out);
}

}  // namespace

int main() {
#ifdef _OPENMP
  std::printf("OpenMP enabled, max threads: %d\n", omp_get_max_threads());
#else
  std::printf("built without OpenMP; parallel paths run serially\n");
#endif
  bench_oracle();
  bench_engine();
  bench_batch();
  return 0;
}
