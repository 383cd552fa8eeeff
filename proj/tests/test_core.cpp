#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <random>

#include "siglab/core.hpp"

using namespace siglab;

namespace {

Network two_lane_junction() {
  Network net;
  for (int i = 0; i < 2; ++i) {
    Lane lane;
    lane.id = i;
    lane.junction = 0;
    net.lanes.push_back(lane);
  }
  Junction j;
  j.id = 0;
  j.lanes = {0, 1};
  j.phases = PhaseMatrix::identity(2);
  j.clearance_time = 5.0;
  net.junctions.push_back(j);
  return net;
}

SignalProgram figure_program() {
  // Two phases of 25 s, each followed by a 5 s clearance.
  return SignalProgram(0.0, {{{0, false}, 25.0},
                             {{0, true}, 30.0},
                             {{1, false}, 55.0},
                             {{1, true}, 60.0}});
}

}  // namespace

TEST_CASE("well-formed two-lane junction validates cleanly") {
  Network net = two_lane_junction();
  CHECK(validate_network(net).empty());

  RoutingMatrix routing(2);
  routing.set(0, 1, 0.5);
  CHECK(validate_network(net, &routing).empty());
}

TEST_CASE("lane in no phase is reported") {
  Network net = two_lane_junction();
  PhaseMatrix p(2, 2);
  p.set(0, 0);
  p.set(1, 0);  // second column all zero
  net.junctions[0].phases = p;
  auto report = validate_network(net);
  REQUIRE_FALSE(report.empty());
  bool found = false;
  for (const auto& v : report)
    if (v.find("in no phase") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("routing row above 1 is reported") {
  Network net = two_lane_junction();
  RoutingMatrix routing(2);
  routing.set(0, 0, 0.6);
  routing.set(0, 1, 0.6);
  auto report = validate_network(net, &routing);
  REQUIRE_FALSE(report.empty());
  bool found = false;
  for (const auto& v : report)
    if (v.find("sum > 1") != std::string::npos) found = true;
  CHECK(found);
}

TEST_CASE("validation is idempotent and side-effect free") {
  Network net = two_lane_junction();
  auto first = validate_network(net);
  auto second = validate_network(net);
  CHECK(first == second);
  CHECK(net == two_lane_junction());
}

TEST_CASE("active phase picks the smallest end time strictly greater than t") {
  SignalProgram program = figure_program();
  CHECK(program.active_phase(10.0) == PhaseRef{0, false});
  // At an entry's exact end time the next entry is active.
  CHECK(program.active_phase(25.0) == PhaseRef{0, true});
  CHECK(program.active_phase(59.5) == PhaseRef{1, true});
  CHECK(program.active_phase(0.0) == PhaseRef{0, false});
  CHECK_THROWS_AS((void)program.active_phase(60.0), ProgramExpired);
  CHECK_THROWS_AS((void)program.active_phase(120.0), ProgramExpired);
}

TEST_CASE("program end is the maximum end time") {
  CHECK(figure_program().end() == 60.0);
  SignalProgram single(0.0, {{{0, true}, 7.0}});
  CHECK(single.end() == 7.0);
  CHECK_THROWS_AS((void)SignalProgram().end(), std::invalid_argument);
}

TEST_CASE("out-of-order entries are rejected at construction") {
  CHECK_THROWS_AS(SignalProgram(0.0, {{{0, false}, 30.0}, {{0, true}, 25.0}}),
                  std::invalid_argument);
  CHECK_THROWS_AS(SignalProgram(40.0, {{{0, false}, 30.0}}),
                  std::invalid_argument);
}

TEST_CASE("zero-duration entries are never active") {
  SignalProgram program(0.0, {{{0, false}, 0.0},
                              {{0, true}, 5.0},
                              {{1, false}, 5.0},
                              {{1, true}, 10.0}});
  CHECK(program.active_phase(0.0) == PhaseRef{0, true});
  CHECK(program.active_phase(4.0) == PhaseRef{0, true});
  CHECK(program.active_phase(5.0) == PhaseRef{1, true});
  CHECK(program.phase_entry_count() == 2);
}

TEST_CASE("active phase is piecewise constant and right-continuous") {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> dur(0.0, 12.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<ProgramEntry> entries;
    double t_end = 10.0;
    int n_phases = 1 + static_cast<int>(rng() % 4);
    for (int i = 0; i < n_phases; ++i) {
      t_end += dur(rng);
      entries.push_back({{i, false}, t_end});
      t_end += 5.0;
      entries.push_back({{i, true}, t_end});
    }
    SignalProgram program(10.0, entries);
    // Right-continuity at every interior boundary.
    for (const auto& e : program.entries()) {
      if (e.t_end >= program.end()) continue;
      CHECK(program.active_phase(e.t_end) ==
            program.active_phase(e.t_end + 1e-9));
    }
    // Constant between boundaries.
    std::uniform_real_distribution<double> pick(10.0, program.end() - 1e-9);
    for (int k = 0; k < 40; ++k) {
      double t = pick(rng);
      PhaseRef a = program.active_phase(t);
      double boundary = program.next_boundary(t);
      double u = std::min(t + (boundary - t) * 0.99, boundary - 1e-12);
      CHECK(program.active_phase(u) == a);
    }
  }
}

TEST_CASE("program shape checks catch malformed controller output") {
  CHECK(program_shape_violations(figure_program(), 5.0).empty());

  SignalProgram lone_hold(0.0, {{{0, true}, 1.0}});
  CHECK(program_shape_violations(lone_hold, 5.0).empty());

  SignalProgram bad_clearance(0.0, {{{0, false}, 25.0}, {{0, true}, 29.0}});
  CHECK_FALSE(program_shape_violations(bad_clearance, 5.0).empty());

  SignalProgram missing_clearance(0.0, {{{0, false}, 25.0}, {{1, false}, 30.0},
                                        {{1, true}, 35.0}});
  CHECK_FALSE(program_shape_violations(missing_clearance, 5.0).empty());
}
