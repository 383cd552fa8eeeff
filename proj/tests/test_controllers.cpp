#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <random>

#include "siglab/controllers.hpp"

using namespace siglab;

namespace {

Junction orthogonal_junction(int n_lanes, double clearance) {
  Junction j;
  j.id = 0;
  for (int i = 0; i < n_lanes; ++i) j.lanes.push_back(i);
  j.phases = PhaseMatrix::identity(n_lanes);
  j.clearance_time = clearance;
  return j;
}

Measurement measure_at(double t, std::vector<double> x_hat) {
  Measurement m;
  m.junction = 0;
  m.t = t;
  m.x_hat = std::move(x_hat);
  return m;
}

ControllerConfig gpa_config(ControllerKind kind, double kappa, double w_bar) {
  ControllerConfig cfg;
  cfg.kind = kind;
  cfg.gpa = GpaParams{kappa, w_bar};
  return cfg;
}

void check_entries(const SignalProgram& program,
                   const std::vector<ProgramEntry>& expected, double tol = 1e-9) {
  auto entries = program.entries();
  REQUIRE(entries.size() == expected.size());
  for (std::size_t i = 0; i < expected.size(); ++i) {
    CHECK(entries[i].phase == expected[i].phase);
    CHECK(entries[i].t_end == doctest::Approx(expected[i].t_end).epsilon(tol));
  }
}

}  // namespace

TEST_CASE("full-cycle program walks phases in fixed order") {
  Junction junction = orthogonal_junction(2, 5.0);
  ControllerConfig cfg = gpa_config(ControllerKind::GpaFull, 10.0, 0.0);

  SUBCASE("loaded junction") {
    SignalProgram p = gpa_full_program(measure_at(0.0, {4.0, 6.0}), junction, cfg);
    check_entries(p, {{{0, false}, 4.0},
                      {{0, true}, 9.0},
                      {{1, false}, 15.0},
                      {{1, true}, 20.0}});
    CHECK(p.span() == doctest::Approx(20.0).epsilon(1e-9));
  }
  SUBCASE("empty junction emits an all-clearance cycle") {
    SignalProgram p = gpa_full_program(measure_at(0.0, {0.0, 0.0}), junction, cfg);
    check_entries(p, {{{0, false}, 0.0},
                      {{0, true}, 5.0},
                      {{1, false}, 5.0},
                      {{1, true}, 10.0}});
  }
  SUBCASE("invocation time shifts every end time") {
    SignalProgram p = gpa_full_program(measure_at(100.0, {4.0, 6.0}), junction, cfg);
    check_entries(p, {{{0, false}, 104.0},
                      {{0, true}, 109.0},
                      {{1, false}, 115.0},
                      {{1, true}, 120.0}});
  }
}

TEST_CASE("shorted program activates only loaded phases") {
  SUBCASE("single loaded phase") {
    Junction junction = orthogonal_junction(2, 1.0);
    ControllerConfig cfg = gpa_config(ControllerKind::GpaShorted, 0.1, 0.0);
    SignalProgram p = gpa_shorted_program(measure_at(0.0, {1.0, 0.0}), junction, cfg);
    check_entries(p, {{{0, false}, 10.0}, {{0, true}, 11.0}});
  }
  SUBCASE("idle junction holds a clearance for one time unit") {
    Junction junction = orthogonal_junction(2, 1.0);
    ControllerConfig cfg = gpa_config(ControllerKind::GpaShorted, 0.1, 0.0);
    SignalProgram p = gpa_shorted_program(measure_at(42.0, {0.0, 0.0}), junction, cfg);
    check_entries(p, {{{0, true}, 43.0}});
  }
  SUBCASE("all phases loaded collapses to the full-cycle schedule") {
    Junction junction = orthogonal_junction(2, 5.0);
    ControllerConfig cfg = gpa_config(ControllerKind::GpaShorted, 10.0, 0.0);
    SignalProgram shorted =
        gpa_shorted_program(measure_at(0.0, {4.0, 6.0}), junction, cfg);
    SignalProgram full = gpa_full_program(measure_at(0.0, {4.0, 6.0}), junction,
                                          gpa_config(ControllerKind::GpaFull, 10.0, 0.0));
    check_entries(shorted, {full.entries().begin(), full.entries().end()});
  }
}

TEST_CASE("pressure weighs own queue against routed downstream queues") {
  SUBCASE("single lane with one downstream lane") {
    Junction junction = orthogonal_junction(1, 5.0);
    RoutingMatrix r(3);
    r.set(0, 1, 1.0);
    Measurement m = measure_at(0.0, {10.0});
    m.downstream_x_hat[1] = 4.0;
    CHECK(phase_pressure(m, junction, r, 0) == doctest::Approx(6.0));
  }
  SUBCASE("boundary exit contributes no downstream mass") {
    Junction junction = orthogonal_junction(1, 5.0);
    RoutingMatrix r(1);  // empty row: everything exits
    Measurement m = measure_at(0.0, {7.0});
    CHECK(phase_pressure(m, junction, r, 0) == doctest::Approx(7.0));
  }
  SUBCASE("sums over phase members") {
    Junction junction;
    junction.id = 0;
    junction.lanes = {0, 1};
    PhaseMatrix p(1, 2);
    p.set(0, 0);
    p.set(0, 1);
    junction.phases = p;
    junction.clearance_time = 5.0;
    RoutingMatrix r(4);
    r.set(0, 2, 1.0);
    r.set(1, 3, 1.0);
    Measurement m = measure_at(0.0, {3.0, 5.0});
    m.downstream_x_hat[2] = 1.0;
    m.downstream_x_hat[3] = 2.0;
    CHECK(phase_pressure(m, junction, r, 0) == doctest::Approx(5.0));
  }
}

TEST_CASE("max-pressure activates the argmax phase for d seconds") {
  Junction junction = orthogonal_junction(2, 5.0);
  ControllerConfig cfg;
  cfg.kind = ControllerKind::MaxPressure;
  cfg.mp_duration = 10.0;
  RoutingMatrix r(2);  // both lanes exit: pressure equals own queue

  SUBCASE("clear winner") {
    SignalProgram p = maxpressure_program(measure_at(0.0, {6.0, 2.0}), junction,
                                          cfg, r);
    check_entries(p, {{{0, false}, 10.0}, {{0, true}, 15.0}});
  }
  SUBCASE("ties break to the lowest index") {
    SignalProgram p = maxpressure_program(measure_at(0.0, {4.0, 4.0}), junction,
                                          cfg, r);
    CHECK(p.entries()[0].phase == PhaseRef{0, false});
  }
  SUBCASE("an empty junction still holds phase one for d") {
    SignalProgram p = maxpressure_program(measure_at(0.0, {0.0, 0.0}), junction,
                                          cfg, r);
    check_entries(p, {{{0, false}, 10.0}, {{0, true}, 15.0}});
  }
}

TEST_CASE("fixed-time cycles are measurement independent") {
  SUBCASE("manhattan plan spans 110 s") {
    Junction junction = orthogonal_junction(4, 5.0);
    ControllerConfig cfg;
    cfg.kind = ControllerKind::FixedTime;
    cfg.ft_durations = {30.0, 15.0, 30.0, 15.0};
    SignalProgram p = fixed_time_program(0.0, junction, cfg);
    CHECK(p.end() == 110.0);  // exact
    CHECK(p.phase_entry_count() == 4);
  }
  SUBCASE("two 25 s phases with 5 s clearances") {
    Junction junction = orthogonal_junction(2, 5.0);
    ControllerConfig cfg;
    cfg.kind = ControllerKind::FixedTime;
    cfg.ft_durations = {25.0, 25.0};
    SignalProgram p = fixed_time_program(0.0, junction, cfg);
    check_entries(p, {{{0, false}, 25.0},
                      {{0, true}, 30.0},
                      {{1, false}, 55.0},
                      {{1, true}, 60.0}});
  }
  SUBCASE("all-zero durations degenerate to clearances only") {
    Junction junction = orthogonal_junction(2, 5.0);
    ControllerConfig cfg;
    cfg.kind = ControllerKind::FixedTime;
    cfg.ft_durations = {0.0, 0.0};
    SignalProgram p = fixed_time_program(0.0, junction, cfg);
    CHECK(p.end() == 10.0);
    CHECK(p.phase_entry_count() == 2);
  }
  SUBCASE("wrong duration count is rejected") {
    Junction junction = orthogonal_junction(2, 5.0);
    ControllerConfig cfg;
    cfg.kind = ControllerKind::FixedTime;
    cfg.ft_durations = {30.0};
    CHECK_THROWS_AS((void)fixed_time_program(0.0, junction, cfg),
                    std::invalid_argument);
  }
  SUBCASE("measurements do not matter") {
    Junction junction = orthogonal_junction(2, 5.0);
    ControllerConfig cfg;
    cfg.kind = ControllerKind::FixedTime;
    cfg.ft_durations = {25.0, 25.0};
    RoutingMatrix r(2);
    SignalProgram a = make_program(measure_at(7.0, {0.0, 0.0}), junction, cfg, r);
    SignalProgram b = make_program(measure_at(7.0, {40.0, 3.0}), junction, cfg, r);
    CHECK(a == b);
  }
}

TEST_CASE("proportional-fair splits the green budget by queue share") {
  Junction junction = orthogonal_junction(2, 5.0);
  ControllerConfig cfg;
  cfg.kind = ControllerKind::PropFair;
  cfg.pf_cycle = 110.0;

  SUBCASE("proportional split") {
    SignalProgram p = prop_fair_program(measure_at(0.0, {4.0, 6.0}), junction, cfg);
    check_entries(p, {{{0, false}, 40.0},
                      {{0, true}, 45.0},
                      {{1, false}, 105.0},
                      {{1, true}, 110.0}});
  }
  SUBCASE("all queues empty splits equally") {
    SignalProgram p = prop_fair_program(measure_at(0.0, {0.0, 0.0}), junction, cfg);
    check_entries(p, {{{0, false}, 50.0},
                      {{0, true}, 55.0},
                      {{1, false}, 105.0},
                      {{1, true}, 110.0}});
  }
  SUBCASE("lone loaded phase takes the whole budget") {
    SignalProgram p = prop_fair_program(measure_at(0.0, {10.0, 0.0}), junction, cfg);
    check_entries(p, {{{0, false}, 100.0},
                      {{0, true}, 105.0},
                      {{1, false}, 105.0},
                      {{1, true}, 110.0}});
  }
}

TEST_CASE("property: emitted programs are structurally valid") {
  std::mt19937 rng(31);
  std::uniform_real_distribution<double> queue(0.0, 40.0);
  RoutingMatrix exits(6);
  for (int trial = 0; trial < 100; ++trial) {
    int n = 2 + static_cast<int>(rng() % 3);
    Junction junction = orthogonal_junction(n, 5.0);
    std::vector<double> x;
    for (int l = 0; l < n; ++l) x.push_back(queue(rng));
    Measurement m = measure_at(queue(rng), x);
    for (int l = 0; l < n; ++l) m.downstream_x_hat[l] = 0.0;

    ControllerConfig cfg = gpa_config(ControllerKind::GpaFull, 5.0, 0.1);
    CHECK(program_shape_violations(gpa_full_program(m, junction, cfg), 5.0).empty());

    cfg = gpa_config(ControllerKind::GpaShorted, 5.0, 0.1);
    CHECK(program_shape_violations(gpa_shorted_program(m, junction, cfg), 5.0).empty());

    ControllerConfig mp;
    mp.kind = ControllerKind::MaxPressure;
    mp.mp_duration = 10.0;
    RoutingMatrix r(n);
    CHECK(program_shape_violations(maxpressure_program(m, junction, mp, r), 5.0).empty());

    ControllerConfig pf;
    pf.kind = ControllerKind::PropFair;
    pf.pf_cycle = 110.0;
    CHECK(program_shape_violations(prop_fair_program(m, junction, pf), 5.0).empty());
  }
}

TEST_CASE("property: gpa spans follow the allocation cycle length") {
  std::mt19937 rng(32);
  std::uniform_real_distribution<double> queue(0.0, 40.0);
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + static_cast<int>(rng() % 3);
    Junction junction = orthogonal_junction(n, 5.0);
    std::vector<double> x;
    for (int l = 0; l < n; ++l) x.push_back(trial % 7 == 0 ? 0.0 : queue(rng));
    double w_bar = 0.1 * (trial % 3);
    Measurement m = measure_at(0.0, x);
    Allocation a = solve_gpa(x, junction.phases, 8.0, w_bar);

    SignalProgram full =
        gpa_full_program(m, junction, gpa_config(ControllerKind::GpaFull, 8.0, w_bar));
    CHECK(full.span() ==
          doctest::Approx(n * junction.clearance_time / a.w).epsilon(1e-9));

    SignalProgram shorted = gpa_shorted_program(
        m, junction, gpa_config(ControllerKind::GpaShorted, 8.0, w_bar));
    int active = 0;
    for (double nu : a.nu)
      if (nu > 1e-9) ++active;
    if (active == 0) {
      CHECK(shorted.span() == doctest::Approx(1.0));
    } else {
      CHECK(shorted.span() ==
            doctest::Approx(active * junction.clearance_time / a.w).epsilon(1e-9));
    }
    // Bounded cycle under a positive clearance floor.
    if (w_bar > 0)
      CHECK(full.span() <= n * junction.clearance_time / w_bar + 1e-9);
  }
}

TEST_CASE("property: max-pressure choice is scale invariant") {
  std::mt19937 rng(33);
  std::uniform_real_distribution<double> queue(0.0, 30.0);
  ControllerConfig cfg;
  cfg.kind = ControllerKind::MaxPressure;
  cfg.mp_duration = 10.0;
  for (int trial = 0; trial < 60; ++trial) {
    int n = 2 + static_cast<int>(rng() % 3);
    Junction junction = orthogonal_junction(n, 5.0);
    RoutingMatrix r(n);
    std::vector<double> x;
    for (int l = 0; l < n; ++l) x.push_back(queue(rng));
    Measurement m = measure_at(0.0, x);
    SignalProgram base = maxpressure_program(m, junction, cfg, r);
    for (double alpha : {0.25, 3.0, 17.0}) {
      Measurement scaled = m;
      for (double& v : scaled.x_hat) v *= alpha;
      SignalProgram p = maxpressure_program(scaled, junction, cfg, r);
      CHECK(p.entries()[0].phase == base.entries()[0].phase);
    }
  }
}

TEST_CASE("property: gpa programs are invariant under joint (x, kappa) scaling") {
  std::mt19937 rng(34);
  std::uniform_real_distribution<double> queue(0.0, 30.0);
  for (int trial = 0; trial < 40; ++trial) {
    Junction junction = orthogonal_junction(3, 5.0);
    std::vector<double> x{queue(rng), queue(rng), queue(rng)};
    Measurement m = measure_at(0.0, x);
    SignalProgram base =
        gpa_shorted_program(m, junction, gpa_config(ControllerKind::GpaShorted, 6.0, 0.0));
    for (double alpha : {0.5, 4.0}) {
      Measurement scaled = m;
      for (double& v : scaled.x_hat) v *= alpha;
      SignalProgram p = gpa_shorted_program(
          scaled, junction, gpa_config(ControllerKind::GpaShorted, 6.0 * alpha, 0.0));
      auto pe = p.entries();
      auto be = base.entries();
      REQUIRE(pe.size() == be.size());
      for (std::size_t i = 0; i < pe.size(); ++i) {
        CHECK(pe[i].phase == be[i].phase);
        CHECK(pe[i].t_end == doctest::Approx(be[i].t_end).epsilon(1e-9));
      }
    }
  }
}

TEST_CASE("config validation names the broken variant field") {
  Junction junction = orthogonal_junction(2, 5.0);
  ControllerConfig cfg;
  cfg.kind = ControllerKind::MaxPressure;
  cfg.mp_duration = 0.0;
  CHECK_FALSE(cfg.validate(junction).empty());

  cfg.kind = ControllerKind::PropFair;
  cfg.pf_cycle = 10.0;  // n_p * T_w = 10: not strictly above
  CHECK_FALSE(cfg.validate(junction).empty());

  cfg.kind = ControllerKind::FixedTime;
  cfg.ft_durations = {30.0, 15.0, 5.0};
  CHECK_FALSE(cfg.validate(junction).empty());
}
