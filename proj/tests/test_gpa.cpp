#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

#include "siglab/gpa.hpp"

using namespace siglab;

namespace {

// One lane shared between two phases on top of an orthogonal base.
PhaseMatrix shared_lane_matrix() {
  PhaseMatrix p(2, 3);
  p.set(0, 0);
  p.set(0, 1);
  p.set(1, 1);
  p.set(1, 2);
  return p;
}

double feasibility_error(const Allocation& a) {
  double sum = a.w;
  for (double v : a.nu) sum += v;
  return std::abs(sum - 1.0);
}

struct RandomInstance {
  std::vector<double> x;
  PhaseMatrix P;
  double kappa;
  double w_bar;
};

RandomInstance random_orthogonal(std::mt19937& rng) {
  std::uniform_int_distribution<int> phases(1, 6);
  std::uniform_real_distribution<double> queue(0.0, 100.0);
  std::uniform_real_distribution<double> kappa(0.1, 50.0);
  std::uniform_int_distribution<int> wbar_step(0, 5);
  int n_p = phases(rng);
  int n_l = n_p + static_cast<int>(rng() % 4);
  PhaseMatrix P(n_p, n_l);
  for (int l = 0; l < n_l; ++l)
    P.set(l < n_p ? l : static_cast<int>(rng() % n_p), l);
  RandomInstance inst;
  inst.P = P;
  for (int l = 0; l < n_l; ++l) inst.x.push_back(queue(rng));
  inst.kappa = kappa(rng);
  inst.w_bar = 0.1 * wbar_step(rng);
  return inst;
}

}  // namespace

TEST_CASE("objective evaluates the allocation utility") {
  PhaseMatrix I2 = PhaseMatrix::identity(2);

  std::vector<double> x{1.0, 0.0};
  Allocation a{{0.5, 0.0}, 0.5};
  // The 0*log(0) term of the empty lane is dropped.
  CHECK(gpa_objective(x, I2, 0.1, a) ==
        doctest::Approx(1.1 * std::log(0.5)).epsilon(1e-12));

  std::vector<double> empty{0.0, 0.0};
  Allocation idle{{0.0, 0.0}, 1.0};
  CHECK(gpa_objective(empty, I2, 0.7, idle) == 0.0);

  std::vector<double> both{1.0, 1.0};
  Allocation no_clearance{{0.5, 0.5}, 0.0};
  CHECK(gpa_objective(both, I2, 0.1, no_clearance) ==
        -std::numeric_limits<double>::infinity());

  std::vector<double> starved{1.0, 1.0};
  Allocation zero_green{{1.0, 0.0}, 0.0};
  CHECK(gpa_objective(starved, I2, 0.1, zero_green) ==
        -std::numeric_limits<double>::infinity());

  CHECK_THROWS_AS((void)gpa_objective(std::vector<double>{1.0}, I2, 0.1, a),
                  std::invalid_argument);
}

TEST_CASE("closed form solves the orthogonal problem") {
  SUBCASE("single queued phase") {
    std::vector<double> q{1.0, 0.0};
    Allocation a = solve_orthogonal(q, 0.1, 0.0);
    CHECK(a.nu[0] == doctest::Approx(1.0 / 1.1).epsilon(1e-12));
    CHECK(a.nu[1] == 0.0);
    CHECK(a.w == doctest::Approx(0.1 / 1.1).epsilon(1e-12));
  }
  SUBCASE("two queued phases") {
    std::vector<double> q{4.0, 6.0};
    Allocation a = solve_orthogonal(q, 10.0, 0.0);
    CHECK(a.nu[0] == doctest::Approx(0.2).epsilon(1e-12));
    CHECK(a.nu[1] == doctest::Approx(0.3).epsilon(1e-12));
    CHECK(a.w == doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("active clearance floor") {
    std::vector<double> q{4.0, 6.0};
    Allocation a = solve_orthogonal(q, 10.0, 0.6);
    CHECK(a.w == 0.6);
    CHECK(a.nu[0] == doctest::Approx(0.16).epsilon(1e-12));
    CHECK(a.nu[1] == doctest::Approx(0.24).epsilon(1e-12));
  }
  SUBCASE("all queues empty") {
    std::vector<double> q{0.0, 0.0, 0.0};
    Allocation a = solve_orthogonal(q, 5.0, 0.3);
    CHECK(a.w == 1.0);
    for (double v : a.nu) CHECK(v == 0.0);
  }
  SUBCASE("invalid parameters") {
    std::vector<double> q{1.0};
    CHECK_THROWS_AS((void)solve_orthogonal(q, 0.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)solve_orthogonal(q, -1.0, 0.0), std::invalid_argument);
    CHECK_THROWS_AS((void)solve_orthogonal(q, 1.0, 1.0), std::invalid_argument);
  }
}

TEST_CASE("solve_gpa dispatches to the closed form on orthogonal matrices") {
  std::mt19937 rng(11);
  for (int trial = 0; trial < 100; ++trial) {
    RandomInstance inst = random_orthogonal(rng);
    Allocation via_dispatch = solve_gpa(inst.x, inst.P, inst.kappa, inst.w_bar);
    std::vector<double> per_phase(inst.P.n_phases(), 0.0);
    for (int i = 0; i < inst.P.n_phases(); ++i)
      for (int l = 0; l < inst.P.n_lanes(); ++l)
        if (inst.P.contains(i, l)) per_phase[i] += inst.x[l];
    Allocation direct = solve_orthogonal(per_phase, inst.kappa, inst.w_bar);
    REQUIRE(via_dispatch.nu.size() == direct.nu.size());
    for (std::size_t i = 0; i < direct.nu.size(); ++i)
      CHECK(via_dispatch.nu[i] == doctest::Approx(direct.nu[i]).epsilon(1e-9));
    CHECK(via_dispatch.w == doctest::Approx(direct.w).epsilon(1e-9));
  }
}

TEST_CASE("iterative solver matches the closed form on orthogonal instances") {
  std::mt19937 rng(12);
  for (int trial = 0; trial < 25; ++trial) {
    RandomInstance inst = random_orthogonal(rng);
    Allocation iterative = solve_iterative(inst.x, inst.P, inst.kappa, inst.w_bar);
    Allocation closed = solve_gpa(inst.x, inst.P, inst.kappa, inst.w_bar);
    for (std::size_t i = 0; i < closed.nu.size(); ++i)
      CHECK(std::abs(iterative.nu[i] - closed.nu[i]) <= 1e-6);
    CHECK(std::abs(iterative.w - closed.w) <= 1e-6);
  }
}

TEST_CASE("shared-lane instance reaches the interior stationary point") {
  // maximize 2 log(nu0) + 3 log(nu0+nu1) + log(nu1) + 5 log(w):
  // stationarity gives nu = (4/11, 2/11), w = 5/11.
  std::vector<double> x{2.0, 3.0, 1.0};
  PhaseMatrix P = shared_lane_matrix();
  Allocation a = solve_gpa(x, P, 5.0, 0.0);
  CHECK(a.nu[0] == doctest::Approx(4.0 / 11.0).epsilon(1e-7));
  CHECK(a.nu[1] == doctest::Approx(2.0 / 11.0).epsilon(1e-7));
  CHECK(a.w == doctest::Approx(5.0 / 11.0).epsilon(1e-7));

  Allocation grid = brute_force_oracle(x, P, 5.0, 0.0, 1e-3);
  CHECK(gpa_objective(x, P, 5.0, a) >=
        gpa_objective(x, P, 5.0, grid) - 1e-3);
}

TEST_CASE("all-zero queues return the pure-clearance allocation") {
  std::vector<double> x{0.0, 0.0, 0.0};
  Allocation a = solve_gpa(x, shared_lane_matrix(), 5.0, 0.0);
  CHECK(a.w == 1.0);
  for (double v : a.nu) CHECK(v == 0.0);
}

TEST_CASE("grid oracle examples") {
  PhaseMatrix I2 = PhaseMatrix::identity(2);
  SUBCASE("recovers the closed-form optimum on a grid") {
    std::vector<double> x{4.0, 6.0};
    Allocation a = brute_force_oracle(x, I2, 10.0, 0.0, 1e-3);
    CHECK(a.nu[0] == doctest::Approx(0.2).epsilon(2e-3));
    CHECK(a.nu[1] == doctest::Approx(0.3).epsilon(2e-3));
    CHECK(a.w == doctest::Approx(0.5).epsilon(2e-3));
  }
  SUBCASE("respects the clearance floor") {
    std::vector<double> x{9.0, 2.0};
    Allocation a = brute_force_oracle(x, I2, 1.0, 0.9, 1e-3);
    CHECK(a.w >= 0.9);
  }
  SUBCASE("large kappa pushes w to 1") {
    std::vector<double> x{1.0, 1.0};
    Allocation a = brute_force_oracle(x, I2, 1e6, 0.0, 1e-3);
    CHECK(a.w >= 1.0 - 1e-2);
  }
  SUBCASE("oversized grids are rejected") {
    PhaseMatrix I4 = PhaseMatrix::identity(4);
    std::vector<double> x{1.0, 1.0, 1.0, 1.0};
    CHECK_THROWS_AS((void)brute_force_oracle(x, I4, 1.0, 0.0, 1e-3),
                    std::invalid_argument);
  }
}

TEST_CASE("cycle length follows n_active * T_w / w") {
  CHECK(cycle_length(Allocation{{0.2, 0.3}, 0.5}, 2, 5.0) == doctest::Approx(20.0));
  // Isolated-junction first cycle: w = 0.1/1.1, one active phase, T_w = 1.
  Allocation first{{1.0 / 1.1, 0.0}, 0.1 / 1.1};
  CHECK(cycle_length(first, 1, 1.0) == doctest::Approx(11.0).epsilon(1e-12));
  CHECK(cycle_length(Allocation{{0.0, 0.0}, 1.0}, 2, 5.0) == doctest::Approx(10.0));
  CHECK_THROWS_AS((void)cycle_length(Allocation{{1.0}, 0.0}, 1, 5.0), SolverError);
  CHECK_THROWS_AS((void)cycle_length(Allocation{{1.0}, 0.5}, 0, 5.0),
                  std::invalid_argument);
}

TEST_CASE("property: every returned allocation is feasible") {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> queue(0.0, 100.0);
  for (int trial = 0; trial < 200; ++trial) {
    RandomInstance inst = random_orthogonal(rng);
    Allocation a = solve_gpa(inst.x, inst.P, inst.kappa, inst.w_bar);
    CHECK(feasibility_error(a) <= 1e-9);
    CHECK(a.w >= inst.w_bar);
    for (double v : a.nu) CHECK(v >= 0.0);
  }
  for (int trial = 0; trial < 40; ++trial) {
    std::vector<double> x{queue(rng), queue(rng), queue(rng)};
    double w_bar = 0.1 * (trial % 5);
    Allocation a = solve_gpa(x, shared_lane_matrix(), 1.0 + trial, w_bar);
    CHECK(feasibility_error(a) <= 1e-9);
    CHECK(a.w >= w_bar);
    for (double v : a.nu) CHECK(v >= 0.0);
  }
}

TEST_CASE("property: joint scaling of (x, kappa) leaves the solution unchanged") {
  std::mt19937 rng(22);
  for (int trial = 0; trial < 50; ++trial) {
    RandomInstance inst = random_orthogonal(rng);
    for (double alpha : {0.5, 2.0, 3.0}) {
      std::vector<double> scaled = inst.x;
      for (double& v : scaled) v *= alpha;
      Allocation base = solve_gpa(inst.x, inst.P, inst.kappa, inst.w_bar);
      Allocation again = solve_gpa(scaled, inst.P, alpha * inst.kappa, inst.w_bar);
      for (std::size_t i = 0; i < base.nu.size(); ++i)
        CHECK(std::abs(base.nu[i] - again.nu[i]) <= 1e-8);
      CHECK(std::abs(base.w - again.w) <= 1e-8);
    }
  }
  // Same property through the iterative path.
  std::uniform_real_distribution<double> queue(0.5, 50.0);
  for (int trial = 0; trial < 10; ++trial) {
    std::vector<double> x{queue(rng), queue(rng), queue(rng)};
    for (double alpha : {2.0, 3.0}) {
      std::vector<double> scaled = x;
      for (double& v : scaled) v *= alpha;
      Allocation base = solve_iterative(x, shared_lane_matrix(), 7.0, 0.1);
      Allocation again =
          solve_iterative(scaled, shared_lane_matrix(), alpha * 7.0, 0.1);
      for (std::size_t i = 0; i < base.nu.size(); ++i)
        CHECK(std::abs(base.nu[i] - again.nu[i]) <= 1e-8);
      CHECK(std::abs(base.w - again.w) <= 1e-8);
    }
  }
}

TEST_CASE("property: permuting phases permutes the allocation") {
  std::mt19937 rng(23);
  for (int trial = 0; trial < 50; ++trial) {
    RandomInstance inst = random_orthogonal(rng);
    const int n_p = inst.P.n_phases();
    std::vector<int> perm(n_p);
    for (int i = 0; i < n_p; ++i) perm[i] = i;
    std::shuffle(perm.begin(), perm.end(), rng);
    PhaseMatrix permuted(n_p, inst.P.n_lanes());
    for (int i = 0; i < n_p; ++i)
      for (int l = 0; l < inst.P.n_lanes(); ++l)
        if (inst.P.contains(i, l)) permuted.set(perm[i], l);
    Allocation base = solve_gpa(inst.x, inst.P, inst.kappa, inst.w_bar);
    Allocation shuffled = solve_gpa(inst.x, permuted, inst.kappa, inst.w_bar);
    for (int i = 0; i < n_p; ++i)
      CHECK(shuffled.nu[perm[i]] == doctest::Approx(base.nu[i]).epsilon(1e-9));
    CHECK(shuffled.w == doctest::Approx(base.w).epsilon(1e-9));
  }
}

TEST_CASE("property: green fractions are proportional to queue sums") {
  std::mt19937 rng(24);
  std::uniform_real_distribution<double> queue(0.5, 80.0);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> q{queue(rng), queue(rng), queue(rng), queue(rng)};
    Allocation a = solve_orthogonal(q, 0.3 + trial, 0.0);
    for (std::size_t i = 0; i < q.size(); ++i)
      for (std::size_t j = 0; j < q.size(); ++j)
        CHECK(a.nu[i] / a.nu[j] == doctest::Approx(q[i] / q[j]).epsilon(1e-10));
  }
}

TEST_CASE("property: cycle length grows strictly with the total queue") {
  double t_w = 5.0;
  double kappa = 10.0;
  double previous = 0.0;
  for (double total : {0.5, 1.0, 5.0, 20.0, 80.0, 300.0}) {
    std::vector<double> q{total / 2, total / 2};
    Allocation a = solve_orthogonal(q, kappa, 0.0);
    double cycle = cycle_length(a, 2, t_w);
    CHECK(cycle > previous);
    // Closed form: n_p T_w (kappa + sum x) / kappa.
    CHECK(cycle == doctest::Approx(2 * t_w * (kappa + total) / kappa).epsilon(1e-9));
    previous = cycle;
  }
}

TEST_CASE("property: solver dominates the grid oracle") {
  std::mt19937 rng(25);
  std::uniform_real_distribution<double> queue(0.0, 100.0);
  std::uniform_real_distribution<double> kappa(0.1, 50.0);
  for (int trial = 0; trial < 20; ++trial) {
    bool shared = trial % 2 == 0;
    PhaseMatrix P = shared ? shared_lane_matrix() : PhaseMatrix::identity(2);
    std::vector<double> x;
    for (int l = 0; l < P.n_lanes(); ++l) x.push_back(queue(rng));
    double k = kappa(rng);
    double w_bar = 0.1 * (trial % 4);
    Allocation solved = solve_gpa(x, P, k, w_bar);
    Allocation grid = brute_force_oracle(x, P, k, w_bar, 1e-2);
    CHECK(gpa_objective(x, P, k, solved) >=
          gpa_objective(x, P, k, grid) - 1e-6);
  }
}

TEST_CASE("property: re-solving with a binding floor activates it") {
  std::mt19937 rng(26);
  for (int trial = 0; trial < 50; ++trial) {
    RandomInstance inst = random_orthogonal(rng);
    Allocation free = solve_gpa(inst.x, inst.P, inst.kappa, 0.0);
    double floor_above = std::min(0.95, free.w + 0.1);
    Allocation bound = solve_gpa(inst.x, inst.P, inst.kappa, floor_above);
    double total = 0;
    for (double v : inst.x) total += v;
    if (total > 0) {
      CHECK(bound.w == floor_above);  // exact: closed form sets w = w_bar
    } else {
      CHECK(bound.w == 1.0);
    }
  }
  // Iterative path: the floor is reached within solver tolerance.
  std::vector<double> x{30.0, 40.0, 10.0};
  Allocation free = solve_iterative(x, shared_lane_matrix(), 2.0, 0.0);
  double floor_above = free.w + 0.2;
  Allocation bound = solve_iterative(x, shared_lane_matrix(), 2.0, floor_above);
  CHECK(bound.w >= floor_above);
  CHECK(bound.w <= floor_above + 1e-6);
}
