#pragma once

#include <span>
#include <stdexcept>
#include <vector>

#include "siglab/core.hpp"

namespace siglab {

/// Green-split allocation for one junction: nu[i] is the cycle fraction of
/// phase i, w the fraction left to clearance intervals. Feasible allocations
/// satisfy nu >= 0, w >= w_bar and sum(nu) + w = 1.
struct Allocation {
  std::vector<double> nu;
  double w = 1.0;
};

struct GpaParams {
  double kappa = 10.0;  // cycle-scaling weight, > 0
  double w_bar = 0.0;   // clearance-fraction floor, in [0, 1)

  void validate() const;

  bool operator==(const GpaParams&) const = default;
};

class SolverError : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// sum_l x_l log((P^T nu)_l) + kappa log(w), with 0*log(0) = 0. Returns -inf
/// when a queued lane receives no green share or when w = 0.
double gpa_objective(std::span<const double> x, const PhaseMatrix& P,
                     double kappa, const Allocation& a);

/// Closed form for orthogonal phase matrices. Takes queue totals already
/// aggregated per phase. With the floor inactive: nu_i = q_i / (kappa + sum q),
/// w = kappa / (kappa + sum q); when that w would drop below w_bar the floor
/// binds and the remaining mass splits proportionally to the queue totals.
Allocation solve_orthogonal(std::span<const double> phase_queue, double kappa,
                            double w_bar);

/// Exponentiated-gradient ascent on the (nu, w) simplex for arbitrary phase
/// matrices; the floor is handled by reparametrizing w = w_bar + s. Step size
/// from backtracking line search; stops when the objective improves by less
/// than 1e-12 or after 1e5 iterations (then throws SolverError with a bound
/// on the remaining gap).
Allocation solve_iterative(std::span<const double> x, const PhaseMatrix& P,
                           double kappa, double w_bar);

/// Solves the allocation problem, dispatching to the closed form whenever the
/// phase matrix is orthogonal.
Allocation solve_gpa(std::span<const double> x, const PhaseMatrix& P,
                     double kappa, double w_bar);

/// Exhaustive search over the grid {nu : nu_i in grid_step * Z, sum nu <= 1 -
/// w_bar}, with w = 1 - sum nu. Independent check for the solvers above; not
/// built on top of them. Throws when the grid exceeds 1e8 points. The scan
/// runs on all OpenMP threads unless parallel is false; both paths return the
/// identical grid point.
Allocation brute_force_oracle(std::span<const double> x, const PhaseMatrix& P,
                              double kappa, double w_bar, double grid_step,
                              bool parallel = true);

/// Cycle length n_active * T_w / w. Throws when w is not positive (an
/// infinite cycle signals a kappa / w_bar misconfiguration).
double cycle_length(const Allocation& a, int n_active, double clearance_time);

}  // namespace siglab
