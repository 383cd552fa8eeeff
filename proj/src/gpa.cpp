#include "siglab/gpa.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace siglab {

namespace {
constexpr double kInf = std::numeric_limits<double>::infinity();
// Improvement threshold on the normalized problem (kappa + sum x scaled to 1),
// which keeps the stopping point invariant under joint (x, kappa) scaling.
constexpr double kImprovementTol = 1e-14;
constexpr int kMaxIterations = 100000;
}  // namespace

void GpaParams::validate() const {
  if (!(kappa > 0)) throw std::invalid_argument("kappa must be > 0");
  if (!(w_bar >= 0) || w_bar >= 1)
    throw std::invalid_argument("w_bar must lie in [0, 1)");
}

double gpa_objective(std::span<const double> x, const PhaseMatrix& P,
                     double kappa, const Allocation& a) {
  if (static_cast<int>(x.size()) != P.n_lanes())
    throw std::invalid_argument("queue vector length does not match phase matrix");
  if (static_cast<int>(a.nu.size()) != P.n_phases())
    throw std::invalid_argument("allocation length does not match phase matrix");
  double value = 0;
  for (int l = 0; l < P.n_lanes(); ++l) {
    if (x[l] == 0) continue;  // 0*log(0) = 0
    double green = 0;
    for (int i = 0; i < P.n_phases(); ++i)
      if (P.contains(i, l)) green += a.nu[i];
    if (green <= 0) return -kInf;
    value += x[l] * std::log(green);
  }
  if (a.w <= 0) return -kInf;
  value += kappa * std::log(a.w);
  return value;
}

Allocation solve_orthogonal(std::span<const double> phase_queue, double kappa,
                            double w_bar) {
  GpaParams{kappa, w_bar}.validate();
  const int n = static_cast<int>(phase_queue.size());
  double total = 0;
  for (double q : phase_queue) {
    if (q < 0) throw std::invalid_argument("queue totals must be >= 0");
    total += q;
  }
  Allocation a;
  a.nu.assign(n, 0.0);
  if (total == 0) {
    a.w = 1.0;
    return a;
  }
  double w_free = kappa / (kappa + total);
  if (w_free >= w_bar) {
    a.w = w_free;
    for (int i = 0; i < n; ++i) a.nu[i] = phase_queue[i] / (kappa + total);
  } else {
    a.w = w_bar;
    for (int i = 0; i < n; ++i)
      a.nu[i] = (1.0 - w_bar) * phase_queue[i] / total;
  }
  return a;
}

namespace {

// Objective in the reparametrized point v = (nu_0..nu_{n-1}, s), w = w_bar + s.
double reparam_objective(std::span<const double> x, const PhaseMatrix& P,
                         double kappa, double w_bar,
                         const std::vector<double>& v) {
  Allocation a;
  a.nu.assign(v.begin(), v.end() - 1);
  a.w = w_bar + v.back();
  return gpa_objective(x, P, kappa, a);
}

}  // namespace

Allocation solve_iterative(std::span<const double> x, const PhaseMatrix& P,
                           double kappa, double w_bar) {
  GpaParams{kappa, w_bar}.validate();
  if (static_cast<int>(x.size()) != P.n_lanes())
    throw std::invalid_argument("queue vector length does not match phase matrix");
  const int n = P.n_phases();
  const int nl = P.n_lanes();
  double total = 0;
  for (double q : x) {
    if (q < 0) throw std::invalid_argument("queues must be >= 0");
    total += q;
  }
  Allocation result;
  result.nu.assign(n, 0.0);
  if (total == 0) {
    result.w = 1.0;
    return result;
  }

  // Normalize so kappa + sum x = 1: the maximizer is unchanged and the solve
  // becomes exactly invariant under joint scaling of (x, kappa).
  const double scale = kappa + total;
  std::vector<double> xs(x.begin(), x.end());
  for (double& v : xs) v /= scale;
  const double ks = kappa / scale;

  const double mass = 1.0 - w_bar;
  std::vector<double> v(n + 1, mass / (n + 1));
  std::vector<double> grad(n + 1, 0.0), cand(n + 1, 0.0), green(nl, 0.0);
  double f = reparam_objective(xs, P, ks, w_bar, v);
  double eta = 1.0;
  double last_improvement = kInf;

  int it = 0;
  for (; it < kMaxIterations; ++it) {
    std::fill(green.begin(), green.end(), 0.0);
    for (int i = 0; i < n; ++i)
      for (int l = 0; l < nl; ++l)
        if (P.contains(i, l)) green[l] += v[i];
    for (int i = 0; i < n; ++i) {
      double g = 0;
      for (int l = 0; l < nl; ++l)
        if (P.contains(i, l) && xs[l] > 0) g += xs[l] / green[l];
      grad[i] = g;
    }
    grad[n] = ks / (w_bar + v[n]);
    double gmax = *std::max_element(grad.begin(), grad.end());

    double f_new = -kInf;
    bool accepted = false;
    for (int halving = 0; halving < 80; ++halving) {
      double z_sum = 0;
      for (int i = 0; i <= n; ++i) {
        cand[i] = v[i] * std::exp(eta * (grad[i] - gmax));
        z_sum += cand[i];
      }
      if (z_sum > 0) {
        double renorm = mass / z_sum;
        for (int i = 0; i <= n; ++i) cand[i] *= renorm;
        f_new = reparam_objective(xs, P, ks, w_bar, cand);
        if (f_new >= f) {
          accepted = true;
          break;
        }
      }
      eta *= 0.5;
    }
    if (!accepted) break;  // no ascent step representable: converged
    last_improvement = f_new - f;
    v = cand;
    f = f_new;
    if (last_improvement < kImprovementTol) break;
    eta *= 1.5;
  }

  if (it == kMaxIterations && last_improvement >= kImprovementTol) {
    // Concavity gap bound over the simplex: max_z <grad, z - v>.
    double inner = 0;
    for (int i = 0; i <= n; ++i) inner += grad[i] * v[i];
    double gap = mass * *std::max_element(grad.begin(), grad.end()) - inner;
    std::ostringstream msg;
    msg << "allocation solver did not converge after " << kMaxIterations
        << " iterations; objective " << f << ", gap bound " << gap;
    throw SolverError(msg.str());
  }

  result.nu.assign(v.begin(), v.end() - 1);
  result.w = w_bar + v.back();
  return result;
}

Allocation solve_gpa(std::span<const double> x, const PhaseMatrix& P,
                     double kappa, double w_bar) {
  GpaParams{kappa, w_bar}.validate();
  if (static_cast<int>(x.size()) != P.n_lanes())
    throw std::invalid_argument("queue vector length does not match phase matrix");
  if (P.orthogonal()) {
    std::vector<double> per_phase(P.n_phases(), 0.0);
    for (int i = 0; i < P.n_phases(); ++i)
      for (int l = 0; l < P.n_lanes(); ++l)
        if (P.contains(i, l)) per_phase[i] += x[l];
    return solve_orthogonal(per_phase, kappa, w_bar);
  }
  return solve_iterative(x, P, kappa, w_bar);
}

namespace {

struct GridBest {
  double value = -kInf;
  std::vector<int> steps;  // grid coordinates of nu

  // Total order with a lexicographic tie-break so that serial and parallel
  // scans return the identical point.
  bool better_than(const GridBest& other) const {
    if (value != other.value) return value > other.value;
    return steps < other.steps;
  }
};

double grid_point_count(int n_phases, long long m) {
  double count = 1;
  for (int i = 1; i <= n_phases; ++i)
    count = count * (static_cast<double>(m) + i) / i;
  return count;
}

// Enumerates nu over the remaining coordinates and keeps the best point.
void scan_tail(std::span<const double> x, const PhaseMatrix& P, double kappa,
               double w_bar, double step, long long m, std::vector<int>& coords,
               int depth, long long used, GridBest& best) {
  const int n = P.n_phases();
  if (depth == n - 1) {
    coords[depth] = 0;
    for (long long k = 0; used + k <= m; ++k) {
      coords[depth] = static_cast<int>(k);
      Allocation a;
      a.nu.resize(n);
      double nu_sum = 0;
      for (int i = 0; i < n; ++i) {
        a.nu[i] = coords[i] * step;
        nu_sum += a.nu[i];
      }
      a.w = 1.0 - nu_sum;
      double value = gpa_objective(x, P, kappa, a);
      GridBest candidate{value, coords};
      if (candidate.better_than(best)) best = std::move(candidate);
    }
    return;
  }
  for (long long k = 0; used + k <= m; ++k) {
    coords[depth] = static_cast<int>(k);
    scan_tail(x, P, kappa, w_bar, step, m, coords, depth + 1, used + k, best);
  }
}

}  // namespace

Allocation brute_force_oracle(std::span<const double> x, const PhaseMatrix& P,
                              double kappa, double w_bar, double grid_step,
                              bool parallel) {
  GpaParams{kappa, w_bar}.validate();
  const int n = P.n_phases();
  if (n < 1 || n > 4)
    throw std::invalid_argument("oracle supports 1 to 4 phases");
  if (!(grid_step > 0)) throw std::invalid_argument("grid step must be > 0");
  if (static_cast<int>(x.size()) != P.n_lanes())
    throw std::invalid_argument("queue vector length does not match phase matrix");
  const long long m =
      static_cast<long long>(std::floor((1.0 - w_bar) / grid_step + 1e-9));
  if (grid_point_count(n, m) > 1e8)
    throw std::invalid_argument("oracle grid too large (> 1e8 points)");

  GridBest best;
  if (n == 1) {
    std::vector<int> coords(1, 0);
    scan_tail(x, P, kappa, w_bar, grid_step, m, coords, 0, 0, best);
  } else {
    std::vector<GridBest> partial(static_cast<std::size_t>(m) + 1);
#ifdef _OPENMP
#pragma omp parallel for schedule(dynamic, 8) if (parallel)
#endif
    for (long long k0 = 0; k0 <= m; ++k0) {
      std::vector<int> coords(n, 0);
      coords[0] = static_cast<int>(k0);
      GridBest local;
      scan_tail(x, P, kappa, w_bar, grid_step, m, coords, 1, k0, local);
      partial[static_cast<std::size_t>(k0)] = std::move(local);
    }
    for (auto& p : partial)
      if (p.better_than(best)) best = std::move(p);
  }

  Allocation a;
  a.nu.resize(n);
  double nu_sum = 0;
  for (int i = 0; i < n; ++i) {
    a.nu[i] = best.steps.empty() ? 0.0 : best.steps[i] * grid_step;
    nu_sum += a.nu[i];
  }
  a.w = std::max(w_bar, 1.0 - nu_sum);
  return a;
}

double cycle_length(const Allocation& a, int n_active, double clearance_time) {
  if (n_active < 1) throw std::invalid_argument("need at least one active phase");
  if (!(clearance_time > 0))
    throw std::invalid_argument("clearance time must be > 0");
  if (!(a.w > 0))
    throw SolverError("clearance fraction is zero: cycle length is infinite");
  return n_active * clearance_time / a.w;
}

}  // namespace siglab
