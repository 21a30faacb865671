#pragma once

#include <cstdint>
#include <vector>

#include "spalloc/model.hpp"
#include "spalloc/types.hpp"

namespace spalloc {

/// maximize  -sum_j lambda_j / (r_j - lambda_j) - cost' v,  r = rate_map * v
/// subject to eq * v = eq_rhs, ineq * v <= ineq_rhs, v_i >= 0 where nonneg[i].
///
/// `start` must satisfy the equalities and be strictly positive on the
/// nonnegative variables. Inequalities and the rate domain r_j > lambda_j
/// may be violated there; phase I repairs them.
struct ConvexProblem {
  Index num_vars = 0;
  SparseMatrix rate_map;  // k x num_vars
  Vector arrival;         // lambda, length k
  SparseMatrix eq;
  Vector eq_rhs;
  SparseMatrix ineq;
  Vector ineq_rhs;
  std::vector<std::uint8_t> nonneg;
  Vector start;
  Vector cost;  // optional linear penalty; empty means none
  // Set once linearly dependent equality rows have been dropped.
  bool eq_independent = false;

  /// Throws spalloc::Error on inconsistent dimensions or non-finite data.
  void validate() const;
  [[nodiscard]] RateVector rates(const Vector& v) const { return rate_map * v; }
};

/// Removes equality rows that are linear combinations of the others. Rows
/// owning a column no other row touches are kept without factorization; the
/// remainder goes through a rank-revealing sparse QR. Returns rows dropped.
Index drop_dependent_equalities(ConvexProblem& p);

/// Indices (ascending) of a maximal linearly independent subset of rows.
std::vector<Index> independent_rows(const SparseMatrix& e);

struct Duals {
  Vector eq;     // nu
  Vector ineq;   // mu >= 0
  Vector bound;  // sigma >= 0, zero on free variables
};

struct SolveResult {
  Vector v;
  RateVector rates;
  double utility = kInfeasibleUtility;  // delay utility, cost excluded
  SolveStatus status = SolveStatus::infeasible;
  double kkt_residual = 0;
  int iterations = 0;  // Newton steps, both phases
  Duals duals;
  double barrier_weight = 0;
  double duality_gap = 0;               // barrier terms / barrier_weight at the returned point
  std::vector<double> stage_utilities;  // utility at the end of each phase-II stage
  double phase1_margin = 0;             // relative rate margin reached in phase I
};

struct SolverOptions {
  double tol = 1e-7;              // relative KKT residual, see kkt_residual
  // Target for the barrier gap m / t relative to max(1, |u|). Stages continue
  // toward it only while the KKT residual stays within tol.
  double gap_tol = 1e-7;
  double barrier_factor = 10;
  double initial_barrier = 1;
  double ls_alpha = 0.25;
  double ls_beta = 0.5;
  int max_newton_iters = 200;     // per stage
  bool verbose = false;
};

/// Barrier method: phase I maximizes the minimum slack to find a point with
/// r_j > lambda_j inside every inequality; phase II follows the central path
/// of the delay objective plus logarithmic barriers.
SolveResult solve(const ConvexProblem& p, const SolverOptions& opts = {});

/// Max norm of stationarity and dual sign violations (relative to
/// 1 + |grad f|), primal infeasibility (relative to 1 + |rhs|) and
/// complementarity products (relative to 1 + |f|), where f is the total
/// delay. Infinite outside the rate domain.
double kkt_residual(const ConvexProblem& p, const Vector& v, const Duals& duals);

struct FeasibilityResult {
  bool feasible = false;
  double margin = 0;  // t reached: rates >= (1 + t) lambda with all inequalities slack
  Vector point;
  int iterations = 0;
};

/// Phase I on its own. With `maximize` the largest margin t is computed
/// (to within the gap tolerance); otherwise the search stops as soon as
/// the sign of the optimal margin is known.
FeasibilityResult phase_one(const ConvexProblem& p, const SolverOptions& opts = {}, bool maximize = false);

}  // namespace spalloc
