#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "spalloc/baselines.hpp"
#include "spalloc/convex.hpp"
#include "spalloc/global_solver.hpp"

using namespace spalloc;
using spalloc::test::make_scenario;
using spalloc::test::vec;

namespace {

// maximize -(1/(2 x1 - 1) + 1/(3 x2 - 1)) subject to x1 + x2 = 1, x >= 0.
ConvexProblem two_var() {
  ConvexProblem p;
  p.num_vars = 2;
  p.rate_map = Matrix((Matrix(2, 2) << 2, 0, 0, 3).finished()).sparseView();
  p.arrival = vec({1, 1});
  p.eq = Matrix((Matrix(1, 2) << 1, 1).finished()).sparseView();
  p.eq_rhs = vec({1});
  p.ineq = SparseMatrix(0, 2);
  p.ineq_rhs = Vector(0);
  p.nonneg = {1, 1};
  p.start = vec({0.5, 0.5});
  return p;
}

}  // namespace

TEST_SUITE("convex_core") {

TEST_CASE("hand KKT residual") {
  const ConvexProblem p = two_var();
  // At (0.6, 0.4) both rates are 1.2 and the delay gradient is (-50, -75).
  const Vector v = vec({0.6, 0.4});
  Duals d;
  d.eq = vec({50});
  d.ineq = Vector(0);
  d.bound = vec({0, 0});
  CHECK(kkt_residual(p, v, d) == doctest::Approx(25.0 / 76));
  d.eq = vec({62.5});
  CHECK(kkt_residual(p, v, d) == doctest::Approx(12.5 / 76));
  // A bound multiplier on a positive variable shows up as complementarity.
  d.bound = vec({10, 0});
  CHECK(kkt_residual(p, v, d) == doctest::Approx(6.0 / 11));
  CHECK(kkt_residual(p, vec({0.5, 0.5}), d) == std::numeric_limits<double>::infinity());
}

TEST_CASE("two-variable optimum and perturbation") {
  const ConvexProblem p = two_var();
  const SolveResult r = solve(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.kkt_residual <= 1e-7);
  CHECK(kkt_residual(p, r.v, r.duals) <= 1e-7);
  // Stationarity: 2 / (2 x1 - 1)^2 = 3 / (3 x2 - 1)^2 on x1 + x2 = 1.
  const double x1 = r.v(0), x2 = r.v(1);
  CHECK(std::abs(2 / std::pow(2 * x1 - 1, 2) - 3 / std::pow(3 * x2 - 1, 2)) < 1e-5);
  const double grid = spalloc::test::grid_min_2d([](double a, double) {
    return spalloc::test::delay_sum({1, 1}, {2 * a, 3 * (1 - a)});
  });
  CHECK(-r.utility == doctest::Approx(grid).epsilon(1e-8));

  double last = kkt_residual(p, r.v, r.duals);
  for (double delta : {1e-4, 1e-3, 1e-2}) {
    const double now = kkt_residual(p, vec({x1 + delta, x2 - delta}), r.duals);
    CHECK(now > last);
    last = now;
  }
}

TEST_CASE("stage utilities do not decrease and runs repeat exactly") {
  const Scenario s = spalloc::test::small_drop(4, 5, 9);
  const Neighborhoods nb = build_neighborhoods(s, 4);
  const ConvexProblem p = build_p0(s, nb).problem;
  const SolveResult a = solve(p);
  REQUIRE(a.status == SolveStatus::optimal);
  for (std::size_t q = 1; q < a.stage_utilities.size(); ++q)
    CHECK(a.stage_utilities[q] >= a.stage_utilities[q - 1] - 1e-9 * std::abs(a.stage_utilities[q]));
  const SolveResult b = solve(p);
  CHECK(a.v == b.v);
  CHECK(a.iterations == b.iterations);
  CHECK((a.rates.array() > p.arrival.array()).all());
}

TEST_CASE("overload is infeasible") {
  const Scenario s = make_scenario(Matrix::Constant(1, 1, 1.0), vec({1}), vec({1}), vec({1.5}));
  // Capacity is log2(2) = 1 packet/s.
  const GlobalAllocation g = solve_p0(s, build_neighborhoods(s, 1));
  CHECK(g.status == SolveStatus::infeasible);
  CHECK(g.utility == kInfeasibleUtility);
  const FeasibilityResult f = phase_one(build_p0(s, build_neighborhoods(s, 1)).problem);
  CHECK_FALSE(f.feasible);
}

TEST_CASE("single AP single UE takes the full band") {
  const Scenario s = make_scenario(Matrix::Constant(1, 1, 3.0), vec({1}), vec({1}), vec({1}));
  const GlobalAllocation g = solve_p0(s, build_neighborhoods(s, 1));
  REQUIRE(g.status == SolveStatus::optimal);
  CHECK(g.rates(0) == doctest::Approx(2.0).epsilon(1e-6));
  CHECK(g.utility == doctest::Approx(-1.0).epsilon(1e-6));
}

TEST_CASE("symmetric orthogonal split") {
  const Matrix gain = (Matrix(2, 2) << 1.0, 0.1, 0.1, 1.0).finished();
  const Scenario s = make_scenario(gain, vec({1, 1}), vec({0.1, 0.1}), vec({0.5, 0.5}));
  const FinalAllocation o = orthogonal_optimal(s, build_neighborhoods(s, 1));
  REQUIRE(o.status == SolveStatus::optimal);
  CHECK(o.h(0) == doctest::Approx(0.5).epsilon(1e-6));
  CHECK(o.h(1) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("validation rejects malformed problems") {
  ConvexProblem p = two_var();
  p.start = vec({0.5, 0});
  CHECK_THROWS_WITH_AS(p.validate(), doctest::Contains("start"), Error);
  p = two_var();
  p.arrival = vec({1});
  CHECK_THROWS_AS(solve(p), Error);
  p = two_var();
  p.eq_rhs(0) = std::nan("");
  CHECK_THROWS_WITH(solve(p), doctest::Contains("non-finite"));
}

TEST_CASE("dependent equalities are dropped") {
  ConvexProblem p = two_var();
  p.eq = Matrix((Matrix(3, 2) << 1, 1, 2, 2, 1, 0).finished()).sparseView();
  p.eq_rhs = vec({1, 2, 0.6});
  p.start = vec({0.6, 0.4});
  CHECK(independent_rows(p.eq) == std::vector<Index>{0, 2});
  const SolveResult r = solve(p);
  REQUIRE(r.status == SolveStatus::optimal);
  CHECK(r.v(0) == doctest::Approx(0.6).epsilon(1e-9));
  CHECK(r.duals.eq.size() == 3);
  CHECK(kkt_residual(p, r.v, r.duals) <= 1e-7);
}

}  // TEST_SUITE
