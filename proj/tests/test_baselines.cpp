#include <doctest.h>

#include "helpers.hpp"
#include "oracles.hpp"
#include "spalloc/baselines.hpp"
#include "spalloc/global_solver.hpp"

using namespace spalloc;
using spalloc::test::make_scenario;
using spalloc::test::vec;

TEST_SUITE("baselines") {

TEST_CASE("strongest AP wins") {
  const Scenario s = make_scenario((Matrix(2, 1) << 1.0, 0.5).finished(), vec({1, 1}), vec({1}), vec({0.1}));
  CHECK(maxrsrp_association(s, build_neighborhoods(s, 2)) == std::vector<Index>{0});
  // Received power, not gain, decides.
  const Scenario t = make_scenario((Matrix(2, 1) << 1.0, 0.5).finished(), vec({1, 5}), vec({1}), vec({0.1}));
  CHECK(maxrsrp_association(t, build_neighborhoods(t, 2)) == std::vector<Index>{1});
}

TEST_CASE("one AP splits evenly between twin UEs") {
  const Scenario s = make_scenario(Matrix::Constant(1, 2, 1.0), vec({1}), vec({0.1, 0.1}), vec({0.5, 0.5}));
  const Neighborhoods nb = build_neighborhoods(s, 1);
  const FinalAllocation a = full_reuse_maxrsrp(s, nb);
  REQUIRE(a.status == SolveStatus::optimal);
  REQUIRE(a.xbar.size() == 1);
  for (const auto& x : a.xbar[0]) CHECK(x.bandwidth == doctest::Approx(0.5).epsilon(1e-6));
  const FinalAllocation b = full_reuse_optimized(s, nb);
  CHECK(spalloc::test::rel_diff(a.utility, b.utility) <= 1e-7);
  const FinalAllocation o = orthogonal_optimal(s, nb);
  REQUIRE(o.status == SolveStatus::optimal);
  CHECK(o.h(0) == doctest::Approx(1.0).epsilon(1e-8));
  CHECK(spalloc::test::rel_diff(a.utility, o.utility) <= 1e-7);
}

TEST_CASE("single-AP split matches water filling") {
  const Scenario s = make_scenario((Matrix(1, 3) << 1.0, 0.3, 2.5).finished(), vec({1}), vec({0.1, 0.1, 0.1}),
                                   vec({0.4, 0.7, 0.2}));
  const Neighborhoods nb = build_neighborhoods(s, 1);
  std::vector<double> se;
  for (Index j = 0; j < 3; ++j) se.push_back(std::log2(1 + s.gain(0, j) / 0.1));
  std::vector<double> shares;
  const double delay = spalloc::test::water_fill(se, {0.4, 0.7, 0.2}, &shares);
  const FinalAllocation a = full_reuse_maxrsrp(s, nb);
  REQUIRE(a.status == SolveStatus::optimal);
  CHECK(-a.utility == doctest::Approx(delay).epsilon(1e-7));
  for (const auto& x : a.xbar[0]) CHECK(x.bandwidth == doctest::Approx(shares[static_cast<std::size_t>(x.ue)]).epsilon(1e-5));
}

TEST_CASE("orthogonal halves interference-free rates") {
  const Matrix gain = (Matrix(2, 2) << 1.0, 0.0, 0.0, 1.0).finished();
  const Scenario s = make_scenario(gain, vec({1, 1}), vec({0.1, 0.1}), vec({0.5, 0.5}));
  const Neighborhoods nb = build_neighborhoods(s, 2);
  const FinalAllocation o = orthogonal_optimal(s, nb);
  const FinalAllocation f = full_reuse_optimized(s, nb);
  REQUIRE(o.status == SolveStatus::optimal);
  REQUIRE(f.status == SolveStatus::optimal);
  CHECK(o.h(0) == doctest::Approx(0.5).epsilon(1e-6));
  const double se = std::log2(11.0);
  CHECK(-f.utility == doctest::Approx(2 * 0.5 / (se - 0.5)).epsilon(1e-7));
  CHECK(-o.utility == doctest::Approx(2 * 0.5 / (se / 2 - 0.5)).epsilon(1e-6));
  CHECK(o.utility < f.utility);
}

TEST_CASE("idle APs transmit unless silenced") {
  // UE 0 picks AP 0; AP 1 is linked but nobody picks it.
  const Matrix gain = (Matrix(2, 1) << 1.0, 0.2).finished();
  const Scenario s = make_scenario(gain, vec({1, 1}), vec({0.1}), vec({0.5}));
  const Neighborhoods nb = build_neighborhoods(s, 2);
  CHECK(maxrsrp_problem(s, nb).patterns[0] == Pattern{0, 1});
  CHECK(maxrsrp_problem(s, nb, true).patterns[0] == Pattern{0});
  const FinalAllocation loud = full_reuse_maxrsrp(s, nb);
  const FinalAllocation quiet = full_reuse_maxrsrp(s, nb, {}, true);
  CHECK(-loud.utility == doctest::Approx(0.5 / (std::log2(1 + 1 / 0.3) - 0.5)).epsilon(1e-7));
  CHECK(-quiet.utility == doctest::Approx(0.5 / (std::log2(11.0) - 0.5)).epsilon(1e-7));
  CHECK(full_reuse_optimized(s, nb).utility >= loud.utility - 1e-9);
}

TEST_CASE("dominance chain on random drops") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = spalloc::test::small_drop(5, 6, seed, 10);
    const Neighborhoods nb = build_neighborhoods(s, 4);
    const GlobalAllocation joint = solve_p0(s, nb);
    const FinalAllocation orth = orthogonal_optimal(s, nb);
    const FinalAllocation full = full_reuse_optimized(s, nb);
    const FinalAllocation rsrp = full_reuse_maxrsrp(s, nb);
    REQUIRE(joint.status == SolveStatus::optimal);
    const double tol = 1e-6 * std::abs(joint.utility);
    CHECK(joint.utility >= orth.utility - tol);
    CHECK(joint.utility >= full.utility - tol);
    CHECK(full.utility >= rsrp.utility - 1e-6 * std::abs(full.utility));
  }
}

}  // TEST_SUITE
