#include <doctest.h>

#include <random>

#include "helpers.hpp"
#include "spalloc/model.hpp"
#include "spalloc/pattern.hpp"

using namespace spalloc;
using spalloc::test::make_scenario;
using spalloc::test::vec;

TEST_SUITE("model") {

TEST_CASE("pattern set operations") {
  const Pattern a{0, 3, 70};
  const Pattern b{3, 5};
  CHECK(a.contains(70));
  CHECK_FALSE(a.contains(5));
  CHECK(a.size() == 3);
  CHECK(a.max_member() == 70);
  CHECK((a & b) == Pattern{3});
  CHECK((a | b) == Pattern{0, 3, 5, 70});
  CHECK((a - b) == Pattern{0, 70});
  CHECK(Pattern{3}.is_subset_of(a));
  CHECK(a.intersects(b));
  CHECK_FALSE(Pattern{1}.intersects(b));
  CHECK(a.to_string() == "{0,3,70}");
  CHECK(a.members() == std::vector<Index>{0, 3, 70});

  Pattern c = a;
  c.erase(70);
  CHECK(c == Pattern{0, 3});
  CHECK(c.mask() == 0b1001u);
  CHECK(Pattern::from_mask(0b1001) == c);
  CHECK(Pattern{} < Pattern{0});
  CHECK(Pattern{0, 1} < Pattern{2});
  CHECK(Pattern{}.max_member() == -1);
}

TEST_CASE("local indexer round trip") {
  const LocalIndexer idx({2, 5, 9});
  CHECK(idx.full_mask() == 7u);
  CHECK(idx.position(5) == 1);
  CHECK(idx.position(4) == -1);
  CHECK(idx.to_pattern(0b101) == Pattern{2, 9});
  CHECK(idx.to_local(Pattern{2, 4, 9}) == 0b101u);
  const LocalIndexer other({5, 7});
  CHECK(idx.translate(0b11, other) == 0b010u);
}

TEST_CASE("spectral efficiency hand values") {
  const Scenario s = make_scenario((Matrix(2, 1) << 1.0, 0.5).finished(), vec({1, 1}), vec({0.5}), vec({0}));
  CHECK(spectral_efficiency(s, 0, 0, Pattern{1}) == 0.0);
  CHECK(spectral_efficiency(s, 0, 0, Pattern{0}) == doctest::Approx(std::log2(3.0)).epsilon(1e-12));
  CHECK(spectral_efficiency(s, 0, 0, Pattern{0, 1}) == doctest::Approx(1.0).epsilon(1e-12));
}

TEST_CASE("spectral efficiency falls as interferers join") {
  const Scenario s = spalloc::test::small_drop(6, 5, 3);
  for (Index j = 0; j < s.num_ues(); ++j)
    for (std::uint64_t mask = 1; mask < 64; ++mask) {
      const Pattern a = Pattern::from_mask(mask);
      for (Index extra = 0; extra < 6; ++extra) {
        const Pattern b = a | Pattern{extra};
        a.for_each([&](Index i) { CHECK(spectral_efficiency(s, i, j, a) >= spectral_efficiency(s, i, j, b)); });
      }
    }
}

TEST_CASE("rate_global") {
  const Matrix gain = (Matrix(3, 2) << 1.0, 0.2, 0.3, 0.8, 0.1, 0.6).finished();
  const Scenario s = make_scenario(gain, vec({1, 1, 2}), vec({0.1, 0.1}), vec({0, 0}));
  GlobalAllocation zero;
  CHECK(rate_global(s, zero).isZero());

  const Scenario one = make_scenario(Matrix::Constant(1, 1, 2.0), vec({1}), vec({0.5}), vec({0}));
  GlobalAllocation single;
  single.patterns.push_back({Pattern{0}, 1.0, {{0, 0, 1.0}}});
  CHECK(rate_global(one, single)(0) == doctest::Approx(spectral_efficiency(one, 0, 0, Pattern{0})));

  // Two patterns on the three-AP instance, accumulated by hand.
  GlobalAllocation two;
  two.patterns.push_back({Pattern{0, 2}, 0.6, {{0, 0, 0.6}, {2, 1, 0.4}}});
  two.patterns.push_back({Pattern{1}, 0.4, {{1, 0, 0.1}, {1, 1, 0.3}}});
  const Vector r = rate_global(s, two);
  auto se = [&](Index i, Index j, double interference) {
    return std::log2(1 + s.tx_psd(i) * s.gain(i, j) / (interference + s.noise_psd(j)));
  };
  const double r0 = 0.6 * se(0, 0, 2 * 0.1) + 0.1 * se(1, 0, 0);
  const double r1 = 0.4 * se(2, 1, 1 * 0.2) + 0.3 * se(1, 1, 0);
  CHECK(r(0) == doctest::Approx(r0).epsilon(1e-12));
  CHECK(r(1) == doctest::Approx(r1).epsilon(1e-12));
}

TEST_CASE("utility values and sentinel") {
  CHECK(utility_delay(vec({1}), vec({2})) == -1.0);
  CHECK(utility_delay(vec({1}), vec({1})) == kInfeasibleUtility);
  CHECK(utility_delay(vec({0.5, 0.5}), vec({1.0, 1.5})) == doctest::Approx(-1.5));
  CHECK(utility_delay(vec({0, 1}), vec({0, 3})) == doctest::Approx(-0.5));
  CHECK_THROWS_AS(utility_delay(vec({1}), vec({1, 2})), Error);
  CHECK(average_delay(vec({1, 3}), -2.0) == doctest::Approx(0.5));
}

TEST_CASE("utility gradient") {
  CHECK(utility_gradient(vec({1}), vec({2}))(0) == 1.0);
  CHECK(utility_gradient(vec({0}), vec({5}))(0) == 0.0);
  CHECK_THROWS_WITH_AS(utility_gradient(vec({2}), vec({1})), doctest::Contains("rate at or below load"), Error);

  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> load(0.1, 5), gap(0.2, 4);
  for (int trial = 0; trial < 100; ++trial) {
    Vector lambda(4), r(4);
    for (Index j = 0; j < 4; ++j) {
      lambda(j) = load(rng);
      r(j) = lambda(j) + gap(rng);
    }
    const Vector g = utility_gradient(lambda, r);
    for (Index j = 0; j < 4; ++j) {
      const double h = 1e-5 * r(j);
      Vector up = r, dn = r;
      up(j) += h;
      dn(j) -= h;
      const double fd = (utility_delay(lambda, up) - utility_delay(lambda, dn)) / (2 * h);
      CHECK(std::abs(fd - g(j)) <= 1e-6 * std::abs(g(j)));
    }
  }
}

TEST_CASE("utility is concave") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u01(0, 1);
  const Vector lambda = vec({1, 2, 0.5});
  for (int trial = 0; trial < 200; ++trial) {
    Vector a(3), b(3);
    for (Index j = 0; j < 3; ++j) {
      a(j) = lambda(j) + 0.05 + 3 * u01(rng);
      b(j) = lambda(j) + 0.05 + 3 * u01(rng);
    }
    const double th = u01(rng);
    const double mix = utility_delay(lambda, (th * a + (1 - th) * b).eval());
    CHECK(mix >= th * utility_delay(lambda, a) + (1 - th) * utility_delay(lambda, b) - 1e-12);
  }
}

TEST_CASE("scenario validation names the field") {
  Scenario s = make_scenario(Matrix::Constant(1, 1, 1.0), vec({1}), vec({1}), vec({1}));
  s.noise_psd(0) = 0;
  CHECK_THROWS_WITH(s.validate(), doctest::Contains("noise_psd"));
  s.noise_psd(0) = 1;
  s.arrival_rates = vec({1, 2});
  CHECK_THROWS_WITH(s.validate(), doctest::Contains("arrival_rates"));
}

}  // TEST_SUITE
