#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>
#include <tuple>

#include "helpers.hpp"
#include "spalloc/neighborhoods.hpp"
#include "spalloc/spectral_table.hpp"

using namespace spalloc;
using spalloc::test::make_scenario;
using spalloc::test::vec;

namespace {

// Three APs, UEs a and b; links 0->a, 1->a, 1->b, 2->b (zero-based).
Neighborhoods fig2() { return neighborhoods_from_links(3, 2, {{0, 0}, {1, 0}, {1, 1}, {2, 1}}); }

}  // namespace

TEST_SUITE("neighborhoods") {

TEST_CASE("three-AP example sets") {
  const Neighborhoods nb = fig2();
  CHECK(nb.ap_ues[0] == std::vector<Index>{0});
  CHECK(nb.ap_ues[1] == std::vector<Index>{0, 1});
  CHECK(nb.ap_ues[2] == std::vector<Index>{1});
  CHECK(nb.ue_nbhd[0] == Pattern{0, 1});
  CHECK(nb.ue_nbhd[1] == Pattern{1, 2});
  CHECK(nb.ap_nbhd[0] == Pattern{0, 1});
  CHECK(nb.ap_nbhd[1] == Pattern{0, 1, 2});
  CHECK(nb.ap_nbhd[2] == Pattern{1, 2});
}

TEST_CASE("built from gains keeps the strongest links") {
  // UE 0 hears APs 2 > 0 > 1, UE 1 has a tie between APs 0 and 2.
  const Matrix gain = (Matrix(3, 2) << 0.5, 0.3, 0.1, 0.1, 0.9, 0.3).finished();
  const Scenario s = make_scenario(gain, vec({1, 1, 1}), vec({1, 1}), vec({1, 1}));
  const Neighborhoods nb = build_neighborhoods(s, 1);
  CHECK(nb.ue_nbhd[0] == Pattern{2});
  CHECK(nb.ue_nbhd[1] == Pattern{0});
  const Neighborhoods two = build_neighborhoods(s, 2);
  CHECK(two.ue_nbhd[0] == Pattern{0, 2});
  CHECK(two.ue_nbhd[1] == Pattern{0, 2});

  const Neighborhoods all = build_neighborhoods(s, 5);
  for (Index j = 0; j < 2; ++j) CHECK(all.ue_nbhd[static_cast<std::size_t>(j)] == Pattern{0, 1, 2});
  for (Index i = 0; i < 3; ++i) CHECK(all.ap_nbhd[static_cast<std::size_t>(i)] == Pattern{0, 1, 2});

  const Scenario single = make_scenario(Matrix::Constant(1, 1, 0.3), vec({1}), vec({1}), vec({1}));
  const Neighborhoods one = build_neighborhoods(single, 4);
  CHECK(one.links == std::vector<Link>{{0, 0}});
  CHECK(one.ap_nbhd[0] == Pattern{0});
}

TEST_CASE("invariants and reconstruction on generated drops") {
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    const Scenario s = spalloc::test::small_drop(10, 23, seed);
    const Neighborhoods nb = build_neighborhoods(s, 4);
    for (const Link& l : nb.links) {
      CHECK(nb.ue_nbhd[static_cast<std::size_t>(l.ue)].contains(l.ap));
      const auto& ues = nb.ap_ues[static_cast<std::size_t>(l.ap)];
      CHECK(std::find(ues.begin(), ues.end(), l.ue) != ues.end());
    }
    for (Index i = 0; i < nb.num_aps; ++i) {
      Pattern u;
      for (Index j : nb.ap_ues[static_cast<std::size_t>(i)]) u |= nb.ue_nbhd[static_cast<std::size_t>(j)];
      CHECK(u == nb.ap_nbhd[static_cast<std::size_t>(i)]);
      if (nb.serves(i)) CHECK(nb.ap_nbhd[static_cast<std::size_t>(i)].contains(i));
      CHECK(nb.ap_nbhd[static_cast<std::size_t>(i)].size() <= 12);
    }
    CHECK(neighborhoods_from_links(nb.num_aps, nb.num_ues, nb.links) == nb);
    CHECK(build_neighborhoods(s, 4) == nb);
  }
}

TEST_CASE("restricting to links zeroes the other gains") {
  const Scenario s = spalloc::test::small_drop(6, 8, 2);
  const Neighborhoods nb = build_neighborhoods(s, 2);
  const Scenario w = restrict_to_links(s, nb);
  for (Index i = 0; i < 6; ++i)
    for (Index j = 0; j < 8; ++j) CHECK((w.gain(i, j) == 0) == !nb.has_link(i, j));

  // Locality: only the UE neighborhood of the pattern matters.
  for (Index j = 0; j < 8; ++j)
    for (std::uint64_t mask = 1; mask < 64; ++mask) {
      const Pattern a = Pattern::from_mask(mask);
      const Pattern local = a & nb.ue_nbhd[static_cast<std::size_t>(j)];
      local.for_each([&](Index i) { CHECK(spectral_efficiency(w, i, j, a) == spectral_efficiency(w, i, j, local)); });
    }
}

TEST_CASE("local patterns") {
  const Neighborhoods nb = fig2();
  const auto p0 = local_patterns(nb, 0);
  CHECK(p0 == std::vector<Pattern>{Pattern{}, Pattern{0}, Pattern{1}, Pattern{0, 1}});
  CHECK(local_patterns(nb, 1).size() == 8);

  const Scenario s = make_scenario(Matrix::Constant(13, 1, 1.0), Vector::Ones(13), vec({1}), vec({1}));
  const Neighborhoods big = build_neighborhoods(s, 13);
  CHECK_THROWS_WITH(local_patterns(big, 0), doctest::Contains("neighborhood too large"));
  CHECK_THROWS_WITH(check_neighborhood_cap(big), doctest::Contains("neighborhood too large"));
  CHECK(local_patterns(big, 0, 13).size() == 8192);
}

TEST_CASE("consistency triples") {
  const auto t = consistency_triples(fig2());
  // Pairs (0,1) and (1,2) overlap in two APs, (0,2) in {1}.
  CHECK(t.size() == 3 + 3 + 1);
  int found = 0;
  for (const auto& c : t) {
    CHECK(c.first < c.second);
    CHECK_FALSE(c.overlap.empty());
    if (c.first == 0 && c.second == 2) {
      CHECK(c.overlap == Pattern{1});
      ++found;
    }
  }
  CHECK(found == 1);

  const auto none = consistency_triples(neighborhoods_from_links(2, 2, {{0, 0}, {1, 1}}));
  CHECK(none.empty());

  const Scenario s = spalloc::test::small_drop(8, 12, 4);
  const Neighborhoods nb = build_neighborhoods(s, 3);
  std::set<std::tuple<Index, Index, Pattern>> seen;
  std::map<std::pair<Index, Index>, Index> per_pair;
  for (const auto& c : consistency_triples(nb)) {
    const Pattern inter = nb.ap_nbhd[static_cast<std::size_t>(c.first)] & nb.ap_nbhd[static_cast<std::size_t>(c.second)];
    CHECK(c.overlap.is_subset_of(inter));
    CHECK(seen.insert({c.first, c.second, c.overlap}).second);
    CHECK(nb.ap_index[static_cast<std::size_t>(c.first)].to_pattern(c.first_local) == c.overlap);
    CHECK(nb.ap_index[static_cast<std::size_t>(c.second)].to_pattern(c.second_local) == c.overlap);
    ++per_pair[{c.first, c.second}];
  }
  for (const auto& [pair, count] : per_pair) {
    const Pattern inter = nb.ap_nbhd[static_cast<std::size_t>(pair.first)] & nb.ap_nbhd[static_cast<std::size_t>(pair.second)];
    CHECK(count == (Index{1} << inter.size()) - 1);
  }
}

TEST_CASE("spectral table matches direct evaluation") {
  const Scenario s = spalloc::test::small_drop(6, 9, 7);
  const Neighborhoods nb = build_neighborhoods(s, 3);
  const Scenario w = restrict_to_links(s, nb);
  const SpectralTable table(w, nb);
  for (const Link& l : nb.links)
    for (std::uint64_t mask = 0; mask < 64; ++mask) {
      const Pattern a = Pattern::from_mask(mask);
      CHECK(table.get(l.ap, l.ue, a) == doctest::Approx(spectral_efficiency(w, l.ap, l.ue, a)).epsilon(1e-14));
    }
}

}  // TEST_SUITE
