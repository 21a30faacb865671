#include "spalloc/neighborhoods.hpp"

#include <algorithm>
#include <numeric>

namespace spalloc {

Pattern Neighborhoods::active_aps() const {
  Pattern all;
  for (const auto& n : ap_nbhd) all |= n;
  return all;
}

Neighborhoods neighborhoods_from_links(Index num_aps, Index num_ues, std::vector<Link> links) {
  Neighborhoods nb;
  nb.num_aps = num_aps;
  nb.num_ues = num_ues;
  for (const auto& l : links)
    if (l.ap < 0 || l.ap >= num_aps || l.ue < 0 || l.ue >= num_ues) throw Error("link index out of range");
  std::sort(links.begin(), links.end(),
            [](const Link& a, const Link& b) { return a.ap != b.ap ? a.ap < b.ap : a.ue < b.ue; });
  links.erase(std::unique(links.begin(), links.end()), links.end());
  nb.links = std::move(links);

  nb.ue_nbhd.assign(static_cast<std::size_t>(num_ues), Pattern{});
  nb.ap_ues.assign(static_cast<std::size_t>(num_aps), {});
  for (const auto& l : nb.links) {
    nb.ue_nbhd[static_cast<std::size_t>(l.ue)].insert(l.ap);
    nb.ap_ues[static_cast<std::size_t>(l.ap)].push_back(l.ue);
  }
  nb.ap_nbhd.assign(static_cast<std::size_t>(num_aps), Pattern{});
  for (Index i = 0; i < num_aps; ++i)
    for (Index j : nb.ap_ues[static_cast<std::size_t>(i)]) nb.ap_nbhd[static_cast<std::size_t>(i)] |= nb.ue_nbhd[static_cast<std::size_t>(j)];

  nb.ue_index.clear();
  nb.ap_index.clear();
  for (const auto& a : nb.ue_nbhd) nb.ue_index.emplace_back(a.members());
  for (const auto& n : nb.ap_nbhd) {
    // Large neighborhoods are rejected later by check_neighborhood_cap; keep
    // an empty indexer so construction itself never fails on them.
    nb.ap_index.emplace_back(n.size() <= 31 ? n.members() : std::vector<Index>{});
  }
  return nb;
}

Neighborhoods build_neighborhoods(const Scenario& s, Index max_aps_per_ue) {
  if (max_aps_per_ue < 1) throw Error("max_aps_per_ue must be at least 1");
  const Index n = s.num_aps();
  const Index k = s.num_ues();
  std::vector<Link> links;
  std::vector<Index> order(static_cast<std::size_t>(n));
  for (Index j = 0; j < k; ++j) {
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) { return s.gain(a, j) > s.gain(b, j); });
    Index kept = 0;
    for (Index i : order) {
      if (kept == max_aps_per_ue || !(s.gain(i, j) > 0)) break;
      links.push_back({i, j});
      ++kept;
    }
  }
  return neighborhoods_from_links(n, k, std::move(links));
}

Scenario restrict_to_links(const Scenario& s, const Neighborhoods& nb) {
  Scenario out = s;
  out.gain.setZero();
  for (const auto& l : nb.links) out.gain(l.ap, l.ue) = s.gain(l.ap, l.ue);
  return out;
}

void check_neighborhood_cap(const Neighborhoods& nb, Index cap) {
  for (Index i = 0; i < nb.num_aps; ++i) {
    if (nb.ap_nbhd[static_cast<std::size_t>(i)].size() > cap)
      throw Error("neighborhood too large for AP " + std::to_string(i) + " (" +
                  std::to_string(nb.ap_nbhd[static_cast<std::size_t>(i)].size()) + " > " + std::to_string(cap) +
                  "); reduce max_aps_per_ue");
  }
}

std::vector<Pattern> local_patterns(const Neighborhoods& nb, Index ap, Index cap) {
  const auto& members = nb.ap_nbhd[static_cast<std::size_t>(ap)];
  if (members.size() > cap)
    throw Error("neighborhood too large for AP " + std::to_string(ap) + " (" + std::to_string(members.size()) +
                " > " + std::to_string(cap) + ")");
  const auto& idx = nb.ap_index[static_cast<std::size_t>(ap)];
  std::vector<Pattern> out;
  const std::uint32_t count = std::uint32_t{1} << idx.size();
  out.reserve(count);
  for (std::uint32_t b = 0; b < count; ++b) out.push_back(idx.to_pattern(b));
  return out;
}

std::vector<ConsistencyTriple> consistency_triples(const Neighborhoods& nb) {
  check_neighborhood_cap(nb, 31);
  std::vector<ConsistencyTriple> out;
  for (Index i = 0; i < nb.num_aps; ++i) {
    const auto& ni = nb.ap_nbhd[static_cast<std::size_t>(i)];
    if (ni.empty()) continue;
    for (Index m = i + 1; m < nb.num_aps; ++m) {
      const auto& nm = nb.ap_nbhd[static_cast<std::size_t>(m)];
      if (!ni.intersects(nm)) continue;
      const LocalIndexer overlap((ni & nm).members());
      const auto& idx_i = nb.ap_index[static_cast<std::size_t>(i)];
      const auto& idx_m = nb.ap_index[static_cast<std::size_t>(m)];
      for (std::uint32_t c = 1; c <= overlap.full_mask(); ++c) {
        ConsistencyTriple t;
        t.first = i;
        t.second = m;
        t.overlap = overlap.to_pattern(c);
        t.first_local = idx_i.translate(c, overlap);
        t.second_local = idx_m.translate(c, overlap);
        out.push_back(std::move(t));
      }
    }
  }
  return out;
}

}  // namespace spalloc
