#pragma once

#include <cstdint>
#include <vector>

#include "spalloc/model.hpp"
#include "spalloc/pattern.hpp"

namespace spalloc {

struct Link {
  Index ap = 0;
  Index ue = 0;
  friend bool operator==(const Link&, const Link&) = default;
};

inline constexpr Index kDefaultNeighborhoodCap = 12;

/// The link set and the three neighborhood systems derived from it:
/// ue_nbhd[j] = APs linked to UE j, ap_ues[i] = UEs AP i can serve, and
/// ap_nbhd[i] = union of ue_nbhd[j] over j in ap_ues[i].
struct Neighborhoods {
  Index num_aps = 0;
  Index num_ues = 0;
  std::vector<Link> links;  // sorted by (ap, ue)
  std::vector<Pattern> ue_nbhd;
  std::vector<std::vector<Index>> ap_ues;
  std::vector<Pattern> ap_nbhd;

  // Sorted member lists backing the local bitmasks.
  std::vector<LocalIndexer> ue_index;
  std::vector<LocalIndexer> ap_index;

  [[nodiscard]] bool serves(Index ap) const { return !ap_ues[static_cast<std::size_t>(ap)].empty(); }
  /// Union of all AP neighborhoods (APs with at least one link).
  [[nodiscard]] Pattern active_aps() const;
  [[nodiscard]] bool has_link(Index ap, Index ue) const { return ue_nbhd[static_cast<std::size_t>(ue)].contains(ap); }

  friend bool operator==(const Neighborhoods& a, const Neighborhoods& b) {
    return a.num_aps == b.num_aps && a.num_ues == b.num_ues && a.links == b.links && a.ue_nbhd == b.ue_nbhd &&
           a.ap_ues == b.ap_ues && a.ap_nbhd == b.ap_nbhd;
  }
};

/// Derives every neighborhood set from an explicit link list.
Neighborhoods neighborhoods_from_links(Index num_aps, Index num_ues, std::vector<Link> links);

/// Keeps, for each UE, the `max_aps_per_ue` strongest positive-gain links
/// (ties to the lower AP index).
Neighborhoods build_neighborhoods(const Scenario& s, Index max_aps_per_ue);

/// Copy of `s` whose gains outside the link set are exactly zero.
Scenario restrict_to_links(const Scenario& s, const Neighborhoods& nb);

/// Every subset of ap_nbhd[ap], in increasing local-bitmask order.
std::vector<Pattern> local_patterns(const Neighborhoods& nb, Index ap, Index cap = kDefaultNeighborhoodCap);

/// Throws when any neighborhood exceeds `cap` members.
void check_neighborhood_cap(const Neighborhoods& nb, Index cap = kDefaultNeighborhoodCap);

struct ConsistencyTriple {
  Index first = 0;   // i
  Index second = 0;  // m, with first < second
  Pattern overlap;   // C, nonempty subset of N_i and N_m
  std::uint32_t first_local = 0;   // C as a mask over N_i
  std::uint32_t second_local = 0;  // C as a mask over N_m
};

/// For each AP pair i < m with overlapping neighborhoods, one triple per
/// nonempty subset of the overlap.
std::vector<ConsistencyTriple> consistency_triples(const Neighborhoods& nb);

}  // namespace spalloc
