#pragma once

#include <cstdint>
#include <vector>

#include "spalloc/model.hpp"
#include "spalloc/neighborhoods.hpp"

namespace spalloc {

/// Spectral efficiency of every link (i -> j) in the link set under every
/// local pattern C of the UE neighborhood A_j, computed once. With gains
/// outside the link set at zero, s_A^{i->j} = s_{A & A_j}^{i->j} for any
/// global pattern A, so this table answers every query the solvers make.
class SpectralTable {
 public:
  SpectralTable(const Scenario& working, const Neighborhoods& nb);

  /// `ue_mask` is a bitmask over the sorted members of A_j.
  [[nodiscard]] double get(Index ue, int ap_position, std::uint32_t ue_mask) const {
    const auto& t = table_[static_cast<std::size_t>(ue)];
    return t[(static_cast<std::size_t>(ap_position) << widths_[static_cast<std::size_t>(ue)]) + ue_mask];
  }

  /// Lookup by AP index and global pattern.
  [[nodiscard]] double get(Index ap, Index ue, const Pattern& active) const;

  [[nodiscard]] const Neighborhoods& neighborhoods() const { return *nb_; }

 private:
  const Neighborhoods* nb_;
  std::vector<unsigned> widths_;
  std::vector<std::vector<double>> table_;
};

}  // namespace spalloc
