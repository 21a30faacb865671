#include "spalloc/spectral_table.hpp"

namespace spalloc {

SpectralTable::SpectralTable(const Scenario& working, const Neighborhoods& nb) : nb_(&nb) {
  const auto k = static_cast<std::size_t>(nb.num_ues);
  widths_.resize(k);
  table_.resize(k);
  for (std::size_t j = 0; j < k; ++j) {
    const auto& idx = nb.ue_index[j];
    const auto width = static_cast<unsigned>(idx.size());
    widths_[j] = width;
    const std::uint32_t count = std::uint32_t{1} << width;
    auto& t = table_[j];
    t.assign(static_cast<std::size_t>(idx.size()) * count, 0.0);
    for (int p = 0; p < idx.size(); ++p) {
      const Index ap = idx.members()[static_cast<std::size_t>(p)];
      for (std::uint32_t c = 0; c < count; ++c) {
        if (((c >> p) & 1u) == 0) continue;
        t[(static_cast<std::size_t>(p) << width) + c] =
            spectral_efficiency(working, ap, static_cast<Index>(j), idx.to_pattern(c));
      }
    }
  }
}

double SpectralTable::get(Index ap, Index ue, const Pattern& active) const {
  const auto& idx = nb_->ue_index[static_cast<std::size_t>(ue)];
  const int p = idx.position(ap);
  if (p < 0) return 0.0;
  return get(ue, p, idx.to_local(active));
}

}  // namespace spalloc
