#pragma once

#include <vector>

#include "spalloc/sparse_solver.hpp"

namespace spalloc {

/// Each UE picks the linked AP with the strongest received power
/// tx_psd * gain (ties to the lower index). Returns the chosen AP per UE.
std::vector<Index> maxrsrp_association(const Scenario& s, const Neighborhoods& nb);

/// The fixed-pattern programs behind the three schemes below. With
/// `silence_idle`, APs that no UE picks stay off instead of transmitting.
FixedPatternProblem maxrsrp_problem(const Scenario& s, const Neighborhoods& nb, bool silence_idle = false);
FixedPatternProblem full_reuse_problem(const Scenario& s, const Neighborhoods& nb);
FixedPatternProblem orthogonal_problem(const Scenario& s, const Neighborhoods& nb);

/// One segment with every serving AP transmitting; each AP splits the band
/// among the UEs that picked it to minimize delay.
FinalAllocation full_reuse_maxrsrp(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts = {},
                                   bool silence_idle = false);

/// One segment with every serving AP transmitting; link shares optimized
/// jointly, so the association is whatever the optimum picks.
FinalAllocation full_reuse_optimized(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts = {});

/// n segments, segment i used by AP i alone; widths and shares optimized.
FinalAllocation orthogonal_optimal(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts = {});

}  // namespace spalloc
