#pragma once

#include <vector>

#include "spalloc/convex.hpp"
#include "spalloc/model.hpp"
#include "spalloc/neighborhoods.hpp"

namespace spalloc {

inline constexpr Index kDefaultGlobalCap = 12;

/// Variable layout of the global formulation: one y per pattern over the
/// serving APs (patterns differing only outside every neighborhood are the
/// same pattern), then x for each member AP and each UE it can serve.
struct GlobalLayout {
  struct LinkVar {
    Index ap;
    Index ue;
    Index var;
    double efficiency;  // s_A^{i->j}
  };
  struct PatternVars {
    Pattern pattern;
    Index y;
    std::vector<LinkVar> links;
  };
  std::vector<PatternVars> patterns;  // increasing bitmask order
  Index num_vars = 0;
};

struct GlobalProblem {
  GlobalLayout layout;
  ConvexProblem problem;
};

/// Builds the convex program; throws "use sparse_solver" above `cap` APs.
GlobalProblem build_p0(const Scenario& s, const Neighborhoods& nb, Index cap = kDefaultGlobalCap);

/// Reads an allocation off a solution vector of build_p0's problem.
GlobalAllocation global_allocation(const GlobalLayout& layout, const Vector& v, const Vector& arrival);

GlobalAllocation solve_p0(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts = {},
                          Index cap = kDefaultGlobalCap);

struct SparsifyReport {
  Index input_support = 0;
  Index support = 0;            // patterns with positive bandwidth, idle pattern included
  Index nonempty_support = 0;   // idle pattern excluded
  bool at_most_k = false;       // nonempty_support <= k
  double rate_error = 0;        // max relative rate change
};

/// Carathéodory reduction to at most k+1 patterns with the same rates,
/// followed by the refinement to at most k non-idle patterns (bandwidth
/// freed by the refinement goes to the idle pattern).
GlobalAllocation sparsify(const Scenario& s, const Neighborhoods& nb, const GlobalAllocation& alloc,
                          SparsifyReport* report = nullptr);

}  // namespace spalloc
