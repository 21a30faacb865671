#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include "spalloc/convex.hpp"
#include "spalloc/model.hpp"
#include "spalloc/neighborhoods.hpp"

namespace spalloc {

/// Variable layout of the segmented local formulation. Segment l occupies
/// [l * segment_vars, (l + 1) * segment_vars). Inside a segment each serving
/// AP owns a block: for every local pattern B over its neighborhood (mask
/// order), y_B followed by one z_B per UE it serves. The segment width h_l
/// is the last variable of the segment.
struct SegmentLayout {
  struct ApBlock {
    Index ap = 0;
    LocalIndexer nbhd;
    std::vector<Index> ues;
    Index offset = 0;  // within a segment

    [[nodiscard]] std::uint32_t num_patterns() const { return std::uint32_t{1} << nbhd.size(); }
    [[nodiscard]] Index stride() const { return 1 + static_cast<Index>(ues.size()); }
  };

  Index num_segments = 0;
  std::vector<ApBlock> blocks;
  Index segment_vars = 0;
  Index num_vars = 0;

  [[nodiscard]] Index y(std::size_t block, std::uint32_t mask, Index l) const {
    const auto& b = blocks[block];
    return l * segment_vars + b.offset + static_cast<Index>(mask) * b.stride();
  }
  [[nodiscard]] Index z(std::size_t block, std::uint32_t mask, std::size_t ue_pos, Index l) const {
    return y(block, mask, l) + 1 + static_cast<Index>(ue_pos);
  }
  [[nodiscard]] Index h(Index l) const { return (l + 1) * segment_vars - 1; }
};

struct SegmentedProblem {
  SegmentLayout layout;
  ConvexProblem problem;
  Index consistency_rows = 0;       // per segment, one per triple
  Index consistency_rows_kept = 0;  // per segment, after dropping dependent rows
};

/// Builds the segmented program. Equalities: y = sum of z per (AP, pattern,
/// segment), the consistency equalities of every triple in every segment,
/// and sum of widths = 1; inequalities: sum over B of y <= h per (AP,
/// segment). Consistency rows implied by the others are dropped once per
/// segment template, so the problem is handed over with independent rows.
SegmentedProblem build_p1(const Scenario& s, const Neighborhoods& nb, Index num_segments,
                          Index cap = kDefaultNeighborhoodCap);

struct SegmentedAllocation {
  Index num_segments = 0;
  Vector h;
  // [segment][block]: y over local patterns; z as local patterns x UEs of the block.
  std::vector<std::vector<Vector>> y;
  std::vector<std::vector<Matrix>> z;
  RateVector rates;
  double utility = kInfeasibleUtility;
  SolveStatus status = SolveStatus::infeasible;
  Vector v;  // raw solution, used for warm starts
  int iterations = 0;
};

/// Reads the allocation off a solution vector. y is recomputed as the sum of
/// its z so the coupling holds exactly.
SegmentedAllocation segmented_allocation(const SegmentedProblem& p1, const Vector& v);

/// Max violation over every triple and segment of the consistency equalities.
double consistency_residual(const SegmentedAllocation& seg, const SegmentLayout& layout,
                            const Neighborhoods& nb);

SegmentedAllocation solve_p1(const SegmentedProblem& p1, const SolverOptions& opts = {});

struct WeightState {
  std::vector<std::vector<Vector>> w;  // [segment][block] over local patterns
  double alpha = 0.05;
  std::uint64_t rng_seed = 0;
  int iteration = 0;
};

/// Weights drawn uniformly from (0, 1).
WeightState random_weights(const SegmentLayout& layout, double alpha, std::uint64_t seed);
WeightState constant_weights(const SegmentLayout& layout, double alpha, double value);

/// w = 1 / (y + alpha * max(h, 1e-6)).
void update_weights(WeightState& w, const SegmentedAllocation& seg);

/// How the weighted l1 term enters the segmented program. `constraint`
/// adds sum_B w_B y_B <= 1 for every (AP, segment); `elastic` adds
/// sum_B w_B y_B - s <= 1 with s >= 0 priced at rho in the objective, so the
/// problem stays feasible and only the excess over one pattern costs;
/// `penalty` subtracts rho * sum w y from the objective.
enum class P2Form { elastic, constraint, penalty };

struct P2Params {
  P2Form form = P2Form::elastic;
  double rho = 0;  // elastic and penalty forms
};

/// `warm` (optional) is a starting point; phase I repairs it when needed.
SegmentedAllocation solve_p2(const SegmentedProblem& p1, const WeightState& w, const P2Params& params,
                             const Vector* warm = nullptr, const SolverOptions& opts = {});

struct SparseOptions {
  Index num_segments = 0;  // 0 selects k + 1
  double alpha = 0.05;
  int t_max = 20;
  double conv_tol = 1e-5;
  std::uint64_t seed = 0;
  P2Form form = P2Form::elastic;
  // Price of the weighted l1 term relative to the unpenalized optimum: rho
  // is chosen so one unit per (AP, segment) costs this fraction of |u|.
  double penalty = 1;
  // Solves started from the previous solution begin where the barrier gap
  // is this fraction of |u|.
  double warm_gap = 0.1;
  // Relative barrier gap of the reweighting solves. The weights only need y
  // well below alpha * h; the final fixed-pattern solve uses the solver's own
  // gap_tol.
  double reweight_gap_tol = 1e-2;
  SolverOptions solver;
  // Called with every weighted solve that succeeded, before the weights move.
  std::function<void(int, const SegmentedAllocation&)> on_iterate;
};

struct ReweightResult {
  SegmentedAllocation allocation;
  SegmentedAllocation reference;  // unpenalized optimum (elastic and penalty forms)
  WeightState weights;
  int iterations = 0;  // weighted solves
  bool converged = false;
  double last_change = 0;  // max |delta y| of the final iteration
  // Status of the solve that ended the loop early. The tightened weights can
  // cut off every point meeting the load; the previous iterate is kept then.
  SolveStatus stop_status = SolveStatus::optimal;
};

/// Random weights in (0, 1), then alternate weighted solves with the update
/// w = 1 / (y + alpha h) until max |delta y| < conv_tol or t_max solves.
/// Outside the constraint form the random draws multiply the update rule
/// applied to the unpenalized optimum, and every solve is warm started.
ReweightResult reweighted_l1(const SegmentedProblem& p1, const SparseOptions& opts);

/// Dominant local pattern per (AP, segment), ties to the lowest mask and
/// an all-zero row to the empty pattern; A*_l collects the APs that are
/// members of their own dominant pattern.
std::vector<Pattern> extract_patterns(const SegmentedAllocation& seg, const SegmentLayout& layout);

struct FinalAllocation {
  std::vector<Pattern> patterns;               // A*_l
  Vector h;
  std::vector<std::vector<LinkShare>> xbar;    // per segment
  RateVector rates;
  double utility = kInfeasibleUtility;
  SolveStatus status = SolveStatus::infeasible;

  /// Distinct nonempty patterns among segments with positive width.
  [[nodiscard]] Index active_patterns(double threshold = 0.0) const;
  /// Segments merged by pattern.
  [[nodiscard]] GlobalAllocation to_global() const;
};

/// Fixed-pattern program: per segment a width h_l and one share per link
/// of the APs in its pattern, sum_j x <= h_l per AP, sum of widths = 1.
struct FixedPatternProblem {
  struct LinkVar {
    Index segment, ap, ue, var;
  };
  std::vector<Pattern> patterns;
  std::vector<Index> h_vars;
  std::vector<LinkVar> links;
  ConvexProblem problem;
};

/// With `serving`, UE j may only be served by AP serving[j].
FixedPatternProblem build_p3(const Scenario& s, const Neighborhoods& nb, const std::vector<Pattern>& patterns,
                             const Vector& arrival, const std::vector<Index>* serving = nullptr);

FinalAllocation final_allocation(const FixedPatternProblem& p3, const SolveResult& res);

/// Re-optimizes link shares and segment widths with the pattern of each
/// segment fixed.
FinalAllocation solve_p3(const Scenario& s, const Neighborhoods& nb, const std::vector<Pattern>& patterns,
                         const Vector& arrival, const SolverOptions& opts = {},
                         const std::vector<Index>* serving = nullptr);

struct SparseOutcome {
  ReweightResult reweight;
  std::vector<Pattern> patterns;
  FinalAllocation final;
};

/// Reweighted relaxation, pattern extraction and re-optimization in one call.
SparseOutcome solve_sparse(const Scenario& s, const Neighborhoods& nb, const SparseOptions& opts = {});

}  // namespace spalloc
