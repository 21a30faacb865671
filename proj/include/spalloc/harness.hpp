#pragma once

#include <optional>
#include <string>
#include <vector>

#include "spalloc/global_solver.hpp"
#include "spalloc/scenario_io.hpp"
#include "spalloc/sparse_solver.hpp"

namespace spalloc {

enum class Scheme { p0, sparse, maxrsrp, full_opt, orthogonal };

/// CLI names: p0, sparse, maxrsrp, full-opt, orthogonal.
[[nodiscard]] const char* to_string(Scheme scheme);
Scheme parse_scheme(const std::string& name);

struct SchemeParams {
  Index neighbors = 4;  // strongest links kept per UE
  SparseOptions sparse;
  // Load scale at which the sparse scheme picks its patterns when its
  // throughput is measured; the patterns are then held fixed.
  double reference_scale = 1;
  bool silence_idle = false;  // maxRSRP: APs that no UE picks stay off
  std::uint64_t seed = 0;     // recorded in result rows
};

struct SchemeOutcome {
  Scheme scheme = Scheme::p0;
  SolveStatus status = SolveStatus::infeasible;
  double utility = kInfeasibleUtility;
  RateVector rates;
  Index segments = 0;
  Index active_patterns = 0;
  FinalAllocation allocation;  // P0 appears as one segment per pattern
  double solve_ms = 0;
};

/// Patterns with bandwidth above this count as active in reports.
inline constexpr double kActiveThreshold = 1e-6;

/// One segment per pattern of a global allocation.
FinalAllocation as_segments(const GlobalAllocation& g);

/// P0 is sparsified before its patterns are counted.
SchemeOutcome run_scheme(const Scenario& s, const Neighborhoods& nb, Scheme scheme, const SchemeParams& params);

/// Every (scheme, load scale) point, arrival rates multiplied by the scale.
/// Points run on `workers` threads (0 picks the hardware count); a point
/// that throws is written as an infeasible row and its message is returned
/// in `errors`. Rows come back ordered by scheme list, then scale list.
std::vector<ResultRow> sweep(const Scenario& s, const std::vector<Scheme>& schemes,
                             const std::vector<double>& load_scales, const SchemeParams& params,
                             unsigned workers = 1, std::vector<std::string>* errors = nullptr,
                             bool record_time = false);

struct ThroughputResult {
  double sigma = 0;  // largest load scale known feasible
  double upper = 0;  // smallest load scale known infeasible
  int feasibility_checks = 0;
  std::vector<Pattern> patterns;  // patterns held fixed (all schemes but P0)
};

/// Bisection on the load scale over phase-I feasibility until
/// upper - sigma <= tol. Throws when the scheme cannot carry any load.
ThroughputResult max_throughput(const Scenario& s, const Neighborhoods& nb, Scheme scheme, const SchemeParams& params,
                                double tol = 1e-3);
/// Same bisection with the segment patterns held fixed.
ThroughputResult max_throughput(const Scenario& s, const Neighborhoods& nb, const std::vector<Pattern>& patterns,
                                const SolverOptions& opts = {}, double tol = 1e-3);

struct PatternReport {
  struct Segment {
    Index index = 0;
    Pattern pattern;
    double width = 0;
  };
  struct Association {
    Index ue = 0;
    Index segment = 0;
    Index ap = 0;
    double share = 0;
  };
  Index active_patterns = 0;  // distinct nonempty patterns on segments wider than the threshold
  std::vector<Segment> segments;
  std::vector<Association> associations;  // shares above the threshold, ordered by UE then segment
};

PatternReport report_patterns(const FinalAllocation& a, double threshold = kActiveThreshold);
/// segment,pattern,width with the pattern written as space-separated AP indices.
std::string segments_csv(const PatternReport& r);
/// ue,segment,ap,share
std::string associations_csv(const PatternReport& r);

}  // namespace spalloc
