#include "spalloc/model.hpp"

namespace spalloc {

const char* to_string(SolveStatus status) {
  switch (status) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::max_iterations: return "max-iterations";
  }
  return "unknown";
}

Index GlobalAllocation::support(double threshold) const {
  Index n = 0;
  for (const auto& p : patterns)
    if (p.bandwidth > threshold) ++n;
  return n;
}

}  // namespace spalloc
