#include "spalloc/baselines.hpp"

namespace spalloc {

std::vector<Index> maxrsrp_association(const Scenario& s, const Neighborhoods& nb) {
  std::vector<Index> out(static_cast<std::size_t>(s.num_ues()), -1);
  for (Index j = 0; j < s.num_ues(); ++j) {
    double best = 0;
    nb.ue_nbhd[static_cast<std::size_t>(j)].for_each([&](Index i) {
      const double p = s.tx_psd(i) * s.gain(i, j);
      if (p > best) {
        best = p;
        out[static_cast<std::size_t>(j)] = i;
      }
    });
    if (out[static_cast<std::size_t>(j)] < 0) throw Error("maxrsrp: UE " + std::to_string(j) + " has no linked AP");
  }
  return out;
}

namespace {
Pattern serving_aps(const Neighborhoods& nb) {
  Pattern on;
  for (Index i = 0; i < nb.num_aps; ++i)
    if (nb.serves(i)) on.insert(i);
  return on;
}
}  // namespace

FixedPatternProblem maxrsrp_problem(const Scenario& s, const Neighborhoods& nb, bool silence_idle) {
  const std::vector<Index> assoc = maxrsrp_association(s, nb);
  Pattern on;
  if (silence_idle)
    for (Index i : assoc) on.insert(i);
  else
    on = serving_aps(nb);
  return build_p3(s, nb, {on}, s.arrival_rates, &assoc);
}

FixedPatternProblem full_reuse_problem(const Scenario& s, const Neighborhoods& nb) {
  return build_p3(s, nb, {serving_aps(nb)}, s.arrival_rates);
}

FixedPatternProblem orthogonal_problem(const Scenario& s, const Neighborhoods& nb) {
  std::vector<Pattern> segments(static_cast<std::size_t>(s.num_aps()));
  for (Index i = 0; i < s.num_aps(); ++i) segments[static_cast<std::size_t>(i)].insert(i);
  return build_p3(s, nb, segments, s.arrival_rates);
}

namespace {
FinalAllocation solved(const FixedPatternProblem& p3, const SolverOptions& opts) {
  return final_allocation(p3, solve(p3.problem, opts));
}
}  // namespace

FinalAllocation full_reuse_maxrsrp(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts,
                                   bool silence_idle) {
  return solved(maxrsrp_problem(s, nb, silence_idle), opts);
}

FinalAllocation full_reuse_optimized(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts) {
  return solved(full_reuse_problem(s, nb), opts);
}

FinalAllocation orthogonal_optimal(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts) {
  return solved(orthogonal_problem(s, nb), opts);
}

}  // namespace spalloc
