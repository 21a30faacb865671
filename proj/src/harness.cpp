#include "spalloc/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <sstream>
#include <thread>

#include "spalloc/baselines.hpp"

namespace spalloc {

namespace {

struct SchemeName {
  Scheme scheme;
  const char* name;
};
constexpr SchemeName kSchemes[] = {{Scheme::p0, "p0"},
                                   {Scheme::sparse, "sparse"},
                                   {Scheme::maxrsrp, "maxrsrp"},
                                   {Scheme::full_opt, "full-opt"},
                                   {Scheme::orthogonal, "orthogonal"}};

std::string pattern_members(const Pattern& p) {
  std::string out;
  p.for_each([&](Index i) {
    if (!out.empty()) out += ' ';
    out += std::to_string(i);
  });
  return out;
}

}  // namespace

const char* to_string(Scheme scheme) {
  for (const auto& s : kSchemes)
    if (s.scheme == scheme) return s.name;
  return "unknown";
}

Scheme parse_scheme(const std::string& name) {
  for (const auto& s : kSchemes)
    if (name == s.name) return s.scheme;
  throw Error("unknown scheme '" + name + "' (expected p0, sparse, maxrsrp, full-opt or orthogonal)");
}

FinalAllocation as_segments(const GlobalAllocation& g) {
  FinalAllocation out;
  out.status = g.status;
  out.rates = g.rates;
  out.utility = g.utility;
  out.h.resize(static_cast<Index>(g.patterns.size()));
  for (std::size_t q = 0; q < g.patterns.size(); ++q) {
    out.patterns.push_back(g.patterns[q].pattern);
    out.h(static_cast<Index>(q)) = g.patterns[q].bandwidth;
    out.xbar.push_back(g.patterns[q].links);
  }
  return out;
}

SchemeOutcome run_scheme(const Scenario& s, const Neighborhoods& nb, Scheme scheme, const SchemeParams& params) {
  const auto t0 = std::chrono::steady_clock::now();
  const SolverOptions& opts = params.sparse.solver;
  SchemeOutcome out;
  out.scheme = scheme;
  switch (scheme) {
    case Scheme::p0: {
      const GlobalAllocation g = solve_p0(s, nb, opts);
      out.allocation = as_segments(g.status == SolveStatus::optimal ? sparsify(s, nb, g) : g);
      out.allocation.utility = g.utility;
      out.allocation.status = g.status;
      break;
    }
    case Scheme::sparse:
      out.allocation = solve_sparse(s, nb, params.sparse).final;
      break;
    case Scheme::maxrsrp:
      out.allocation = full_reuse_maxrsrp(s, nb, opts, params.silence_idle);
      break;
    case Scheme::full_opt:
      out.allocation = full_reuse_optimized(s, nb, opts);
      break;
    case Scheme::orthogonal:
      out.allocation = orthogonal_optimal(s, nb, opts);
      break;
  }
  out.status = out.allocation.status;
  out.utility = out.status == SolveStatus::optimal ? out.allocation.utility : kInfeasibleUtility;
  out.rates = out.allocation.rates;
  out.segments = static_cast<Index>(out.allocation.patterns.size());
  out.active_patterns = out.status == SolveStatus::optimal ? out.allocation.active_patterns(kActiveThreshold) : 0;
  out.solve_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - t0).count();
  return out;
}

std::vector<ResultRow> sweep(const Scenario& s, const std::vector<Scheme>& schemes,
                             const std::vector<double>& load_scales, const SchemeParams& params, unsigned workers,
                             std::vector<std::string>* errors, bool record_time) {
  for (double scale : load_scales)
    if (!(scale > 0)) throw Error("sweep: load scales must be > 0");
  const Neighborhoods nb = build_neighborhoods(s, params.neighbors);
  const std::size_t points = schemes.size() * load_scales.size();
  std::vector<ResultRow> rows(points);
  std::vector<std::string> messages(points);

  auto run = [&](std::size_t idx) {
    const Scheme scheme = schemes[idx / load_scales.size()];
    const double scale = load_scales[idx % load_scales.size()];
    const Scenario scaled = scale_load(s, scale);
    ResultRow& row = rows[idx];
    row.scheme = to_string(scheme);
    row.seed = params.seed;
    row.n = s.num_aps();
    row.k = s.num_ues();
    row.load_scale = scale;
    row.total_arrival_pps = scaled.arrival_rates.sum();
    row.utility = kInfeasibleUtility;
    row.avg_delay_s = average_delay(scaled.arrival_rates, kInfeasibleUtility);
    try {
      const SchemeOutcome o = run_scheme(scaled, nb, scheme, params);
      row.segments = o.segments;
      row.utility = o.utility;
      row.avg_delay_s = average_delay(scaled.arrival_rates, o.utility);
      row.active_patterns = o.active_patterns;
      if (record_time) row.solve_ms = o.solve_ms;
    } catch (const std::exception& e) {
      messages[idx] = std::string(row.scheme) + " at load " + format_number(scale) + ": " + e.what();
    }
  };

  if (workers == 0) workers = std::max(1u, std::thread::hardware_concurrency());
  workers = static_cast<unsigned>(std::min<std::size_t>(workers, std::max<std::size_t>(points, 1)));
  std::atomic<std::size_t> next{0};
  auto worker = [&] {
    for (std::size_t idx = next++; idx < points; idx = next++) run(idx);
  };
  if (workers <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (unsigned w = 0; w < workers; ++w) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (errors)
    for (auto& m : messages)
      if (!m.empty()) errors->push_back(std::move(m));
  return rows;
}

namespace {

// Doubling to bracket, then bisection over phase-I feasibility.
void bisect_load(ConvexProblem p, const Vector& base, const SolverOptions& opts, double tol, const char* name,
                 ThroughputResult& out) {
  if (!(tol > 0)) throw Error("max_throughput: tol must be > 0");
  if (!(base.array() > 0).any()) throw Error("max_throughput: scenario has no load");
  drop_dependent_equalities(p);
  auto feasible = [&](double scale) {
    ++out.feasibility_checks;
    p.arrival = scale * base;
    return phase_one(p, opts).feasible;
  };
  constexpr double kTiny = 1e-9;
  constexpr double kHuge = 1e12;
  if (!feasible(kTiny)) throw Error(std::string("max_throughput: ") + name + " cannot carry any load");
  double lo = kTiny;
  double hi = 1;
  while (feasible(hi)) {
    lo = hi;
    hi *= 2;
    if (hi > kHuge) throw Error("max_throughput: no upper bound found");
  }
  while (hi - lo > tol) {
    const double mid = 0.5 * (lo + hi);
    (feasible(mid) ? lo : hi) = mid;
  }
  out.sigma = lo;
  out.upper = hi;
}

}  // namespace

ThroughputResult max_throughput(const Scenario& s, const Neighborhoods& nb, Scheme scheme, const SchemeParams& params,
                                double tol) {
  if (!(tol > 0)) throw Error("max_throughput: tol must be > 0");
  if (!(s.arrival_rates.array() > 0).any()) throw Error("max_throughput: scenario has no load");
  ThroughputResult out;
  ConvexProblem p;
  switch (scheme) {
    case Scheme::p0:
      p = build_p0(s, nb).problem;
      break;
    case Scheme::sparse: {
      const Scenario reference = scale_load(s, params.reference_scale);
      const SparseOutcome so = solve_sparse(reference, nb, params.sparse);
      if (so.patterns.empty())
        throw Error("max_throughput: sparse patterns unavailable, reference load " +
                    format_number(params.reference_scale) + " is " + to_string(so.final.status));
      return max_throughput(s, nb, so.patterns, params.sparse.solver, tol);
    }
    case Scheme::maxrsrp:
    case Scheme::full_opt:
    case Scheme::orthogonal: {
      FixedPatternProblem p3 = scheme == Scheme::maxrsrp    ? maxrsrp_problem(s, nb, params.silence_idle)
                               : scheme == Scheme::full_opt ? full_reuse_problem(s, nb)
                                                            : orthogonal_problem(s, nb);
      out.patterns = p3.patterns;
      p = std::move(p3.problem);
      break;
    }
  }
  bisect_load(std::move(p), s.arrival_rates, params.sparse.solver, tol, to_string(scheme), out);
  return out;
}

ThroughputResult max_throughput(const Scenario& s, const Neighborhoods& nb, const std::vector<Pattern>& patterns,
                                const SolverOptions& opts, double tol) {
  FixedPatternProblem p3 = build_p3(s, nb, patterns, s.arrival_rates);
  ThroughputResult out;
  out.patterns = p3.patterns;
  bisect_load(std::move(p3.problem), s.arrival_rates, opts, tol, "fixed patterns", out);
  return out;
}

PatternReport report_patterns(const FinalAllocation& a, double threshold) {
  PatternReport r;
  r.active_patterns = a.active_patterns(threshold);
  for (std::size_t l = 0; l < a.patterns.size(); ++l)
    r.segments.push_back({static_cast<Index>(l), a.patterns[l], a.h(static_cast<Index>(l))});
  for (std::size_t l = 0; l < a.xbar.size(); ++l)
    for (const auto& x : a.xbar[l])
      if (x.bandwidth > threshold) r.associations.push_back({x.ue, static_cast<Index>(l), x.ap, x.bandwidth});
  std::stable_sort(r.associations.begin(), r.associations.end(),
                   [](const auto& x, const auto& y) { return std::tie(x.ue, x.segment) < std::tie(y.ue, y.segment); });
  return r;
}

std::string segments_csv(const PatternReport& r) {
  std::ostringstream o;
  o << "segment,pattern,width\n";
  for (const auto& s : r.segments) o << s.index << ',' << pattern_members(s.pattern) << ',' << format_number(s.width) << '\n';
  return o.str();
}

std::string associations_csv(const PatternReport& r) {
  std::ostringstream o;
  o << "ue,segment,ap,share\n";
  for (const auto& a : r.associations)
    o << a.ue << ',' << a.segment << ',' << a.ap << ',' << format_number(a.share) << '\n';
  return o.str();
}

}  // namespace spalloc
