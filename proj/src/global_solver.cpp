#include "spalloc/global_solver.hpp"

#include <algorithm>
#include <cmath>

#include <Eigen/LU>

#include "spalloc/spectral_table.hpp"

namespace spalloc {

GlobalProblem build_p0(const Scenario& s, const Neighborhoods& nb, Index cap) {
  if (s.num_aps() > cap)
    throw Error("global formulation limited to " + std::to_string(cap) + " APs (got " +
                std::to_string(s.num_aps()) + "); use sparse_solver");
  const Scenario working = restrict_to_links(s, nb);
  const SpectralTable table(working, nb);
  const LocalIndexer serving(nb.active_aps().members());

  GlobalProblem out;
  auto& layout = out.layout;
  Index var = 0;
  const std::uint32_t count = std::uint32_t{1} << serving.size();
  layout.patterns.reserve(count);
  for (std::uint32_t a = 0; a < count; ++a) {
    GlobalLayout::PatternVars pv;
    pv.pattern = serving.to_pattern(a);
    pv.y = var++;
    pv.pattern.for_each([&](Index i) {
      for (Index j : nb.ap_ues[static_cast<std::size_t>(i)])
        pv.links.push_back({i, j, var++, table.get(i, j, pv.pattern)});
    });
    layout.patterns.push_back(std::move(pv));
  }
  layout.num_vars = var;

  auto& p = out.problem;
  p.num_vars = var;
  p.arrival = s.arrival_rates;
  std::vector<Triplet> rate;
  std::vector<Triplet> ineq;
  Index row = 0;
  for (const auto& pv : layout.patterns) {
    for (const auto& l : pv.links)
      if (l.efficiency != 0) rate.emplace_back(l.ue, l.var, l.efficiency);
    // sum_j x_A^{i->j} <= y_A for each member AP
    std::size_t q = 0;
    while (q < pv.links.size()) {
      const Index ap = pv.links[q].ap;
      for (; q < pv.links.size() && pv.links[q].ap == ap; ++q) ineq.emplace_back(row, pv.links[q].var, 1.0);
      ineq.emplace_back(row++, pv.y, -1.0);
    }
  }
  p.rate_map.resize(s.num_ues(), var);
  p.rate_map.setFromTriplets(rate.begin(), rate.end());
  p.ineq.resize(row, var);
  p.ineq.setFromTriplets(ineq.begin(), ineq.end());
  p.ineq_rhs = Vector::Zero(row);

  std::vector<Triplet> eq;
  for (const auto& pv : layout.patterns) eq.emplace_back(0, pv.y, 1.0);
  p.eq.resize(1, var);
  p.eq.setFromTriplets(eq.begin(), eq.end());
  p.eq_rhs = Vector::Ones(1);
  p.eq_independent = true;
  p.nonneg.assign(static_cast<std::size_t>(var), 1);

  p.start.resize(var);
  const double y0 = 1.0 / static_cast<double>(layout.patterns.size());
  for (const auto& pv : layout.patterns) {
    p.start(pv.y) = y0;
    for (const auto& l : pv.links) {
      const auto users = static_cast<double>(nb.ap_ues[static_cast<std::size_t>(l.ap)].size());
      p.start(l.var) = y0 / (users + 1);
    }
  }
  return out;
}

GlobalAllocation global_allocation(const GlobalLayout& layout, const Vector& v, const Vector& arrival) {
  GlobalAllocation a;
  a.rates = Vector::Zero(arrival.size());
  for (const auto& pv : layout.patterns) {
    PatternShare share;
    share.pattern = pv.pattern;
    share.bandwidth = std::max(0.0, v(pv.y));
    for (const auto& l : pv.links) {
      const double x = std::max(0.0, v(l.var));
      share.links.push_back({l.ap, l.ue, x});
      a.rates(l.ue) += l.efficiency * x;
    }
    a.patterns.push_back(std::move(share));
  }
  a.utility = utility_delay(arrival, a.rates);
  return a;
}

GlobalAllocation solve_p0(const Scenario& s, const Neighborhoods& nb, const SolverOptions& opts, Index cap) {
  const GlobalProblem gp = build_p0(s, nb, cap);
  const SolveResult res = solve(gp.problem, opts);
  GlobalAllocation a = global_allocation(gp.layout, res.v, s.arrival_rates);
  a.status = res.status;
  if (res.status == SolveStatus::infeasible) a.utility = kInfeasibleUtility;
  return a;
}

namespace {

struct Column {
  Pattern pattern;
  double y = 0;
  Vector d;                        // rate vector per unit bandwidth
  std::vector<LinkShare> fraction; // x / y
};

Vector null_vector(const Matrix& m) {
  Eigen::FullPivLU<Matrix> lu(m);
  const Matrix k = lu.kernel();
  if (k.cols() == 0 || k.col(0).cwiseAbs().maxCoeff() == 0) throw Error("sparsify: no null direction found");
  Vector v = k.col(0);
  return v / v.cwiseAbs().maxCoeff();
}

// Moves along +delta until the first active column reaches zero (ties to the
// lowest position, which is the lowest bitmask). Returns the step length.
double ratio_step(std::vector<Column>& cols, const std::vector<std::size_t>& active, const Vector& delta) {
  double theta = std::numeric_limits<double>::infinity();
  std::size_t leave = active.size();
  const double tiny = 1e-12;
  for (std::size_t q = 0; q < active.size(); ++q) {
    const double dq = delta(static_cast<Index>(q));
    if (dq >= -tiny) continue;
    const double ratio = cols[active[q]].y / -dq;
    if (ratio < theta) {
      theta = ratio;
      leave = q;
    }
  }
  if (leave == active.size()) throw Error("sparsify: degenerate null direction");
  for (std::size_t q = 0; q < active.size(); ++q)
    cols[active[q]].y = std::max(0.0, cols[active[q]].y + theta * delta(static_cast<Index>(q)));
  cols[active[leave]].y = 0;
  return theta;
}

}  // namespace

GlobalAllocation sparsify(const Scenario& s, const Neighborhoods& nb, const GlobalAllocation& alloc,
                          SparsifyReport* report) {
  const Scenario working = restrict_to_links(s, nb);
  const Index k = s.num_ues();
  const Vector target = rate_global(working, alloc);

  // cols[0] is the idle pattern, a zero rate column.
  std::vector<Column> cols(1);
  cols[0].d = Vector::Zero(k);
  Index input_support = 0;
  std::vector<const PatternShare*> order;
  for (const auto& share : alloc.patterns) order.push_back(&share);
  std::sort(order.begin(), order.end(), [](const PatternShare* a, const PatternShare* b) { return a->pattern < b->pattern; });
  for (const PatternShare* share : order) {
    if (!(share->bandwidth > 0)) continue;
    ++input_support;
    if (share->pattern.empty()) {
      cols[0].y += share->bandwidth;
      continue;
    }
    Column c;
    c.pattern = share->pattern;
    c.y = share->bandwidth;
    c.d = Vector::Zero(k);
    for (const auto& l : share->links) {
      c.d(l.ue) += spectral_efficiency(working, l.ap, l.ue, share->pattern) * l.bandwidth / c.y;
      c.fraction.push_back({l.ap, l.ue, l.bandwidth / c.y});
    }
    cols.push_back(std::move(c));
  }

  auto active_from = [&](std::size_t first) {
    std::vector<std::size_t> a;
    for (std::size_t q = first; q < cols.size(); ++q)
      if (cols[q].y > 0) a.push_back(q);
    return a;
  };

  // Stage 1: Caratheodory on [d; 1], idle column included.
  for (;;) {
    auto active = active_from(0);
    if (active.size() <= static_cast<std::size_t>(k + 1)) break;
    active.resize(static_cast<std::size_t>(k + 2));
    Matrix m(k + 1, k + 2);
    for (std::size_t q = 0; q < active.size(); ++q) {
      m.col(static_cast<Index>(q)).head(k) = cols[active[q]].d;
      m(k, static_cast<Index>(q)) = 1;
    }
    Vector delta = null_vector(m);
    if ((delta.array() < -1e-12).count() == 0) delta = -delta;
    ratio_step(cols, active, delta);
  }

  // Stage 2: rates fixed, total bandwidth of the non-idle patterns may drop;
  // the freed share goes to the idle pattern.
  for (;;) {
    auto active = active_from(1);
    if (active.size() <= static_cast<std::size_t>(k)) break;
    active.resize(static_cast<std::size_t>(k + 1));
    Matrix m(k, k + 1);
    for (std::size_t q = 0; q < active.size(); ++q) m.col(static_cast<Index>(q)) = cols[active[q]].d;
    Vector delta = null_vector(m);
    if (delta.sum() > 0) delta = -delta;
    if ((delta.array() < -1e-12).count() == 0) delta = -delta;
    double before = 0;
    for (std::size_t q : active) before += cols[q].y;
    ratio_step(cols, active, delta);
    double after = 0;
    for (std::size_t q : active) after += cols[q].y;
    cols[0].y += before - after;
  }

  GlobalAllocation out;
  out.status = alloc.status;
  for (const auto& c : cols) {
    if (!(c.y > 0)) continue;
    PatternShare share{c.pattern, c.y, {}};
    for (const auto& f : c.fraction) share.links.push_back({f.ap, f.ue, f.bandwidth * c.y});
    out.patterns.push_back(std::move(share));
  }
  out.rates = rate_global(working, out);
  out.utility = utility_delay(s.arrival_rates, out.rates);

  double err = 0;
  for (Index j = 0; j < k; ++j)
    err = std::max(err, std::abs(out.rates(j) - target(j)) / std::max(std::abs(target(j)), 1e-12));
  if (err > 1e-6) throw Error("sparsify: rates drifted by " + std::to_string(err));
  if (report) {
    report->input_support = input_support;
    report->support = out.support();
    report->nonempty_support = out.support() - (cols[0].y > 0 ? 1 : 0);
    report->at_most_k = report->nonempty_support <= k;
    report->rate_error = err;
  }
  return out;
}

}  // namespace spalloc
