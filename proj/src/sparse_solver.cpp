#include "spalloc/sparse_solver.hpp"

#include <algorithm>
#include <iostream>
#include <cmath>
#include <map>

#include "spalloc/scenario_io.hpp"
#include "spalloc/spectral_table.hpp"

namespace spalloc {

namespace {

constexpr double kWidthFloor = 1e-6;

SegmentLayout make_layout(const Neighborhoods& nb, Index num_segments) {
  SegmentLayout layout;
  layout.num_segments = num_segments;
  Index offset = 0;
  for (Index i = 0; i < nb.num_aps; ++i) {
    if (!nb.serves(i)) continue;
    SegmentLayout::ApBlock b;
    b.ap = i;
    b.nbhd = nb.ap_index[static_cast<std::size_t>(i)];
    b.ues = nb.ap_ues[static_cast<std::size_t>(i)];
    b.offset = offset;
    offset += static_cast<Index>(b.num_patterns()) * b.stride();
    layout.blocks.push_back(std::move(b));
  }
  layout.segment_vars = offset + 1;
  layout.num_vars = layout.segment_vars * num_segments;
  return layout;
}

std::size_t block_of(const SegmentLayout& layout, Index ap) {
  for (std::size_t b = 0; b < layout.blocks.size(); ++b)
    if (layout.blocks[b].ap == ap) return b;
  return layout.blocks.size();
}

// Rows of one consistency triple over segment 0: +1 on the first AP's y,
// -1 on the second's.
template <typename Emit>
void consistency_row(const SegmentLayout& layout, const ConsistencyTriple& t, std::size_t bi, std::size_t bm,
                     Emit emit) {
  const auto& a = layout.blocks[bi];
  const auto& b = layout.blocks[bm];
  const std::uint32_t mi = a.nbhd.translate(b.nbhd.full_mask(), b.nbhd);
  const std::uint32_t mm = b.nbhd.translate(a.nbhd.full_mask(), a.nbhd);
  for (std::uint32_t B = 0; B < a.num_patterns(); ++B)
    if ((B & mi) == t.first_local) emit(layout.y(bi, B, 0), 1.0);
  for (std::uint32_t B = 0; B < b.num_patterns(); ++B)
    if ((B & mm) == t.second_local) emit(layout.y(bm, B, 0), -1.0);
}

}  // namespace

SegmentedProblem build_p1(const Scenario& s, const Neighborhoods& nb, Index num_segments, Index cap) {
  if (num_segments < 1) throw Error("build_p1: num_segments must be at least 1");
  check_neighborhood_cap(nb, cap);
  const Scenario working = restrict_to_links(s, nb);
  const SpectralTable table(working, nb);

  SegmentedProblem out;
  SegmentLayout& layout = out.layout;
  layout = make_layout(nb, num_segments);
  const Index sv = layout.segment_vars;
  const Index L = num_segments;

  // Equality template over one segment: coupling rows, then consistency rows.
  std::vector<Triplet> tmpl;
  Index trow = 0;
  for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
    const auto& blk = layout.blocks[b];
    for (std::uint32_t B = 0; B < blk.num_patterns(); ++B) {
      tmpl.emplace_back(trow, layout.y(b, B, 0), 1.0);
      for (std::size_t q = 0; q < blk.ues.size(); ++q) tmpl.emplace_back(trow, layout.z(b, B, q, 0), -1.0);
      ++trow;
    }
  }
  const Index coupling_rows = trow;
  for (const auto& t : consistency_triples(nb)) {
    const std::size_t bi = block_of(layout, t.first);
    const std::size_t bm = block_of(layout, t.second);
    if (bi == layout.blocks.size() || bm == layout.blocks.size()) continue;
    consistency_row(layout, t, bi, bm, [&](Index col, double val) { tmpl.emplace_back(trow, col, val); });
    ++trow;
  }
  out.consistency_rows = trow - coupling_rows;
  SparseMatrix seg_eq(trow, sv);
  seg_eq.setFromTriplets(tmpl.begin(), tmpl.end());
  const std::vector<Index> keep = independent_rows(seg_eq);
  out.consistency_rows_kept = static_cast<Index>(keep.size()) - coupling_rows;

  ConvexProblem& p = out.problem;
  p.num_vars = layout.num_vars;
  p.arrival = s.arrival_rates;

  std::vector<Triplet> eq;
  Index row = 0;
  for (Index l = 0; l < L; ++l)
    for (Index r : keep) {
      for (SparseMatrix::InnerIterator it(seg_eq, r); it; ++it) eq.emplace_back(row, l * sv + it.col(), it.value());
      ++row;
    }
  for (Index l = 0; l < L; ++l) eq.emplace_back(row, layout.h(l), 1.0);
  ++row;
  p.eq.resize(row, p.num_vars);
  p.eq.setFromTriplets(eq.begin(), eq.end());
  p.eq_rhs = Vector::Zero(row);
  p.eq_rhs(row - 1) = 1.0;
  p.eq_independent = true;

  std::vector<Triplet> ineq;
  row = 0;
  for (Index l = 0; l < L; ++l)
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
      for (std::uint32_t B = 0; B < layout.blocks[b].num_patterns(); ++B) ineq.emplace_back(row, layout.y(b, B, l), 1.0);
      ineq.emplace_back(row++, layout.h(l), -1.0);
    }
  p.ineq.resize(row, p.num_vars);
  p.ineq.setFromTriplets(ineq.begin(), ineq.end());
  p.ineq_rhs = Vector::Zero(row);

  std::vector<Triplet> rate;
  for (Index l = 0; l < L; ++l)
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
      const auto& blk = layout.blocks[b];
      const int self = blk.nbhd.position(blk.ap);
      for (std::uint32_t B = 0; B < blk.num_patterns(); ++B) {
        if (!(B >> self & 1u)) continue;
        for (std::size_t q = 0; q < blk.ues.size(); ++q) {
          const Index j = blk.ues[q];
          const auto& ue_idx = nb.ue_index[static_cast<std::size_t>(j)];
          const double eff = table.get(j, ue_idx.position(blk.ap), ue_idx.translate(B, blk.nbhd));
          if (eff != 0) rate.emplace_back(j, layout.z(b, B, q, l), eff);
        }
      }
    }
  p.rate_map.resize(s.num_ues(), p.num_vars);
  p.rate_map.setFromTriplets(rate.begin(), rate.end());
  p.nonneg.assign(static_cast<std::size_t>(p.num_vars), 1);

  // Independent activity with probability 1/2 per AP is consistent across
  // every pair of neighborhoods; halving it leaves each segment slack.
  p.start.resize(p.num_vars);
  const double h0 = 1.0 / static_cast<double>(L);
  for (Index l = 0; l < L; ++l) {
    p.start(layout.h(l)) = h0;
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
      const auto& blk = layout.blocks[b];
      const double y0 = 0.5 * h0 / static_cast<double>(blk.num_patterns());
      const double z0 = y0 / static_cast<double>(blk.ues.size());
      for (std::uint32_t B = 0; B < blk.num_patterns(); ++B) {
        double sum = 0;
        for (std::size_t q = 0; q < blk.ues.size(); ++q) {
          p.start(layout.z(b, B, q, l)) = z0;
          sum += z0;
        }
        p.start(layout.y(b, B, l)) = sum;
      }
    }
  }
  return out;
}

SegmentedAllocation segmented_allocation(const SegmentedProblem& p1, const Vector& v) {
  const auto& layout = p1.layout;
  SegmentedAllocation a;
  a.num_segments = layout.num_segments;
  a.v = v;
  a.h.resize(layout.num_segments);
  a.y.resize(static_cast<std::size_t>(layout.num_segments));
  a.z.resize(static_cast<std::size_t>(layout.num_segments));
  for (Index l = 0; l < layout.num_segments; ++l) {
    a.h(l) = std::max(0.0, v(layout.h(l)));
    auto& ys = a.y[static_cast<std::size_t>(l)];
    auto& zs = a.z[static_cast<std::size_t>(l)];
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
      const auto& blk = layout.blocks[b];
      Vector y = Vector::Zero(blk.num_patterns());
      Matrix z(blk.num_patterns(), static_cast<Index>(blk.ues.size()));
      for (std::uint32_t B = 0; B < blk.num_patterns(); ++B)
        for (std::size_t q = 0; q < blk.ues.size(); ++q) {
          z(B, static_cast<Index>(q)) = std::max(0.0, v(layout.z(b, B, q, l)));
          y(B) += z(B, static_cast<Index>(q));
        }
      ys.push_back(std::move(y));
      zs.push_back(std::move(z));
    }
  }
  Vector clamped = v.cwiseMax(0.0);
  a.rates = p1.problem.rates(clamped);
  a.utility = utility_delay(p1.problem.arrival, a.rates);
  return a;
}

double consistency_residual(const SegmentedAllocation& seg, const SegmentLayout& layout, const Neighborhoods& nb) {
  double worst = 0;
  const auto triples = consistency_triples(nb);
  for (Index l = 0; l < seg.num_segments; ++l) {
    const auto& ys = seg.y[static_cast<std::size_t>(l)];
    for (const auto& t : triples) {
      const std::size_t bi = block_of(layout, t.first);
      const std::size_t bm = block_of(layout, t.second);
      if (bi == layout.blocks.size() || bm == layout.blocks.size()) continue;
      double diff = 0;
      consistency_row(layout, t, bi, bm, [&](Index col, double val) {
        // Columns are segment-0 offsets; map back to (block, mask).
        const std::size_t b = val > 0 ? bi : bm;
        const auto mask = static_cast<Index>((col - layout.blocks[b].offset) / layout.blocks[b].stride());
        diff += val * ys[b](mask);
      });
      worst = std::max(worst, std::abs(diff));
    }
  }
  return worst;
}

namespace {

SegmentedAllocation finish(const SegmentedProblem& p1, const SolveResult& res) {
  // Elastic slacks live past the segmented variables and are dropped here.
  SegmentedAllocation a = segmented_allocation(p1, res.v.head(p1.problem.num_vars));
  a.status = res.status;
  a.iterations = res.iterations;
  if (res.status == SolveStatus::infeasible) a.utility = kInfeasibleUtility;
  return a;
}

}  // namespace

SegmentedAllocation solve_p1(const SegmentedProblem& p1, const SolverOptions& opts) {
  return finish(p1, solve(p1.problem, opts));
}

WeightState random_weights(const SegmentLayout& layout, double alpha, std::uint64_t seed) {
  if (!(alpha > 0)) throw Error("reweighting: alpha must be > 0");
  WeightState w;
  w.alpha = alpha;
  w.rng_seed = seed;
  Rng rng(seed);
  w.w.resize(static_cast<std::size_t>(layout.num_segments));
  for (auto& seg : w.w)
    for (const auto& blk : layout.blocks) {
      Vector v(blk.num_patterns());
      for (Index q = 0; q < v.size(); ++q) v(q) = rng.uniform();
      seg.push_back(std::move(v));
    }
  return w;
}

WeightState constant_weights(const SegmentLayout& layout, double alpha, double value) {
  if (!(alpha > 0)) throw Error("reweighting: alpha must be > 0");
  if (!(value > 0)) throw Error("reweighting: weights must be > 0");
  WeightState w;
  w.alpha = alpha;
  w.w.resize(static_cast<std::size_t>(layout.num_segments));
  for (auto& seg : w.w)
    for (const auto& blk : layout.blocks) seg.push_back(Vector::Constant(blk.num_patterns(), value));
  return w;
}

void update_weights(WeightState& w, const SegmentedAllocation& seg) {
  for (std::size_t l = 0; l < w.w.size(); ++l) {
    const double h = std::max(seg.h(static_cast<Index>(l)), kWidthFloor);
    for (std::size_t b = 0; b < w.w[l].size(); ++b)
      w.w[l][b] = (seg.y[l][b].array() + w.alpha * h).inverse().matrix();
  }
  ++w.iteration;
}

SegmentedAllocation solve_p2(const SegmentedProblem& p1, const WeightState& w, const P2Params& params,
                             const Vector* warm, const SolverOptions& opts) {
  const auto& layout = p1.layout;
  if (static_cast<Index>(w.w.size()) != layout.num_segments) throw Error("solve_p2: weight shape mismatch");
  for (Index l = 0; l < layout.num_segments; ++l)
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
      const Vector& wv = w.w[static_cast<std::size_t>(l)][b];
      if (wv.size() != static_cast<Index>(layout.blocks[b].num_patterns()) || !(wv.array() > 0).all())
        throw Error("solve_p2: weights must be positive with one entry per local pattern");
    }
  ConvexProblem p = p1.problem;
  if (params.form == P2Form::penalty) {
    if (!(params.rho >= 0)) throw Error("solve_p2: penalty weight must be >= 0");
    p.cost = Vector::Zero(p.num_vars);
    for (Index l = 0; l < layout.num_segments; ++l)
      for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
        const Vector& wv = w.w[static_cast<std::size_t>(l)][b];
        for (std::uint32_t B = 0; B < layout.blocks[b].num_patterns(); ++B)
          p.cost(layout.y(b, B, l)) = params.rho * wv(B);
      }
  } else {
    const bool elastic = params.form == P2Form::elastic;
    if (elastic && !(params.rho > 0)) throw Error("solve_p2: elastic form needs a positive penalty weight");
    const Index base = p.ineq.rows();
    const Index extra = layout.num_segments * static_cast<Index>(layout.blocks.size());
    const Index n1 = p.num_vars;
    if (elastic) p.num_vars += extra;
    Vector start(p.num_vars);
    start.head(n1) = warm ? warm->head(n1) : p1.problem.start;
    std::vector<Triplet> trips;
    trips.reserve(static_cast<std::size_t>(p.ineq.nonZeros()));
    for (Index r = 0; r < base; ++r)
      for (SparseMatrix::InnerIterator it(p.ineq, r); it; ++it) trips.emplace_back(r, it.col(), it.value());
    Index row = base;
    for (Index l = 0; l < layout.num_segments; ++l)
      for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
        const Vector& wv = w.w[static_cast<std::size_t>(l)][b];
        double load = 0;
        for (std::uint32_t B = 0; B < layout.blocks[b].num_patterns(); ++B) {
          trips.emplace_back(row, layout.y(b, B, l), wv(B));
          load += wv(B) * start(layout.y(b, B, l));
        }
        if (elastic) {
          // Slack s >= 0 absorbs sum w y beyond 1 at price rho; it starts
          // strictly inside its row.
          const Index sv = n1 + (row - base);
          trips.emplace_back(row, sv, -1.0);
          start(sv) = std::max(0.0, load - 1.0) + 1e-2;
        }
        ++row;
      }
    p.ineq.resize(base + extra, p.num_vars);
    p.ineq.setFromTriplets(trips.begin(), trips.end());
    p.ineq_rhs.conservativeResize(base + extra);
    p.ineq_rhs.tail(extra).setOnes();
    if (elastic) {
      p.rate_map.conservativeResize(p.rate_map.rows(), p.num_vars);
      p.eq.conservativeResize(p.eq.rows(), p.num_vars);
      p.nonneg.resize(static_cast<std::size_t>(p.num_vars), 1);
      p.cost = Vector::Zero(p.num_vars);
      p.cost.tail(extra).setConstant(params.rho);
    }
    p.start = start;
    return finish(p1, solve(p, opts));
  }
  if (warm) p.start = *warm;
  return finish(p1, solve(p, opts));
}

ReweightResult reweighted_l1(const SegmentedProblem& p1, const SparseOptions& opts) {
  if (opts.t_max < 1) throw Error("reweighting: t_max must be at least 1");
  if (!(opts.penalty >= 0)) throw Error("reweighting: penalty must be >= 0");
  SolverOptions so = opts.solver;
  so.gap_tol = std::max(so.gap_tol, opts.reweight_gap_tol);
  ReweightResult out;
  out.weights = random_weights(p1.layout, opts.alpha, opts.seed);
  P2Params params;
  params.form = opts.form;
  const Vector* warm = nullptr;
  if (opts.form != P2Form::constraint) {
    // The penalty is scaled so that one pattern per AP and segment costs
    // `penalty` times the unpenalized delay.
    out.reference = solve_p1(p1, so);
    if (out.reference.status != SolveStatus::optimal) {
      out.stop_status = out.reference.status;
      out.allocation = out.reference;
      return out;
    }
    const auto blocks = static_cast<double>(p1.layout.num_segments * static_cast<Index>(p1.layout.blocks.size()));
    params.rho = opts.penalty * std::max(std::abs(out.reference.utility), 1e-9) / blocks;
    warm = &out.reference.v;
    // Uniform draws below 1 never bind: sum w y < sum y <= h <= 1. They
    // scale the update rule applied to the reference instead, which is
    // what breaks the symmetry between segments.
    WeightState informed = out.weights;
    update_weights(informed, out.reference);
    for (std::size_t l = 0; l < informed.w.size(); ++l)
      for (std::size_t b = 0; b < informed.w[l].size(); ++b)
        out.weights.w[l][b] = out.weights.w[l][b].cwiseProduct(informed.w[l][b]);
  }
  // A warm start is already near the old optimum, so its solve starts at
  // the barrier weight where the gap is about warm_gap relative to |u|.
  auto warm_options = [&](double u) {
    SolverOptions o = so;
    const double terms = static_cast<double>(p1.problem.num_vars);
    o.initial_barrier = std::max(so.initial_barrier, terms / (opts.warm_gap * std::max(1.0, std::abs(u))));
    return o;
  };
  for (int t = 0; t < opts.t_max; ++t) {
    const double u_prev = t > 0 ? out.allocation.utility : out.reference.utility;
    SegmentedAllocation next = solve_p2(p1, out.weights, params, warm, warm ? warm_options(u_prev) : so);
    ++out.iterations;
    if (next.status != SolveStatus::optimal) {
      if (so.verbose) std::clog << "reweight " << t << ' ' << to_string(next.status) << '\n';
      out.stop_status = next.status;
      // Keep the last solved iterate. A first failure falls back on the
      // unpenalized reference when there is one.
      if (t == 0) out.allocation = warm ? out.reference : std::move(next);
      return out;
    }
    if (t > 0) {
      double change = 0;
      for (std::size_t l = 0; l < next.y.size(); ++l)
        for (std::size_t b = 0; b < next.y[l].size(); ++b)
          change = std::max(change, (next.y[l][b] - out.allocation.y[l][b]).cwiseAbs().maxCoeff());
      out.last_change = change;
      out.converged = change < opts.conv_tol;
    }
    if (so.verbose) {
      std::vector<Pattern> pats = extract_patterns(next, p1.layout);
      std::sort(pats.begin(), pats.end());
      pats.erase(std::unique(pats.begin(), pats.end()), pats.end());
      std::clog << "reweight " << t << " u " << next.utility << " newton " << next.iterations << " change "
                << out.last_change << " patterns " << pats.size() << '\n';
    }
    if (opts.on_iterate) opts.on_iterate(t, next);
    out.allocation = std::move(next);
    if (out.converged) break;
    update_weights(out.weights, out.allocation);
    warm = &out.allocation.v;
  }
  return out;
}

std::vector<Pattern> extract_patterns(const SegmentedAllocation& seg, const SegmentLayout& layout) {
  std::vector<Pattern> out(static_cast<std::size_t>(seg.num_segments));
  for (std::size_t l = 0; l < out.size(); ++l)
    for (std::size_t b = 0; b < layout.blocks.size(); ++b) {
      const Vector& y = seg.y[l][b];
      std::uint32_t best = 0;
      for (std::uint32_t B = 1; B < static_cast<std::uint32_t>(y.size()); ++B)
        if (y(B) > y(best)) best = B;
      if (!(y(best) > 0)) continue;
      const auto& blk = layout.blocks[b];
      if (best >> blk.nbhd.position(blk.ap) & 1u) out[l].insert(blk.ap);
    }
  return out;
}

Index FinalAllocation::active_patterns(double threshold) const {
  std::vector<Pattern> seen;
  for (std::size_t l = 0; l < patterns.size(); ++l)
    if (h(static_cast<Index>(l)) > threshold && !patterns[l].empty()) seen.push_back(patterns[l]);
  std::sort(seen.begin(), seen.end());
  return static_cast<Index>(std::unique(seen.begin(), seen.end()) - seen.begin());
}

GlobalAllocation FinalAllocation::to_global() const {
  std::map<Pattern, std::size_t> where;
  GlobalAllocation g;
  for (std::size_t l = 0; l < patterns.size(); ++l) {
    auto [it, fresh] = where.emplace(patterns[l], g.patterns.size());
    if (fresh) g.patterns.push_back({patterns[l], 0.0, {}});
    PatternShare& share = g.patterns[it->second];
    share.bandwidth += h(static_cast<Index>(l));
    for (const auto& x : xbar[l]) {
      auto found = std::find_if(share.links.begin(), share.links.end(),
                                [&](const LinkShare& e) { return e.ap == x.ap && e.ue == x.ue; });
      if (found == share.links.end())
        share.links.push_back(x);
      else
        found->bandwidth += x.bandwidth;
    }
  }
  g.rates = rates;
  g.utility = utility;
  g.status = status;
  return g;
}

FixedPatternProblem build_p3(const Scenario& s, const Neighborhoods& nb, const std::vector<Pattern>& patterns,
                             const Vector& arrival, const std::vector<Index>* serving) {
  if (patterns.empty()) throw Error("solve_p3: at least one segment required");
  if (arrival.size() != s.num_ues()) throw Error("solve_p3: arrival length mismatch");
  if (serving && static_cast<Index>(serving->size()) != s.num_ues()) throw Error("solve_p3: serving length mismatch");
  const Scenario working = restrict_to_links(s, nb);
  const SpectralTable table(working, nb);
  const auto L = static_cast<Index>(patterns.size());

  FixedPatternProblem out;
  out.patterns = patterns;
  out.h_vars.resize(static_cast<std::size_t>(L));
  ConvexProblem& p = out.problem;
  std::vector<Triplet> rate;
  std::vector<Triplet> ineq;
  Index var = 0;
  Index row = 0;
  for (Index l = 0; l < L; ++l) {
    const Pattern& a = patterns[static_cast<std::size_t>(l)];
    out.h_vars[static_cast<std::size_t>(l)] = var++;
    a.for_each([&](Index i) {
      if (i >= nb.num_aps || !nb.serves(i)) return;
      bool any = false;
      for (Index j : nb.ap_ues[static_cast<std::size_t>(i)]) {
        if (serving && (*serving)[static_cast<std::size_t>(j)] != i) continue;
        out.links.push_back({l, i, j, var});
        rate.emplace_back(j, var, table.get(i, j, a));
        ineq.emplace_back(row, var++, 1.0);
        any = true;
      }
      if (any) ineq.emplace_back(row++, out.h_vars[static_cast<std::size_t>(l)], -1.0);
    });
  }
  p.num_vars = var;
  p.arrival = arrival;
  p.rate_map.resize(s.num_ues(), var);
  p.rate_map.setFromTriplets(rate.begin(), rate.end());
  p.ineq.resize(row, var);
  p.ineq.setFromTriplets(ineq.begin(), ineq.end());
  p.ineq_rhs = Vector::Zero(row);
  std::vector<Triplet> eq;
  for (Index h : out.h_vars) eq.emplace_back(0, h, 1.0);
  p.eq.resize(1, var);
  p.eq.setFromTriplets(eq.begin(), eq.end());
  p.eq_rhs = Vector::Ones(1);
  p.eq_independent = true;
  p.nonneg.assign(static_cast<std::size_t>(var), 1);
  p.start.resize(var);
  const double h0 = 1.0 / static_cast<double>(L);
  for (Index h : out.h_vars) p.start(h) = h0;
  for (const auto& x : out.links)
    p.start(x.var) = h0 / static_cast<double>(nb.ap_ues[static_cast<std::size_t>(x.ap)].size() + 1);
  return out;
}

FinalAllocation final_allocation(const FixedPatternProblem& p3, const SolveResult& res) {
  const auto L = static_cast<Index>(p3.patterns.size());
  FinalAllocation out;
  out.patterns = p3.patterns;
  out.status = res.status;
  out.h.resize(L);
  for (Index l = 0; l < L; ++l) out.h(l) = std::max(0.0, res.v(p3.h_vars[static_cast<std::size_t>(l)]));
  out.xbar.resize(static_cast<std::size_t>(L));
  for (const auto& x : p3.links)
    out.xbar[static_cast<std::size_t>(x.segment)].push_back({x.ap, x.ue, std::max(0.0, res.v(x.var))});
  out.rates = p3.problem.rates(res.v.cwiseMax(0.0));
  out.utility =
      res.status == SolveStatus::infeasible ? kInfeasibleUtility : utility_delay(p3.problem.arrival, out.rates);
  return out;
}

FinalAllocation solve_p3(const Scenario& s, const Neighborhoods& nb, const std::vector<Pattern>& patterns,
                         const Vector& arrival, const SolverOptions& opts, const std::vector<Index>* serving) {
  const FixedPatternProblem p3 = build_p3(s, nb, patterns, arrival, serving);
  return final_allocation(p3, solve(p3.problem, opts));
}

SparseOutcome solve_sparse(const Scenario& s, const Neighborhoods& nb, const SparseOptions& opts) {
  const Index segments = opts.num_segments > 0 ? opts.num_segments : s.num_ues() + 1;
  const SegmentedProblem p1 = build_p1(s, nb, segments);
  SparseOutcome out;
  out.reweight = reweighted_l1(p1, opts);
  if (out.reweight.allocation.status != SolveStatus::optimal) {
    out.final.status = out.reweight.allocation.status;
    out.final.rates = out.reweight.allocation.rates;
    return out;
  }
  out.patterns = extract_patterns(out.reweight.allocation, p1.layout);
  out.final = solve_p3(s, nb, out.patterns, s.arrival_rates, opts.solver);
  return out;
}

}  // namespace spalloc
