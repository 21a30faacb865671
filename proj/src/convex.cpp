#include "spalloc/convex.hpp"

#include <algorithm>
#include <optional>
#include <cmath>
#include <iostream>
#include <limits>

#include <Eigen/Cholesky>
#include <Eigen/OrderingMethods>
#include <Eigen/SparseCholesky>
#include <Eigen/SparseQR>

#include "pivot_ldlt.hpp"

namespace spalloc {

using ColMatrix = Eigen::SparseMatrix<double, Eigen::ColMajor>;
using Wide = long double;

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

bool finite(const SparseMatrix& m) {
  for (Index k = 0; k < m.outerSize(); ++k)
    for (SparseMatrix::InnerIterator it(m, k); it; ++it)
      if (!std::isfinite(it.value())) return false;
  return true;
}

// Rows of `rows` (a column-major view of E transposed) that are linearly
// independent, found by column-pivoted sparse QR.
std::vector<Index> qr_independent(const ColMatrix& et) {
  Eigen::SparseQR<ColMatrix, Eigen::COLAMDOrdering<int>> qr;
  qr.compute(et);
  if (qr.info() != Eigen::Success) throw Error("equality presolve: QR failed");
  std::vector<Index> keep;
  const auto& perm = qr.colsPermutation().indices();
  for (Index r = 0; r < qr.rank(); ++r) keep.push_back(perm(r));
  std::sort(keep.begin(), keep.end());
  return keep;
}

}  // namespace

std::vector<Index> independent_rows(const SparseMatrix& e) {
  const Index m = e.rows();
  std::vector<int> col_count(static_cast<std::size_t>(e.cols()), 0);
  for (Index r = 0; r < m; ++r)
    for (SparseMatrix::InnerIterator it(e, r); it; ++it)
      if (it.value() != 0) ++col_count[static_cast<std::size_t>(it.col())];

  std::vector<Index> keep;
  std::vector<Index> rest;
  for (Index r = 0; r < m; ++r) {
    bool owns = false;
    bool empty = true;
    for (SparseMatrix::InnerIterator it(e, r); it; ++it) {
      if (it.value() == 0) continue;
      empty = false;
      if (col_count[static_cast<std::size_t>(it.col())] == 1) owns = true;
    }
    if (owns)
      keep.push_back(r);
    else if (!empty)
      rest.push_back(r);
  }
  if (rest.empty()) return keep;

  // A private column makes a row independent of everything else, so only
  // the remaining rows need the factorization, over the columns they touch.
  std::vector<Index> col_map(static_cast<std::size_t>(e.cols()), -1);
  Index used = 0;
  std::vector<Triplet> trips;
  for (std::size_t q = 0; q < rest.size(); ++q)
    for (SparseMatrix::InnerIterator it(e, rest[q]); it; ++it) {
      if (it.value() == 0) continue;
      auto& c = col_map[static_cast<std::size_t>(it.col())];
      if (c < 0) c = used++;
      trips.emplace_back(c, static_cast<Index>(q), it.value());
    }
  ColMatrix et(used, static_cast<Index>(rest.size()));
  et.setFromTriplets(trips.begin(), trips.end());
  for (Index q : qr_independent(et)) keep.push_back(rest[static_cast<std::size_t>(q)]);
  std::sort(keep.begin(), keep.end());
  return keep;
}

void ConvexProblem::validate() const {
  auto fail = [](const std::string& what) { throw Error("invalid convex problem: " + what); };
  if (num_vars < 1) fail("num_vars must be positive");
  if (rate_map.cols() != num_vars) fail("rate_map column count");
  if (arrival.size() != rate_map.rows()) fail("arrival length");
  if (eq.cols() != num_vars && eq.rows() > 0) fail("eq column count");
  if (eq_rhs.size() != eq.rows()) fail("eq_rhs length");
  if (ineq.cols() != num_vars && ineq.rows() > 0) fail("ineq column count");
  if (ineq_rhs.size() != ineq.rows()) fail("ineq_rhs length");
  if (static_cast<Index>(nonneg.size()) != num_vars) fail("nonneg mask length");
  if (start.size() != num_vars) fail("start point required");
  if (cost.size() != 0 && cost.size() != num_vars) fail("cost length");
  if (!cost.allFinite()) fail("non-finite cost");
  if (!finite(rate_map) || !finite(eq) || !finite(ineq)) fail("non-finite matrix entry");
  if (!arrival.allFinite() || !eq_rhs.allFinite() || !ineq_rhs.allFinite() || !start.allFinite())
    fail("non-finite vector entry");
  if ((arrival.array() < 0).any()) fail("negative arrival rate");
  for (Index i = 0; i < num_vars; ++i)
    if (nonneg[static_cast<std::size_t>(i)] && !(start(i) > 0)) fail("start not strictly positive");
}

Index drop_dependent_equalities(ConvexProblem& p) {
  if (p.eq_independent) return 0;
  const auto keep = independent_rows(p.eq);
  const Index dropped = p.eq.rows() - static_cast<Index>(keep.size());
  if (dropped > 0) {
    SparseMatrix e(static_cast<Index>(keep.size()), p.eq.cols());
    Vector rhs(static_cast<Index>(keep.size()));
    std::vector<Triplet> trips;
    for (std::size_t q = 0; q < keep.size(); ++q) {
      for (SparseMatrix::InnerIterator it(p.eq, keep[q]); it; ++it)
        trips.emplace_back(static_cast<Index>(q), it.col(), it.value());
      rhs(static_cast<Index>(q)) = p.eq_rhs(keep[q]);
    }
    e.setFromTriplets(trips.begin(), trips.end());
    p.eq = std::move(e);
    p.eq_rhs = std::move(rhs);
  }
  p.eq_independent = true;
  return dropped;
}

namespace {

// minimize tau * (c'x + sum_j lam_j / (R_j x - lam_j)) - sum log(b - A x) - sum_P log x
// subject to E x = e. Variables outside P are free.
struct Model {
  Index n = 0;
  SparseMatrix R;
  Vector lam;
  SparseMatrix A;
  Vector b;
  SparseMatrix E;
  Vector e;
  std::vector<std::uint8_t> bounded;
  Vector c;

  [[nodiscard]] Index barrier_terms() const {
    return A.rows() + static_cast<Index>(std::count(bounded.begin(), bounded.end(), std::uint8_t{1}));
  }
};

struct StepOutcome {
  bool ok = false;        // linear algebra succeeded
  double decrement = 0;   // -g' dz
  double step = 0;        // accepted step length
  Duals duals;            // estimates at the point the step was computed
};

// Newton engine on the slack form: every inequality row a'x <= b becomes
// a'x + s = b with s > 0 carried as its own iterate, so small slacks keep
// full relative precision instead of being recomputed by cancellation.
// Iterates are z = (x, s).
class Newton {
 public:
  static constexpr double kCenterTol = 1e-10;
  static constexpr double kPureNewton = 1e-3;

  Newton(const Model& m, const SolverOptions& opts) : m_(m), opts_(opts) {
    n_ = m.n;
    na_ = m.A.rows();
    ne_ = m.E.rows();
    nr_ = m.R.rows();
    const Index total = n_ + na_;
    std::vector<std::uint8_t> bounded(m.bounded);
    bounded.resize(static_cast<std::size_t>(total), 1);
    pos_.assign(static_cast<std::size_t>(total), 0);
    for (Index v = 0; v < total; ++v) {
      if (bounded[static_cast<std::size_t>(v)]) {
        pos_[static_cast<std::size_t>(v)] = static_cast<Index>(bounded_.size());
        bounded_.push_back(v);
      } else {
        pos_[static_cast<std::size_t>(v)] = -1 - static_cast<Index>(free_.size());
        free_.push_back(v);
      }
    }
    // Rows: rate rows, equalities, then inequality rows with their slack.
    std::vector<Triplet> tp;
    std::vector<Triplet> tf;
    auto put = [&](Index row, Index col, double val) {
      const Index p = pos_[static_cast<std::size_t>(col)];
      if (p >= 0)
        tp.emplace_back(row, p, val);
      else
        tf.emplace_back(row, -1 - p, val);
    };
    for (Index r = 0; r < nr_; ++r)
      for (SparseMatrix::InnerIterator it(m.R, r); it; ++it) put(r, it.col(), it.value());
    for (Index r = 0; r < ne_; ++r)
      for (SparseMatrix::InnerIterator it(m.E, r); it; ++it) put(nr_ + r, it.col(), it.value());
    for (Index r = 0; r < na_; ++r) {
      for (SparseMatrix::InnerIterator it(m.A, r); it; ++it) put(nr_ + ne_ + r, it.col(), it.value());
      put(nr_ + ne_ + r, n_ + r, 1.0);
    }
    const Index rows = nr_ + ne_ + na_;
    qp_.resize(rows, static_cast<Index>(bounded_.size()));
    qp_.setFromTriplets(tp.begin(), tp.end());
    qpt_ = qp_.transpose();
    qb_ = Matrix::Zero(rows, static_cast<Index>(free_.size()));
    for (const auto& t : tf) qb_(t.row(), t.col()) += t.value();

    // Lower triangle of Q_P Z^2 Q_P' has a fixed pattern; record for every
    // bounded column the value slots of its outer product, row pairs in
    // (a >= b) order.
    ColMatrix lower = ColMatrix(qp_ * qpt_).triangularView<Eigen::Lower>();
    ColMatrix eye(rows, rows);
    eye.setIdentity();
    lower = lower + 0.0 * eye;
    lower.makeCompressed();
    m_lower_ = lower.cast<Wide>();
    auto slot = [&](Index a, Index b) {
      const auto* begin = lower.innerIndexPtr() + lower.outerIndexPtr()[b];
      const auto* end = lower.innerIndexPtr() + lower.outerIndexPtr()[b + 1];
      return static_cast<int>(std::lower_bound(begin, end, static_cast<int>(a)) - lower.innerIndexPtr());
    };
    slot_start_.assign(static_cast<std::size_t>(qp_.outerSize()) + 1, 0);
    for (Index q = 0; q < qp_.outerSize(); ++q) {
      std::vector<Index> rs;
      for (ColMatrix::InnerIterator it(qp_, q); it; ++it) rs.push_back(it.row());
      for (std::size_t a = 0; a < rs.size(); ++a)
        for (std::size_t b = 0; b <= a; ++b) slots_.push_back(slot(rs[a], rs[b]));
      slot_start_[static_cast<std::size_t>(q) + 1] = static_cast<std::int64_t>(slots_.size());
    }
    for (Index i = 0; i < nr_; ++i) diag_slots_.push_back(slot(i, i));
  }

  [[nodiscard]] Vector extend(const Vector& x) const {
    Vector z(n_ + na_);
    z.head(n_) = x;
    if (na_ > 0) z.tail(na_) = m_.b - m_.A * x;
    return z;
  }

  [[nodiscard]] bool in_domain(const Vector& x) const {
    for (Index v = 0; v < n_; ++v)
      if (m_.bounded[static_cast<std::size_t>(v)] && !(x(v) > 0)) return false;
    const Vector r = m_.R * x;
    for (Index j = 0; j < r.size(); ++j)
      if (!(r(j) > m_.lam(j))) return false;
    if (na_ > 0) {
      const Vector s = m_.b - m_.A * x;
      for (Index i = 0; i < s.size(); ++i)
        if (!(s(i) > 0)) return false;
    }
    return true;
  }

  // c'x + sum_j lam_j / (r_j - lam_j)
  [[nodiscard]] double objective(const Vector& z) const {
    const auto x = z.head(n_);
    double f = m_.c.size() > 0 ? m_.c.dot(x) : 0.0;
    const Vector r = m_.R * x;
    for (Index j = 0; j < r.size(); ++j) f += m_.lam(j) / (r(j) - m_.lam(j));
    return f;
  }

  StepOutcome step(Vector& z, double tau) {
    StepOutcome out;
    const Vector r = m_.R * z.head(n_);
    Vector fp(nr_);
    Vector fpp(nr_);
    for (Index j = 0; j < nr_; ++j) {
      const double d = r(j) - m_.lam(j);
      fp(j) = -m_.lam(j) / (d * d);
      fpp(j) = 2 * m_.lam(j) / (d * d * d);
    }

    Vector g = Vector::Zero(n_ + na_);
    g.head(n_) = m_.R.transpose() * fp;
    if (m_.c.size() > 0) g.head(n_) += m_.c;
    g *= tau;
    for (Index v : bounded_) g(v) -= 1.0 / z(v);

    const auto np = static_cast<Index>(bounded_.size());
    Vector z2(np);
    Vector gp(np);
    for (Index q = 0; q < np; ++q) {
      const double zv = z(bounded_[static_cast<std::size_t>(q)]);
      z2(q) = zv * zv;
      gp(q) = g(bounded_[static_cast<std::size_t>(q)]);
    }

    const Index rows = nr_ + ne_ + na_;
    Wide* mv = m_lower_.valuePtr();
    std::fill(mv, mv + m_lower_.nonZeros(), Wide(0));
    for (Index q = 0; q < qp_.outerSize(); ++q) {
      const Wide w = z2(q);
      const auto first = qp_.outerIndexPtr()[q];
      const auto count = qp_.outerIndexPtr()[q + 1] - first;
      const double* val = qp_.valuePtr() + first;
      const int* sl = slots_.data() + slot_start_[static_cast<std::size_t>(q)];
      for (int a = 0; a < count; ++a) {
        const Wide wa = w * val[a];
        for (int b = 0; b <= a; ++b) mv[*sl++] += wa * val[b];
      }
    }
    for (Index i = 0; i < nr_; ++i) mv[diag_slots_[static_cast<std::size_t>(i)]] += Wide(1) / (Wide(tau) * Wide(fpp(i)));
    if (!solver_.factor(m_lower_)) return out;

    // Bordered system in (dz_P, dz_B, xi):
    //   Z^-2 dz_P + Q_P' xi = a_P,  Q_B' xi = a_B,  Q_P dz_P + Q_B dz_B - D xi = c,
    // eliminated onto M = Q_P Z^2 Q_P' + D, then refined on the full system.
    const auto nb = static_cast<Index>(free_.size());
    Matrix y;
    Eigen::LDLT<Matrix> ldlt;
    if (nb > 0) {
      y = solver_.solve(qb_);
      ldlt.compute(qb_.transpose() * y);
      if (ldlt.info() != Eigen::Success) return out;
    }
    Vector dvec(rows);
    for (Index i = 0; i < rows; ++i) dvec(i) = i < nr_ ? 1.0 / (tau * fpp(i)) : 0.0;
    auto gather = [&](const Vector& full, const std::vector<Index>& idx) {
      Vector o(static_cast<Index>(idx.size()));
      for (std::size_t q = 0; q < idx.size(); ++q) o(static_cast<Index>(q)) = full(idx[q]);
      return o;
    };
    auto bordered = [&](const Vector& a, const Vector& c, Vector& dz, Vector& xi) {
      const Vector ap = gather(a, bounded_);
      xi = solver_.solve(Vector(qp_ * z2.cwiseProduct(ap) - c));
      dz.setZero(n_ + na_);
      if (nb > 0) {
        const Vector dzb = ldlt.solve(Vector(gather(a, free_) - qb_.transpose() * xi));
        xi += y * dzb;
        for (Index q = 0; q < nb; ++q) dz(free_[static_cast<std::size_t>(q)]) = dzb(q);
      }
      const Vector dzp = z2.cwiseProduct(ap - qpt_ * xi);
      for (Index q = 0; q < np; ++q) dz(bounded_[static_cast<std::size_t>(q)]) = dzp(q);
    };

    // Residual of the linear constraints (nonzero only by rounding or after
    // a damped step).
    Vector c = Vector::Zero(rows);
    if (ne_ > 0) c.segment(nr_, ne_) = m_.E * (-z.head(n_)) + m_.e;
    if (na_ > 0) c.tail(na_) = m_.b - m_.A * z.head(n_) - z.tail(na_);
    const Vector a = -g;
    Vector dz;
    Vector xi;
    bordered(a, c, dz, xi);
    for (int refine = 0; refine < 2; ++refine) {
      // Only the constraint block and the free-variable block carry error;
      // the bounded block holds by construction.
      Vector lin = qp_ * gather(dz, bounded_);
      if (nb > 0) lin += qb_ * gather(dz, free_);
      const Vector rc = c - (lin - dvec.cwiseProduct(xi));
      Vector ra = Vector::Zero(n_ + na_);
      if (nb > 0) {
        const Vector rb = gather(a, free_) - qb_.transpose() * xi;
        for (Index q = 0; q < nb; ++q) ra(free_[static_cast<std::size_t>(q)]) = rb(q);
      }
      Vector ddz;
      Vector dxi;
      bordered(ra, rc, ddz, dxi);
      dz += ddz;
      xi += dxi;
    }
    if (!dz.allFinite() || !xi.allFinite()) return out;

    out.ok = true;
    // dz' H dz as a sum of nonnegative terms; -g'dz suffers cancellation
    // once barrier gradients reach 1/z ~ 1e12.
    const Vector rd = m_.R * dz.head(n_);
    double dec = 0;
    for (Index v : bounded_) dec += (dz(v) / z(v)) * (dz(v) / z(v));
    for (Index j = 0; j < nr_; ++j) dec += tau * fpp(j) * rd(j) * rd(j);
    out.decrement = dec;
    out.duals.eq = xi.segment(nr_, ne_) / tau;
    out.duals.ineq = xi.tail(na_) / tau;
    out.duals.bound = Vector::Zero(n_);
    for (Index v = 0; v < n_; ++v)
      if (m_.bounded[static_cast<std::size_t>(v)]) out.duals.bound(v) = (1.0 - dz(v) / z(v)) / (tau * z(v));
    if (out.decrement / 2 <= kCenterTol) return out;

    // Largest step keeping every barrier argument positive.
    double smax = kInf;
    for (Index v : bounded_)
      if (dz(v) < 0) smax = std::min(smax, -z(v) / dz(v));
    for (Index j = 0; j < nr_; ++j)
      if (rd(j) < 0) smax = std::min(smax, -(r(j) - m_.lam(j)) / rd(j));

    double t = std::min(1.0, 0.99 * smax);
    // g'dz = -dz'H dz on the equality-feasible subspace.
    const double slope = -out.decrement;
    const double cdz = m_.c.size() > 0 ? m_.c.dot(dz.head(n_)) : 0.0;
    for (int tries = 0; tries < 80; ++tries) {
      // Change in the barrier function, term by term to avoid cancellation.
      double df = tau * t * cdz;
      bool domain = true;
      for (Index j = 0; j < nr_ && domain; ++j) {
        const double d0 = r(j) - m_.lam(j);
        const double d1 = d0 + t * rd(j);
        if (!(d1 > 0))
          domain = false;
        else
          df -= tau * m_.lam(j) * t * rd(j) / (d0 * d1);
      }
      for (std::size_t q = 0; q < bounded_.size() && domain; ++q) {
        const Index v = bounded_[q];
        const double ratio = t * dz(v) / z(v);
        if (!(ratio > -1))
          domain = false;
        else
          df -= std::log1p(ratio);
      }
      // Near the center the decrease is below the floating-point resolution
      // of the barrier value; the full (domain-limited) step is then taken.
      if (domain && (df <= opts_.ls_alpha * t * slope || (tries == 0 && out.decrement < kPureNewton))) {
        z += t * dz;
        out.step = t;
        return out;
      }
      t *= opts_.ls_beta;
    }
    out.step = 0;
    return out;
  }

 private:
  const Model& m_;
  const SolverOptions& opts_;
  Index n_ = 0, na_ = 0, ne_ = 0, nr_ = 0;
  std::vector<Index> bounded_;
  std::vector<Index> free_;
  std::vector<Index> pos_;
  ColMatrix qp_;
  ColMatrix qpt_;
  Matrix qb_;
  detail::PivotLdlt<Wide> solver_;
  Eigen::SparseMatrix<Wide, Eigen::ColMajor> m_lower_;
  std::vector<int> slots_;
  std::vector<std::int64_t> slot_start_;
  std::vector<int> diag_slots_;
};

enum class CenterStatus { centered, stalled, iteration_limit, numerical };

struct CenterOutcome {
  CenterStatus status = CenterStatus::centered;
  int iterations = 0;
  Duals duals;
};

// Newton iterations at fixed tau. `stop` may end the loop early.
template <typename Stop> CenterOutcome center(Newton& nt, Vector& z, double tau, const SolverOptions& opts, Stop stop) {
  CenterOutcome out;
  for (;;) {
    if (out.iterations >= opts.max_newton_iters) {
      out.status = CenterStatus::iteration_limit;
      return out;
    }
    StepOutcome st = nt.step(z, tau);
    if (!st.ok) {
      out.status = CenterStatus::numerical;
      return out;
    }
    out.duals = std::move(st.duals);
    if (st.decrement / 2 <= Newton::kCenterTol) return out;
    ++out.iterations;
    if (st.step == 0) {
      // No progress possible in floating point: treat a small decrement
      // as converged, otherwise report the stall.
      out.status = st.decrement < 1e-6 ? CenterStatus::centered : CenterStatus::stalled;
      return out;
    }
    if (stop(z)) return out;
  }
}

Model base_model(const ConvexProblem& p) {
  Model m;
  m.n = p.num_vars;
  std::vector<Index> loaded;
  for (Index j = 0; j < p.arrival.size(); ++j)
    if (p.arrival(j) > 0) loaded.push_back(j);
  std::vector<Triplet> tr;
  for (std::size_t q = 0; q < loaded.size(); ++q)
    for (SparseMatrix::InnerIterator it(p.rate_map, loaded[q]); it; ++it)
      tr.emplace_back(static_cast<Index>(q), it.col(), it.value());
  m.R.resize(static_cast<Index>(loaded.size()), p.num_vars);
  m.R.setFromTriplets(tr.begin(), tr.end());
  m.lam.resize(static_cast<Index>(loaded.size()));
  for (std::size_t q = 0; q < loaded.size(); ++q) m.lam(static_cast<Index>(q)) = p.arrival(loaded[q]);
  m.A = p.ineq;
  m.b = p.ineq_rhs;
  if (m.A.cols() != p.num_vars) m.A.resize(m.A.rows(), p.num_vars);
  m.E = p.eq;
  m.e = p.eq_rhs;
  if (m.E.cols() != p.num_vars) m.E.resize(m.E.rows(), p.num_vars);
  m.bounded = p.nonneg;
  m.c = p.cost;
  return m;
}

struct PhaseOne {
  bool feasible = false;
  double margin = 0;
  Vector v;
  int iterations = 0;
  bool numerical_failure = false;
};

PhaseOne run_phase_one(const Model& base, const Vector& start, const SolverOptions& opts, bool maximize) {
  const Index n = base.n;
  const double cap = maximize ? 1e6 : 1.0;
  const Vector r0 = base.R * start;
  const Vector s0 = base.A.rows() > 0 ? Vector(base.b - base.A * start) : Vector();

  // t enters every rate row relatively and each inequality violated at the
  // start absolutely; satisfied inequalities stay hard.
  double tmin = cap;
  std::vector<std::uint8_t> soft(static_cast<std::size_t>(s0.size()), 0);
  for (Index j = 0; j < r0.size(); ++j) tmin = std::min(tmin, r0(j) / base.lam(j) - 1.0);
  for (Index i = 0; i < s0.size(); ++i)
    if (!(s0(i) > 0)) {
      soft[static_cast<std::size_t>(i)] = 1;
      tmin = std::min(tmin, s0(i));
    }

  Model m;
  m.n = n + 1;
  m.R.resize(0, n + 1);
  m.lam.resize(0);
  std::vector<Triplet> ta;
  Index row = 0;
  for (Index j = 0; j < base.R.rows(); ++j, ++row) {
    for (SparseMatrix::InnerIterator it(base.R, j); it; ++it) ta.emplace_back(row, it.col(), -it.value());
    ta.emplace_back(row, n, base.lam(j));
  }
  for (Index i = 0; i < base.A.rows(); ++i, ++row) {
    for (SparseMatrix::InnerIterator it(base.A, i); it; ++it) ta.emplace_back(row, it.col(), it.value());
    if (soft[static_cast<std::size_t>(i)]) ta.emplace_back(row, n, 1.0);
  }
  ta.emplace_back(row++, n, 1.0);
  m.A.resize(row, n + 1);
  m.A.setFromTriplets(ta.begin(), ta.end());
  m.b.resize(row);
  m.b.head(base.R.rows()) = -base.lam;
  if (base.A.rows() > 0) m.b.segment(base.R.rows(), base.A.rows()) = base.b;
  m.b(row - 1) = cap;

  std::vector<Triplet> te;
  for (Index i = 0; i < base.E.rows(); ++i)
    for (SparseMatrix::InnerIterator it(base.E, i); it; ++it) te.emplace_back(i, it.col(), it.value());
  m.E.resize(base.E.rows(), n + 1);
  m.E.setFromTriplets(te.begin(), te.end());
  m.e = base.e;
  m.bounded = base.bounded;
  m.bounded.push_back(0);
  m.c = Vector::Zero(n + 1);
  m.c(n) = -1.0;

  Vector x0(n + 1);
  x0.head(n) = start;
  x0(n) = tmin - 1.0;

  Newton nt(m, opts);
  Vector x = nt.extend(x0);
  const double terms = static_cast<double>(m.barrier_terms());
  const double target = 0.5 * cap;
  PhaseOne out;
  double tau = opts.initial_barrier;
  for (int stage = 0; stage < 60; ++stage) {
    auto stop = [&](const Vector& xv) { return !maximize && xv(n) >= target; };
    const CenterOutcome c = center(nt, x, tau, opts, stop);
    out.iterations += c.iterations;
    const double t = x(n);
    if (opts.verbose)
      std::clog << "phase1 stage " << stage << " tau " << tau << " t " << t << " newton " << c.iterations << '\n';
    if (c.status == CenterStatus::numerical) {
      out.numerical_failure = true;
      break;
    }
    const double gap = terms / tau;
    if (!maximize && t > 0) {
      out.feasible = true;
      break;
    }
    if (t + gap < 0) break;  // certificate: optimal margin is negative
    if (maximize && gap <= opts.gap_tol * std::max(1.0, std::abs(t))) {
      out.feasible = t > 0;
      break;
    }
    if (gap < 1e-10) {  // margin indistinguishable from zero
      out.feasible = t > 0;
      break;
    }
    tau *= opts.barrier_factor;
  }
  out.margin = x(n);
  out.v = x.head(n);
  return out;
}

}  // namespace

double kkt_residual(const ConvexProblem& p, const Vector& v, const Duals& duals) {
  const Vector r = p.rate_map * v;
  Vector fp = Vector::Zero(r.size());
  double objective = 0;
  for (Index j = 0; j < r.size(); ++j) {
    const double l = p.arrival(j);
    if (l <= 0) continue;
    const double d = r(j) - l;
    if (!(d > 0)) return kInf;
    fp(j) = -l / (d * d);
    objective += l / d;
  }
  Vector grad = p.rate_map.transpose() * fp;
  if (p.cost.size() == v.size()) grad += p.cost;
  const double grad_scale = 1.0 + (grad.size() > 0 ? grad.cwiseAbs().maxCoeff() : 0.0);
  const double comp_scale = 1.0 + objective;
  auto inf_norm = [](const Vector& x) { return x.size() > 0 ? x.cwiseAbs().maxCoeff() : 0.0; };

  Vector stat = grad;
  if (p.eq.rows() > 0 && duals.eq.size() == p.eq.rows()) stat += p.eq.transpose() * duals.eq;
  if (p.ineq.rows() > 0 && duals.ineq.size() == p.ineq.rows()) stat += p.ineq.transpose() * duals.ineq;
  if (duals.bound.size() == v.size()) stat -= duals.bound;

  double res = inf_norm(stat) / grad_scale;
  if (p.eq.rows() > 0) res = std::max(res, inf_norm(p.eq * v - p.eq_rhs) / (1.0 + inf_norm(p.eq_rhs)));
  if (p.ineq.rows() > 0) {
    const Vector slack = p.ineq_rhs - p.ineq * v;
    res = std::max(res, std::max(0.0, -slack.minCoeff()) / (1.0 + inf_norm(p.ineq_rhs)));
    if (duals.ineq.size() == slack.size()) {
      res = std::max(res, inf_norm(duals.ineq.cwiseProduct(slack)) / comp_scale);
      res = std::max(res, std::max(0.0, -duals.ineq.minCoeff()) / grad_scale);
    }
  }
  for (Index i = 0; i < v.size(); ++i) {
    if (!p.nonneg[static_cast<std::size_t>(i)]) continue;
    res = std::max(res, std::max(0.0, -v(i)));
    if (duals.bound.size() == v.size()) {
      res = std::max(res, std::abs(duals.bound(i) * v(i)) / comp_scale);
      res = std::max(res, std::max(0.0, -duals.bound(i)) / grad_scale);
    }
  }
  return res;
}

FeasibilityResult phase_one(const ConvexProblem& problem, const SolverOptions& opts, bool maximize) {
  problem.validate();
  ConvexProblem p = problem;
  drop_dependent_equalities(p);
  const Model m = base_model(p);
  const PhaseOne ph = run_phase_one(m, p.start, opts, maximize);
  FeasibilityResult out;
  out.feasible = ph.feasible;
  out.margin = ph.margin;
  out.point = ph.v;
  out.iterations = ph.iterations;
  return out;
}

SolveResult solve(const ConvexProblem& problem, const SolverOptions& opts) {
  problem.validate();
  const ConvexProblem* pp = &problem;
  ConvexProblem reduced;
  if (!problem.eq_independent) {
    reduced = problem;
    drop_dependent_equalities(reduced);
    pp = &reduced;
  }
  const ConvexProblem& p = *pp;
  const Model m = base_model(p);

  SolveResult out;
  out.v = p.start;
  Newton nt(m, opts);

  if (!nt.in_domain(p.start)) {
    const PhaseOne ph = run_phase_one(m, p.start, opts, false);
    out.iterations += ph.iterations;
    out.phase1_margin = ph.margin;
    if (!ph.feasible || !nt.in_domain(ph.v)) {
      out.v = ph.v;
      out.rates = p.rates(out.v);
      out.status = ph.numerical_failure ? SolveStatus::max_iterations : SolveStatus::infeasible;
      out.utility = kInfeasibleUtility;
      return out;
    }
    out.v = ph.v;
  }

  Vector z = nt.extend(out.v);
  const double terms = static_cast<double>(m.barrier_terms());
  double tau = opts.initial_barrier;
  out.status = SolveStatus::max_iterations;
  // Last stage whose KKT residual met the tolerance. Past some barrier weight
  // the normal equations lose the small slacks and the residual grows again;
  // then this point is returned instead of pushing on toward gap_tol.
  struct Certified {
    Vector z;
    Duals duals;
    double kkt;
    double tau;
  };
  std::optional<Certified> best;
  for (int stage = 0; stage < 40; ++stage) {
    const CenterOutcome c = center(nt, z, tau, opts, [](const Vector&) { return false; });
    out.iterations += c.iterations;
    const double u = -nt.objective(z);
    out.stage_utilities.push_back(u);
    const double kkt = kkt_residual(p, z.head(p.num_vars), c.duals);
    if (opts.verbose)
      std::clog << "stage " << stage << " tau " << tau << " u " << u << " kkt " << kkt << " newton " << c.iterations
                << '\n';
    out.barrier_weight = tau;
    out.duals = c.duals;
    out.kkt_residual = kkt;
    const bool failed = c.status == CenterStatus::numerical || c.status == CenterStatus::iteration_limit;
    if (!failed && kkt <= opts.tol) {
      best = Certified{z, c.duals, kkt, tau};
      if (terms / tau <= opts.gap_tol * std::max(1.0, std::abs(u))) break;
    } else if (best || failed) {
      break;
    }
    tau *= opts.barrier_factor;
  }
  if (best) {
    z = best->z;
    out.duals = best->duals;
    out.kkt_residual = best->kkt;
    out.barrier_weight = best->tau;
    out.status = SolveStatus::optimal;
  }
  out.duality_gap = terms / out.barrier_weight;

  out.v = z.head(p.num_vars);
  out.rates = p.rates(out.v);
  out.utility = utility_delay(p.arrival, out.rates);
  if (p.eq.rows() != problem.eq.rows()) {
    // Multipliers refer to the reduced system; dependent rows get zero.
    const auto keep = independent_rows(problem.eq);
    Vector full = Vector::Zero(problem.eq.rows());
    for (std::size_t q = 0; q < keep.size(); ++q) full(keep[q]) = out.duals.eq(static_cast<Index>(q));
    out.duals.eq = full;
  }
  return out;
}

}  // namespace spalloc
