#pragma once

// Up-looking sparse LDL' for symmetric positive semidefinite matrices that
// are singular up to rounding. A pivot that collapses relative to its own
// diagonal marks a row that is numerically a combination of earlier rows;
// it is replaced by a huge value so the row decouples and its solution
// component goes to zero instead of polluting the rest.

#include <cmath>
#include <limits>
#include <vector>

#include <Eigen/OrderingMethods>
#include <Eigen/SparseCore>

#include "spalloc/types.hpp"

namespace spalloc::detail {

template <typename Scalar> class PivotLdlt {
 public:
  using ColMatrix = Eigen::SparseMatrix<Scalar, Eigen::ColMajor>;

  static constexpr double kCollapse = std::numeric_limits<Scalar>::epsilon() * 100;
  static constexpr double kHuge = 1e128;

  /// `m` is compressed and holds the lower triangle only. The ordering and
  /// the value map are kept while the pattern size stays the same.
  /// Returns false on non-finite pivots.
  bool factor(const ColMatrix& m) {
    if (!analyzed_ || m.rows() != n_ || m.nonZeros() != nnz_) analyze(m);
    Scalar* cv = c_.valuePtr();
    const Scalar* mv = m.valuePtr();
    for (std::size_t k = 0; k < map_.size(); ++k) cv[map_[k]] = mv[k];
    return numeric();
  }

  /// Rows whose pivot was replaced in the last factorization.
  [[nodiscard]] Index dropped() const { return dropped_; }

  template <typename Derived> [[nodiscard]] Matrix solve(const Eigen::MatrixBase<Derived>& rhs) const {
    Matrix x(rhs.rows(), rhs.cols());
    std::vector<Scalar> b(static_cast<std::size_t>(n_));
    for (Index c = 0; c < rhs.cols(); ++c) {
      for (Index i = 0; i < n_; ++i) b[static_cast<std::size_t>(perm_.indices()(i))] = static_cast<Scalar>(rhs(i, c));
      for (Index j = 0; j < n_; ++j) {
        const Scalar bj = b[static_cast<std::size_t>(j)];
        for (int p = lp_[static_cast<std::size_t>(j)]; p < lp_[static_cast<std::size_t>(j) + 1]; ++p)
          b[static_cast<std::size_t>(li_[static_cast<std::size_t>(p)])] -= lx_[static_cast<std::size_t>(p)] * bj;
      }
      for (Index j = 0; j < n_; ++j) b[static_cast<std::size_t>(j)] /= d_[static_cast<std::size_t>(j)];
      for (Index j = n_ - 1; j >= 0; --j) {
        Scalar bj = b[static_cast<std::size_t>(j)];
        for (int p = lp_[static_cast<std::size_t>(j)]; p < lp_[static_cast<std::size_t>(j) + 1]; ++p)
          bj -= lx_[static_cast<std::size_t>(p)] * b[static_cast<std::size_t>(li_[static_cast<std::size_t>(p)])];
        b[static_cast<std::size_t>(j)] = bj;
      }
      for (Index i = 0; i < n_; ++i) x(i, c) = static_cast<double>(b[static_cast<std::size_t>(perm_.indices()(i))]);
    }
    return x;
  }

 private:
  void analyze(const ColMatrix& m) {
    n_ = m.rows();
    nnz_ = m.nonZeros();
    const ColMatrix full = m.template selfadjointView<Eigen::Lower>();
    Eigen::AMDOrdering<int> amd;
    Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> inv;
    amd(full, inv);
    perm_ = inv.inverse();
    // Permute a copy whose values are entry indices to learn where each
    // entry of m lands.
    ColMatrix idx = m;
    for (Index k = 0; k < idx.nonZeros(); ++k) idx.valuePtr()[k] = static_cast<Scalar>(k);
    c_.resize(n_, n_);
    c_.template selfadjointView<Eigen::Upper>() = idx.template selfadjointView<Eigen::Lower>().twistedBy(perm_);
    c_.makeCompressed();
    map_.assign(static_cast<std::size_t>(m.nonZeros()), 0);
    for (Index p = 0; p < c_.nonZeros(); ++p) map_[static_cast<std::size_t>(c_.valuePtr()[p])] = static_cast<int>(p);

    // Elimination tree and column counts on the upper triangle of the
    // permuted matrix.
    const auto n = static_cast<std::size_t>(n_);
    parent_.assign(n, -1);
    std::vector<int> flag(n);
    std::vector<int> count(n, 0);
    for (int k = 0; k < static_cast<int>(n); ++k) {
      flag[static_cast<std::size_t>(k)] = k;
      for (typename ColMatrix::InnerIterator it(c_, k); it; ++it) {
        int i = static_cast<int>(it.row());
        if (i >= k) continue;
        for (; flag[static_cast<std::size_t>(i)] != k; i = parent_[static_cast<std::size_t>(i)]) {
          if (parent_[static_cast<std::size_t>(i)] == -1) parent_[static_cast<std::size_t>(i)] = k;
          ++count[static_cast<std::size_t>(i)];
          flag[static_cast<std::size_t>(i)] = k;
        }
      }
    }
    lp_.assign(n + 1, 0);
    for (std::size_t k = 0; k < n; ++k) lp_[k + 1] = lp_[k] + count[k];
    li_.assign(static_cast<std::size_t>(lp_[n]), 0);
    lx_.assign(static_cast<std::size_t>(lp_[n]), 0.0);
    d_.assign(n, 0.0);
    analyzed_ = true;
  }

  bool numeric() {
    const auto n = static_cast<std::size_t>(n_);
    std::vector<Scalar> y(n, 0.0);
    std::vector<int> pattern(n);
    std::vector<int> flag(n);
    std::vector<int> filled(n, 0);
    dropped_ = 0;
    for (int k = 0; k < static_cast<int>(n); ++k) {
      const auto ku = static_cast<std::size_t>(k);
      std::size_t top = n;
      flag[ku] = k;
      Scalar diag = 0;
      for (typename ColMatrix::InnerIterator it(c_, k); it; ++it) {
        int i = static_cast<int>(it.row());
        if (i > k) continue;
        y[static_cast<std::size_t>(i)] += it.value();
        if (i == k) diag = it.value();
        std::size_t len = 0;
        for (; flag[static_cast<std::size_t>(i)] != k; i = parent_[static_cast<std::size_t>(i)]) {
          pattern[len++] = i;
          flag[static_cast<std::size_t>(i)] = k;
        }
        while (len > 0) pattern[--top] = pattern[--len];
      }
      Scalar dk = y[ku];
      y[ku] = 0;
      for (; top < n; ++top) {
        const auto i = static_cast<std::size_t>(pattern[top]);
        const Scalar yi = y[i];
        y[i] = 0;
        const auto p0 = static_cast<std::size_t>(lp_[i]);
        const auto p1 = p0 + static_cast<std::size_t>(filled[i]);
        for (std::size_t p = p0; p < p1; ++p) y[static_cast<std::size_t>(li_[p])] -= lx_[p] * yi;
        const Scalar lki = yi / d_[i];
        dk -= lki * yi;
        li_[p1] = k;
        lx_[p1] = lki;
        ++filled[i];
      }
      if (!std::isfinite(dk)) return false;
      if (!(dk > Scalar(kCollapse) * diag)) {
        dk = kHuge;
        ++dropped_;
      }
      d_[ku] = dk;
    }
    return true;
  }

  Index n_ = 0;
  Index nnz_ = -1;
  bool analyzed_ = false;
  Eigen::PermutationMatrix<Eigen::Dynamic, Eigen::Dynamic, int> perm_;
  ColMatrix c_;
  std::vector<int> map_;
  std::vector<int> parent_;
  std::vector<int> lp_;
  std::vector<int> li_;
  std::vector<Scalar> lx_;
  std::vector<Scalar> d_;
  Index dropped_ = 0;
};

}  // namespace spalloc::detail
