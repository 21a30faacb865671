#pragma once

// Reference computations that share no code with the solver.

#include <cmath>
#include <functional>
#include <limits>
#include <vector>

namespace spalloc::test {

/// Total delay sum lambda / (r - lambda); +inf outside the domain.
inline double delay_sum(const std::vector<double>& lambda, const std::vector<double>& r) {
  double total = 0;
  for (std::size_t j = 0; j < lambda.size(); ++j) {
    if (lambda[j] <= 0) continue;
    if (!(r[j] > lambda[j])) return std::numeric_limits<double>::infinity();
    total += lambda[j] / (r[j] - lambda[j]);
  }
  return total;
}

/// One AP splitting a unit band among UEs with rates se_j * x_j: the
/// stationarity condition lambda_j se_j / (se_j x_j - lambda_j)^2 = nu gives
/// x_j(nu), and nu is found by bisection on sum x = 1. Returns the delay sum.
inline double water_fill(const std::vector<double>& se, const std::vector<double>& lambda,
                         std::vector<double>* shares = nullptr) {
  auto shares_at = [&](double nu, std::vector<double>& x) {
    double total = 0;
    for (std::size_t j = 0; j < se.size(); ++j) {
      x[j] = lambda[j] > 0 ? (lambda[j] + std::sqrt(lambda[j] * se[j] / nu)) / se[j] : 0.0;
      total += x[j];
    }
    return total;
  };
  std::vector<double> x(se.size());
  double lo = 1e-12, hi = 1e12;
  for (int it = 0; it < 400; ++it) {
    const double mid = std::sqrt(lo * hi);
    (shares_at(mid, x) > 1 ? lo : hi) = mid;
  }
  shares_at(hi, x);
  std::vector<double> r(se.size());
  for (std::size_t j = 0; j < se.size(); ++j) r[j] = se[j] * x[j];
  if (shares) *shares = x;
  return delay_sum(lambda, r);
}

/// Minimum of f over the unit box [0,1]^2 by a coarse grid followed by
/// repeated zoomed grids around the incumbent.
inline double grid_min_2d(const std::function<double(double, double)>& f, int coarse = 400, int rounds = 8) {
  double best = std::numeric_limits<double>::infinity();
  double bx = 0.5, by = 0.5;
  double cx = 0.5, cy = 0.5, half = 0.5;
  for (int round = 0; round <= rounds; ++round) {
    const int steps = round == 0 ? coarse : 40;
    for (int a = 0; a <= steps; ++a)
      for (int b = 0; b <= steps; ++b) {
        const double x = cx - half + 2 * half * a / steps;
        const double y = cy - half + 2 * half * b / steps;
        if (x < 0 || x > 1 || y < 0 || y > 1) continue;
        const double v = f(x, y);
        if (v < best) {
          best = v;
          bx = x;
          by = y;
        }
      }
    cx = bx;
    cy = by;
    half = 2 * half / steps * 2;
  }
  return best;
}

}  // namespace spalloc::test
