#pragma once

#include <cmath>
#include <vector>

#include "spalloc/model.hpp"
#include "spalloc/neighborhoods.hpp"
#include "spalloc/scenario_io.hpp"

namespace spalloc::test {

/// Hand-built instance with W = tau = 1 unless given; positions are zero.
inline Scenario make_scenario(const Matrix& gain, const Vector& tx, const Vector& noise, const Vector& lambda,
                              double bandwidth = 1, double packet_len = 1) {
  Scenario s;
  s.gain = gain;
  s.tx_psd = tx;
  s.noise_psd = noise;
  s.arrival_rates = lambda;
  s.ap_positions = PointsX<double>::Zero(gain.rows(), 2);
  s.ue_positions = PointsX<double>::Zero(gain.cols(), 2);
  s.bandwidth_hz = bandwidth;
  s.packet_len_bits = packet_len;
  s.validate();
  return s;
}

inline Vector vec(std::initializer_list<double> xs) {
  Vector v(static_cast<Index>(xs.size()));
  Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

inline double rel_diff(double a, double b) { return std::abs(a - b) / std::max(1.0, std::max(std::abs(a), std::abs(b))); }

/// Small random drop from the standard generator with light load.
inline Scenario small_drop(Index n, Index k, std::uint64_t seed, double lambda_max = 20) {
  GeneratorConfig cfg;
  cfg.n = n;
  cfg.k = k;
  cfg.seed = seed;
  cfg.lambda_max = lambda_max;
  return generate(cfg);
}

}  // namespace spalloc::test
