#pragma once

#include <cmath>
#include <vector>

#include "spalloc/pattern.hpp"
#include "spalloc/types.hpp"

namespace spalloc {

/// Static network instance. Gains are linear power gains g(i, j) from AP i
/// to UE j; PSDs are in microwatts per hertz; arrival rates in packets/sec.
template <typename Scalar> struct ScenarioT {
  PointsX<Scalar> ap_positions;  // n x 2, meters
  PointsX<Scalar> ue_positions;  // k x 2, meters
  MatrixX<Scalar> gain;          // n x k
  VectorX<Scalar> tx_psd;        // n
  VectorX<Scalar> noise_psd;     // k
  VectorX<Scalar> arrival_rates; // k
  Scalar bandwidth_hz = Scalar(20e6);
  Scalar packet_len_bits = Scalar(1e6);

  [[nodiscard]] Index num_aps() const { return gain.rows(); }
  [[nodiscard]] Index num_ues() const { return gain.cols(); }

  /// Packets/sec delivered per unit spectral efficiency over the full band.
  [[nodiscard]] Scalar packets_per_bit_hz() const { return bandwidth_hz / packet_len_bits; }

  /// Throws spalloc::Error naming the first violated field.
  void validate() const;

  friend bool operator==(const ScenarioT& a, const ScenarioT& b) {
    return a.ap_positions == b.ap_positions && a.ue_positions == b.ue_positions && a.gain == b.gain &&
           a.tx_psd == b.tx_psd && a.noise_psd == b.noise_psd && a.arrival_rates == b.arrival_rates &&
           a.bandwidth_hz == b.bandwidth_hz && a.packet_len_bits == b.packet_len_bits;
  }
};

using Scenario = ScenarioT<double>;
using RateVector = Vector;

template <typename Scalar> void ScenarioT<Scalar>::validate() const {
  const Index n = gain.rows();
  const Index k = gain.cols();
  auto fail = [](const std::string& what) { throw Error("invalid scenario: " + what); };
  if (n < 1) fail("n must be at least 1");
  if (ap_positions.rows() != n) fail("ap_positions has wrong length");
  if (ue_positions.rows() != k) fail("ue_positions has wrong length");
  if (tx_psd.size() != n) fail("tx_psd has wrong length");
  if (noise_psd.size() != k) fail("noise_psd has wrong length");
  if (arrival_rates.size() != k) fail("arrival_rates has wrong length");
  if (!gain.allFinite() || (gain.array() < Scalar(0)).any()) fail("gain must be finite and >= 0");
  if (!tx_psd.allFinite() || (tx_psd.array() <= Scalar(0)).any()) fail("tx_psd must be > 0");
  if (!noise_psd.allFinite() || (noise_psd.array() <= Scalar(0)).any()) fail("noise_psd must be > 0");
  if (!arrival_rates.allFinite() || (arrival_rates.array() < Scalar(0)).any()) fail("arrival_rates must be >= 0");
  if (!(bandwidth_hz > Scalar(0))) fail("bandwidth_hz must be > 0");
  if (!(packet_len_bits > Scalar(0))) fail("packet_len_bits must be > 0");
}

/// Link spectral efficiency in packets/sec over the full band when the APs
/// in `active` transmit; zero when `ap` is not active.
template <typename Scalar>
Scalar spectral_efficiency(const ScenarioT<Scalar>& s, Index ap, Index ue, const Pattern& active) {
  if (!active.contains(ap)) return Scalar(0);
  Scalar interference = s.noise_psd(ue);
  active.for_each([&](Index other) {
    if (other != ap && other < s.num_aps()) interference += s.tx_psd(other) * s.gain(other, ue);
  });
  using std::log2;
  return s.packets_per_bit_hz() * log2(Scalar(1) + s.tx_psd(ap) * s.gain(ap, ue) / interference);
}

/// Negative total delay -sum_j lambda_j / (r_j - lambda_j). UEs with zero
/// load contribute nothing; any loaded UE with r_j <= lambda_j yields
/// kInfeasibleUtility.
template <typename DerivedL, typename DerivedR>
typename DerivedL::Scalar utility_delay(const Eigen::MatrixBase<DerivedL>& lambda, const Eigen::MatrixBase<DerivedR>& rates) {
  using Scalar = typename DerivedL::Scalar;
  if (lambda.size() != rates.size()) throw Error("utility_delay: length mismatch");
  Scalar total(0);
  for (Index j = 0; j < lambda.size(); ++j) {
    const Scalar l = lambda(j);
    if (l <= Scalar(0)) continue;
    const Scalar margin = rates(j) - l;
    if (!(margin > Scalar(0))) return Scalar(kInfeasibleUtility);
    total += l / margin;
  }
  return -total;
}

/// d u / d r_j = lambda_j / (r_j - lambda_j)^2. Throws when a loaded UE is
/// at or below its load.
template <typename DerivedL, typename DerivedR>
VectorX<typename DerivedL::Scalar> utility_gradient(const Eigen::MatrixBase<DerivedL>& lambda,
                                                    const Eigen::MatrixBase<DerivedR>& rates) {
  using Scalar = typename DerivedL::Scalar;
  if (lambda.size() != rates.size()) throw Error("utility_gradient: length mismatch");
  VectorX<Scalar> g = VectorX<Scalar>::Zero(lambda.size());
  for (Index j = 0; j < lambda.size(); ++j) {
    const Scalar l = lambda(j);
    if (l <= Scalar(0)) continue;
    const Scalar margin = rates(j) - l;
    if (!(margin > Scalar(0))) throw Error("utility_gradient: rate at or below load for UE " + std::to_string(j));
    g(j) = l / (margin * margin);
  }
  return g;
}

/// Average packet delay in seconds, -u / sum(lambda); infinite when infeasible.
inline double average_delay(const Vector& lambda, double utility) {
  const double total = lambda.sum();
  if (total <= 0) return 0.0;
  return -utility / total;
}

struct LinkShare {
  Index ap = 0;
  Index ue = 0;
  double bandwidth = 0;
};

struct PatternShare {
  Pattern pattern;
  double bandwidth = 0;          // y_A
  std::vector<LinkShare> links;  // x_A^{i->j}, i in A
};

enum class SolveStatus { optimal, infeasible, max_iterations };

[[nodiscard]] const char* to_string(SolveStatus status);

/// Bandwidth per global pattern plus per-link shares inside each pattern.
struct GlobalAllocation {
  std::vector<PatternShare> patterns;
  RateVector rates;
  double utility = kInfeasibleUtility;
  SolveStatus status = SolveStatus::optimal;

  [[nodiscard]] Index support(double threshold = 0.0) const;
};

/// r_j = sum over patterns A and APs i in A of s_A^{i->j} x_A^{i->j}.
template <typename Scalar>
VectorX<Scalar> rate_global(const ScenarioT<Scalar>& s, const GlobalAllocation& alloc) {
  VectorX<Scalar> r = VectorX<Scalar>::Zero(s.num_ues());
  for (const auto& share : alloc.patterns)
    for (const auto& link : share.links)
      r(link.ue) += spectral_efficiency(s, link.ap, link.ue, share.pattern) * Scalar(link.bandwidth);
  return r;
}

}  // namespace spalloc
