#include "spalloc/queue_sim.hpp"

#include <algorithm>
#include <cmath>
#include <vector>

#include "spalloc/scenario_io.hpp"

namespace spalloc {

namespace {
constexpr Index kBatches = 50;
constexpr double kStudent49 = 2.009575;  // two-sided 95%, 49 degrees of freedom
}  // namespace

QueueEstimate simulate_mm1(double lambda, double rate, Index num_packets, std::uint64_t seed) {
  if (!(lambda > 0) || !(rate > lambda)) throw Error("unstable queue");
  const Index warmup = num_packets / 20;
  if (num_packets - warmup < kBatches) throw Error("simulate_mm1: need at least 53 packets");
  Rng rng(seed);
  // Lindley: wait of packet n = max(0, wait + service of n-1 - gap).
  double wait = 0;
  double prev_service = 0;
  QueueEstimate out;
  out.packets_used = num_packets - warmup;
  const Index batch = out.packets_used / kBatches;
  std::vector<double> means(static_cast<std::size_t>(kBatches), 0.0);
  double total = 0;
  for (Index n = 0; n < num_packets; ++n) {
    const double gap = rng.exponential(lambda);
    const double service = rng.exponential(rate);
    wait = n == 0 ? 0.0 : std::max(0.0, wait + prev_service - gap);
    prev_service = service;
    if (n < warmup) continue;
    const double sojourn = wait + service;
    total += sojourn;
    const Index b = std::min((n - warmup) / batch, kBatches - 1);
    means[static_cast<std::size_t>(b)] += sojourn;
  }
  out.mean_sojourn = total / static_cast<double>(out.packets_used);
  for (Index b = 0; b < kBatches; ++b) {
    const Index size = b == kBatches - 1 ? out.packets_used - batch * (kBatches - 1) : batch;
    means[static_cast<std::size_t>(b)] /= static_cast<double>(size);
  }
  double mean_of_means = 0;
  for (double m : means) mean_of_means += m;
  mean_of_means /= kBatches;
  double var = 0;
  for (double m : means) var += (m - mean_of_means) * (m - mean_of_means);
  var /= kBatches - 1;
  out.half_width = kStudent49 * std::sqrt(var / kBatches);
  return out;
}

}  // namespace spalloc
