#pragma once

#include <cstdint>

#include "spalloc/types.hpp"

namespace spalloc {

struct QueueEstimate {
  double mean_sojourn = 0;  // seconds
  double half_width = 0;    // 95% confidence, batch means
  Index packets_used = 0;   // after warm-up
};

/// FIFO M/M/1 queue: Poisson arrivals at `lambda`, exponential service at
/// `rate`, both in packets/sec. The first 5% of packets are discarded as
/// warm-up. Throws "unstable queue" unless rate > lambda > 0.
QueueEstimate simulate_mm1(double lambda, double rate, Index num_packets, std::uint64_t seed = 1);

}  // namespace spalloc
