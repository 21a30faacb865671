#pragma once

#include <cmath>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <string>
#include <vector>

#include "spalloc/model.hpp"

namespace spalloc {

/// Seeded uniform and normal draws with a fixed, platform-independent
/// recipe (the standard distributions are implementation-defined).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}
  /// Uniform in the open interval (0, 1).
  double uniform() {
    for (;;) {
      const double u = static_cast<double>(engine_() >> 11) * 0x1.0p-53;
      if (u > 0) return u;
    }
  }
  /// Box-Muller, one draw per pair of uniforms.
  double normal() {
    const double u1 = uniform();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * 3.14159265358979323846 * u2);
  }
  double exponential(double rate) { return -std::log(uniform()) / rate; }

 private:
  std::mt19937_64 engine_;
};

struct GeneratorConfig {
  Index n = 10;
  Index k = 23;
  double area_m = 500;
  double pathloss_exp = 3;
  double shadow_sigma_db = 3;
  double macro_psd = 5;
  double pico_psd = 1;
  double noise_psd = 1e-7;
  double bandwidth_hz = 20e6;
  double packet_len_bits = 1e6;
  double lambda_max = 100;  // arrival rates uniform in (0, lambda_max)
  double min_distance_m = 1;
  std::uint64_t seed = 0;

  void validate() const;
};

/// Macro AP at the center, n-1 picos uniform over the square, UEs on a
/// ceil(sqrt(k)) column lattice, log-normal shadowing in dB.
Scenario generate(const GeneratorConfig& cfg);

/// SNR in dB of the weakest UE's strongest link, interference ignored.
double cell_edge_snr_db(const Scenario& s);

/// Copy with every arrival rate multiplied by `scale`.
Scenario scale_load(const Scenario& s, double scale);

std::string scenario_to_json(const Scenario& s);
/// Throws spalloc::Error naming the offending field, or the parse position.
Scenario scenario_from_json(const std::string& text);
void save_scenario(const Scenario& s, const std::string& path);
Scenario load_scenario(const std::string& path);

struct ResultRow {
  std::string scheme;
  std::uint64_t seed = 0;
  Index n = 0;
  Index k = 0;
  Index segments = 0;
  double load_scale = 1;
  double total_arrival_pps = 0;
  double utility = kInfeasibleUtility;
  double avg_delay_s = 0;
  std::optional<double> max_supported;
  Index active_patterns = 0;
  std::optional<double> solve_ms;
};

inline constexpr const char* kResultsHeader =
    "scheme,seed,n,k,segments,load_scale,total_arrival_pps,utility,avg_delay_s,max_supported,active_patterns,solve_ms";

/// Shortest decimal that round-trips, "inf"/"-inf" for infinities.
std::string format_number(double v);
std::string to_csv(const ResultRow& row);
void write_results(std::ostream& out, const std::vector<ResultRow>& rows, bool header = true);
/// Writes to `path`; with `append` the header is written only for a new or empty file.
void save_results(const std::string& path, const std::vector<ResultRow>& rows, bool append = false);

}  // namespace spalloc
