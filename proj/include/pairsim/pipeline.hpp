#pragma once

#include <cstdint>
#include <vector>

#include "pairsim/analysis.hpp"
#include "pairsim/config.hpp"
#include "pairsim/detection.hpp"
#include "pairsim/source.hpp"

namespace pairsim {

struct SimResult {
  TimeTagStream stream;
  std::uint64_t pairs_generated = 0;
};

// Full source + detection chain: pair generation, cavity exit, compensator,
// basis projection, losses, chopper gating, quantization. Streaming over
// fixed generation cells; `chunks` only groups cells and never changes the
// output (chunk-determinism contract).
SimResult simulate(const SourceConfig& config, Basis basis, double duration,
                   std::uint64_t seed, double path_difference, int chunks = 1);

struct RateSummary {
  double live_time = 0.0;
  double singles_rate_a = 0.0;   // Hz, live-time normalized
  double singles_rate_b = 0.0;
  std::uint64_t coincidences = 0;
  double raw_coincidence_rate = 0.0;      // Hz
  double accidental_rate_est = 0.0;       // Hz, from measured singles
  double corrected_coincidence_rate = 0.0;
};

RateSummary summarize(const TimeTagStream& stream, const SourceConfig& config);

// Runs one simulation per grid point (DIAG basis) and fits the dip. Each
// point derives its random stream from (seed, point index).
HomScanResult run_hom_scan(const SourceConfig& config,
                           const std::vector<double>& grid,
                           double duration_per_point, std::uint64_t seed);

}  // namespace pairsim
