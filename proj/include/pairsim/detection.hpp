#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "pairsim/config.hpp"
#include "pairsim/rng.hpp"
#include "pairsim/source.hpp"

namespace pairsim {

// Quantized detector records, one sorted timestamp list per channel.
// Timestamps are in units of `resolution`.
struct TimeTagStream {
  double resolution = 1e-9;  // s
  double duration = 0.0;     // s
  double live_time = 0.0;    // s, duty-corrected
  std::array<std::vector<std::int64_t>, 2> tags;

  // Binary format: "PTAG", u16 version, u64 resolution [ps], u64 duration
  // [ps], then per channel: u8 id, u64 count, count u64 timestamps.
  // Little-endian throughout.
  void save_binary(const std::string& path) const;
  static TimeTagStream load_binary(const std::string& path);

  // channel,timestamp rows.
  void save_csv(const std::string& path) const;
};

// Independent per-photon survival with probability
// fiber_coupling * optics_transmission * detector_quantum_efficiency.
// One draw per event.
std::vector<PhotonEvent> apply_losses(const std::vector<PhotonEvent>& events,
                                      const SourceConfig& config,
                                      SplitMix64& rng);

// Keeps events with (time mod period) < duty * period, half-open.
std::vector<PhotonEvent> chopper_gate(const std::vector<PhotonEvent>& events,
                                      const SourceConfig& config);

// Floor quantization to tagger resolution; sorts per channel. Events outside
// [0, duration) are dropped. live_time is set to duty * duration.
TimeTagStream quantize(const std::vector<PhotonEvent>& events,
                       const SourceConfig& config, double duration);

}  // namespace pairsim
