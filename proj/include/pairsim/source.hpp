#pragma once

#include <array>
#include <cstdint>
#include <vector>

#include "pairsim/config.hpp"
#include "pairsim/rng.hpp"

namespace pairsim {

enum class Basis { kHV, kDiag };

enum class ExitFate : std::uint8_t { kPending, kEscaped, kLostInCavity };

// One generated biphoton and everything that happened to it inside the
// cavity and compensator.
struct PairRecord {
  std::uint64_t id = 0;
  double creation_time = 0.0;     // s
  double crystal_position = 0.0;  // fraction of crystal length, [0,1]
  int roundtrips_signal = 0;
  int roundtrips_idler = 0;
  ExitFate exit_signal = ExitFate::kPending;
  ExitFate exit_idler = ExitFate::kPending;
  double residual_delay = 0.0;    // s, walk-off minus compensator offset
  double path_offset = 0.0;       // s, (path_difference - dip_center)/c
};

struct PhotonEvent {
  double time = 0.0;           // s, continuous, pre-quantization
  std::uint64_t pair_id = 0;
  std::uint8_t channel = 0;    // 0 = A, 1 = B
  bool from_signal = false;
};

// Homogeneous Poisson pair generation over [0, duration). Deterministic in
// seed; identical regardless of how the duration is later chunked, because
// randomness is keyed to fixed 10 ms cells.
std::vector<PairRecord> generate_pairs(const SourceConfig& config,
                                       std::uint64_t seed, double duration);

// Duration of the fixed generation cells used for chunk-invariant seeding.
inline constexpr double kGenerationCell = 0.01;  // s
// Upper bound on pairs per cell used when composing pair ids.
inline constexpr std::uint64_t kPairsPerCellCap = 1ULL << 21;

// Per-cell generation used by the streaming pipeline. base_id is
// cell_index * kPairsPerCellCap.
void generate_pairs_cell(const SourceConfig& config, SplitMix64& rng,
                         double cell_start, double cell_duration,
                         std::uint64_t base_id, std::vector<PairRecord>& out);

// Samples round-trip counts (geometric, termination probability 2pi/finesse)
// and escape-vs-loss fates for both photons. Consumes exactly four draws.
void cavity_exit(PairRecord& pair, const SourceConfig& config, SplitMix64& rng);

// Residual biphoton delay after the Michelson compensator at the given
// compensator path difference.
void apply_compensator(PairRecord& pair, const SourceConfig& config,
                       double path_difference);

// Per-pair probability that the photons exit on opposite ports of PBS2 in
// the +-45 degree basis. Averaged over crystal position this reproduces
// (1 - V * tri(dl * zeta / 2c)) / 2.
double opposite_port_probability(const PairRecord& pair,
                                 const SourceConfig& config);

// Projects the pair onto the measurement basis and emits 0, 1 or 2 photon
// events. Consumes exactly two draws from rng.
void project_basis(const PairRecord& pair, Basis basis,
                   const SourceConfig& config, SplitMix64& rng,
                   std::vector<PhotonEvent>& out);

}  // namespace pairsim
