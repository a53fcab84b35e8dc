#include "pairsim/source.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>

#include "pairsim/physics.hpp"

namespace pairsim {

namespace {

// Geometric number of round trips (support {1,2,...}) with termination
// probability p per round trip, by inverse CDF.
int sample_geometric(double p, SplitMix64& rng) {
  double u = uniform01(rng);  // [0,1)
  if (p >= 1.0) return 1;
  // ln(1-u) in (-inf, 0]; k = 1 + floor(ln(1-u)/ln(1-p))
  double k = 1.0 + std::floor(std::log1p(-u) / std::log1p(-p));
  if (k < 1.0) k = 1.0;
  if (k > 1e9) k = 1e9;
  return static_cast<int>(k);
}

}  // namespace

void generate_pairs_cell(const SourceConfig& config, SplitMix64& rng,
                         double cell_start, double cell_duration,
                         std::uint64_t base_id, std::vector<PairRecord>& out) {
  const double rate = config.pair_rate_per_mw * config.pump_mw();
  const double mean = rate * cell_duration;
  std::uint64_t n = 0;
  if (mean > 0.0) {
    std::poisson_distribution<std::uint64_t> poisson(mean);
    n = poisson(rng);
  }
  if (n >= kPairsPerCellCap) n = kPairsPerCellCap - 1;

  const std::size_t first = out.size();
  for (std::uint64_t i = 0; i < n; ++i) {
    PairRecord pair;
    pair.creation_time = cell_start + uniform01(rng) * cell_duration;
    pair.crystal_position = uniform01(rng);
    out.push_back(pair);
  }
  std::sort(out.begin() + static_cast<std::ptrdiff_t>(first), out.end(),
            [](const PairRecord& a, const PairRecord& b) {
              return a.creation_time < b.creation_time;
            });
  for (std::uint64_t i = 0; i < n; ++i) {
    out[first + i].id = base_id + i;
  }
}

std::vector<PairRecord> generate_pairs(const SourceConfig& config,
                                       std::uint64_t seed, double duration) {
  config.validate();
  if (duration < 0.0 || !std::isfinite(duration)) {
    throw ValidationError("duration must be nonnegative");
  }
  std::vector<PairRecord> pairs;
  if (duration == 0.0) return pairs;
  const auto n_cells = static_cast<std::uint64_t>(
      std::ceil(duration / kGenerationCell));
  for (std::uint64_t cell = 0; cell < n_cells; ++cell) {
    const double t0 = static_cast<double>(cell) * kGenerationCell;
    const double dt = std::min(kGenerationCell, duration - t0);
    SplitMix64 rng(derive_seed(seed, cell, Stream::kGeneration));
    generate_pairs_cell(config, rng, t0, dt, cell * kPairsPerCellCap, pairs);
  }
  return pairs;
}

void cavity_exit(PairRecord& pair, const SourceConfig& config,
                 SplitMix64& rng) {
  const double p_term = 2.0 * std::numbers::pi / config.finesse;
  if (!(p_term > 0.0 && p_term <= 1.0)) {
    throw ValidationError(
        "finesse must be >= 2*pi so the round-trip termination probability "
        "is in (0,1]");
  }
  pair.roundtrips_signal = sample_geometric(p_term, rng);
  pair.roundtrips_idler = sample_geometric(p_term, rng);
  pair.exit_signal = uniform01(rng) < config.escape_efficiency
                         ? ExitFate::kEscaped
                         : ExitFate::kLostInCavity;
  pair.exit_idler = uniform01(rng) < config.escape_efficiency
                        ? ExitFate::kEscaped
                        : ExitFate::kLostInCavity;
}

void apply_compensator(PairRecord& pair, const SourceConfig& config,
                       double path_difference) {
  const double walkoff = (pair.crystal_position - 0.5) *
                         config.crystal_length * config.group_delay_mismatch;
  pair.path_offset =
      (path_difference - config.hom_dip_center) / kSpeedOfLight;
  pair.residual_delay = walkoff - pair.path_offset;
}

double opposite_port_probability(const PairRecord& pair,
                                 const SourceConfig& config) {
  // Interference degree: the exchanged amplitude must fall within the
  // rectangular biphoton window of total width L*dk. Averaged over the
  // uniform generation position this indicator integrates to the
  // triangular kernel tri(2 * path_offset / (L*dk)).
  const double total_walkoff =
      config.crystal_length * config.group_delay_mismatch;
  const double mirrored = pair.residual_delay - pair.path_offset;
  const bool overlaps = std::abs(mirrored) <= 0.5 * total_walkoff;
  const double v = config.hv_spectral_overlap;
  return 0.5 * (1.0 - (overlaps ? v : 0.0));
}

void project_basis(const PairRecord& pair, Basis basis,
                   const SourceConfig& config, SplitMix64& rng,
                   std::vector<PhotonEvent>& out) {
  const double u1 = uniform01(rng);
  const double u2 = uniform01(rng);
  const double t_rt = config.effective_cavity_length / kSpeedOfLight;
  const bool s_ok = pair.exit_signal == ExitFate::kEscaped;
  const bool i_ok = pair.exit_idler == ExitFate::kEscaped;
  const double t_s = pair.creation_time + pair.roundtrips_signal * t_rt;
  const double t_i = pair.creation_time + pair.roundtrips_idler * t_rt;

  auto emit = [&](double t, std::uint8_t ch, bool from_signal) {
    out.push_back(PhotonEvent{t, pair.id, ch, from_signal});
  };

  switch (basis) {
    case Basis::kHV:
      if (s_ok) emit(t_s, 0, true);
      if (i_ok) emit(t_i, 1, false);
      return;
    case Basis::kDiag: {
      if (s_ok && i_ok) {
        const double p_opp = opposite_port_probability(pair, config);
        if (u1 < p_opp) {
          const std::uint8_t ch_s = u2 < 0.5 ? 0 : 1;
          emit(t_s, ch_s, true);
          emit(t_i, static_cast<std::uint8_t>(1 - ch_s), false);
        } else {
          const std::uint8_t ch = u2 < 0.5 ? 0 : 1;
          emit(t_s, ch, true);
          emit(t_i, ch, false);
        }
      } else if (s_ok || i_ok) {
        const std::uint8_t ch = u2 < 0.5 ? 0 : 1;
        if (s_ok) {
          emit(t_s, ch, true);
        } else {
          emit(t_i, ch, false);
        }
      }
      return;
    }
  }
  throw ValidationError("invalid measurement basis");
}

}  // namespace pairsim
