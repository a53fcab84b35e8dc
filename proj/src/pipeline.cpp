#include "pairsim/pipeline.hpp"

#include <algorithm>
#include <cmath>

#include "pairsim/physics.hpp"

namespace pairsim {

namespace {

struct CellContext {
  const SourceConfig* config;
  Basis basis;
  double path_difference;
  double duration;
  double loss_probability;
  double chopper_period;
  double chopper_open;
  std::uint64_t seed;
};

// Processes one generation cell: all per-pair physics, projection, losses
// and gating, appending surviving continuous-time events.
void process_cell(const CellContext& ctx, std::uint64_t cell, double t0,
                  double dt, std::vector<PairRecord>& pair_buffer,
                  std::vector<PhotonEvent>& event_buffer,
                  std::array<std::vector<std::int64_t>, 2>& tags,
                  std::uint64_t& pairs_generated) {
  const SourceConfig& cfg = *ctx.config;
  pair_buffer.clear();
  SplitMix64 gen_rng(derive_seed(ctx.seed, cell, Stream::kGeneration));
  generate_pairs_cell(cfg, gen_rng, t0, dt, cell * kPairsPerCellCap,
                      pair_buffer);
  pairs_generated += pair_buffer.size();

  for (auto& pair : pair_buffer) {
    SplitMix64 exit_rng(derive_seed(ctx.seed, pair.id, Stream::kCavityExit));
    cavity_exit(pair, cfg, exit_rng);
    apply_compensator(pair, cfg, ctx.path_difference);

    event_buffer.clear();
    SplitMix64 meas_rng(derive_seed(ctx.seed, pair.id, Stream::kMeasurement));
    project_basis(pair, ctx.basis, cfg, meas_rng, event_buffer);

    // Two loss draws per pair, keyed to photon identity so the decision for
    // a given photon does not depend on whether its partner escaped.
    SplitMix64 loss_rng(derive_seed(ctx.seed, pair.id, Stream::kLoss));
    const double u_signal = uniform01(loss_rng);
    const double u_idler = uniform01(loss_rng);
    for (const auto& event : event_buffer) {
      const double u = event.from_signal ? u_signal : u_idler;
      if (u >= ctx.loss_probability) continue;
      if (std::fmod(event.time, ctx.chopper_period) >= ctx.chopper_open) {
        continue;
      }
      if (event.time < 0.0 || event.time >= ctx.duration) continue;
      tags[event.channel].push_back(static_cast<std::int64_t>(
          std::floor(event.time / cfg.tagger_resolution)));
    }
  }
}

}  // namespace

SimResult simulate(const SourceConfig& config, Basis basis, double duration,
                   std::uint64_t seed, double path_difference, int chunks) {
  config.validate();
  if (duration < 0.0 || !std::isfinite(duration)) {
    throw ValidationError("duration must be nonnegative");
  }
  if (chunks < 1) {
    throw ValidationError("chunks must be >= 1");
  }

  SimResult result;
  result.stream.resolution = config.tagger_resolution;
  result.stream.duration = duration;
  result.stream.live_time = config.chopper_duty_cycle * duration;
  if (duration == 0.0) return result;

  CellContext ctx;
  ctx.config = &config;
  ctx.basis = basis;
  ctx.path_difference = path_difference;
  ctx.duration = duration;
  ctx.loss_probability = config.fiber_coupling_efficiency *
                         config.optics_transmission *
                         config.detector_quantum_efficiency;
  ctx.chopper_period = 1.0 / config.chopper_frequency;
  ctx.chopper_open = config.chopper_duty_cycle * ctx.chopper_period;
  ctx.seed = seed;

  const auto n_cells =
      static_cast<std::uint64_t>(std::ceil(duration / kGenerationCell));
  const auto n_chunks =
      std::min<std::uint64_t>(static_cast<std::uint64_t>(chunks), n_cells);
  std::vector<PairRecord> pair_buffer;
  std::vector<PhotonEvent> event_buffer;
  for (std::uint64_t chunk = 0; chunk < n_chunks; ++chunk) {
    const std::uint64_t begin = chunk * n_cells / n_chunks;
    const std::uint64_t end = (chunk + 1) * n_cells / n_chunks;
    for (std::uint64_t cell = begin; cell < end; ++cell) {
      const double t0 = static_cast<double>(cell) * kGenerationCell;
      const double dt = std::min(kGenerationCell, duration - t0);
      process_cell(ctx, cell, t0, dt, pair_buffer, event_buffer,
                   result.stream.tags, result.pairs_generated);
    }
  }
  for (auto& channel : result.stream.tags) {
    std::sort(channel.begin(), channel.end());
  }
  return result;
}

RateSummary summarize(const TimeTagStream& stream, const SourceConfig& config) {
  RateSummary summary;
  summary.live_time = stream.live_time;
  if (!(summary.live_time > 0.0)) return summary;
  summary.singles_rate_a =
      static_cast<double>(stream.tags[0].size()) / summary.live_time;
  summary.singles_rate_b =
      static_cast<double>(stream.tags[1].size()) / summary.live_time;
  const auto coincidences =
      count_coincidences(stream, config.coincidence_window);
  summary.coincidences = coincidences.count;
  summary.raw_coincidence_rate =
      static_cast<double>(coincidences.count) / summary.live_time;
  summary.accidental_rate_est = accidental_rate(
      summary.singles_rate_a, summary.singles_rate_b,
      effective_window(config.coincidence_window, stream.resolution));
  summary.corrected_coincidence_rate =
      summary.raw_coincidence_rate - summary.accidental_rate_est;
  return summary;
}

HomScanResult run_hom_scan(const SourceConfig& config,
                           const std::vector<double>& grid,
                           double duration_per_point, std::uint64_t seed) {
  config.validate();
  if (grid.empty()) {
    throw ValidationError("scan grid must be nonempty");
  }
  if (!(duration_per_point > 0.0)) {
    throw ValidationError("duration per point must be strictly positive");
  }
  std::vector<ScanPoint> points;
  points.reserve(grid.size());
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const std::uint64_t point_seed = derive_seed(seed, i, Stream::kScanPoint);
    auto sim = simulate(config, Basis::kDiag, duration_per_point, point_seed,
                        grid[i]);
    const auto coinc =
        count_coincidences(sim.stream, config.hom_scan_window);
    ScanPoint p;
    p.path_difference = grid[i];
    p.coincidences = coinc.count;
    p.singles_a = sim.stream.tags[0].size();
    p.singles_b = sim.stream.tags[1].size();
    p.live_time = sim.stream.live_time;
    points.push_back(p);
  }
  return analyze_scan(points, config.hom_scan_window,
                      config.tagger_resolution);
}

}  // namespace pairsim
