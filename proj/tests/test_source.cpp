#include <cmath>
#include <numbers>
#include <vector>

#include "doctest.h"
#include "pairsim/physics.hpp"
#include "pairsim/source.hpp"

using namespace pairsim;

namespace {

PairRecord make_pair(double position, int n_signal, int n_idler,
                     bool escaped = true) {
  PairRecord p;
  p.creation_time = 0.0;
  p.crystal_position = position;
  p.roundtrips_signal = n_signal;
  p.roundtrips_idler = n_idler;
  p.exit_signal = escaped ? ExitFate::kEscaped : ExitFate::kLostInCavity;
  p.exit_idler = escaped ? ExitFate::kEscaped : ExitFate::kLostInCavity;
  return p;
}

// Ensemble-averaged opposite-port probability over the uniform crystal
// position, by direct Monte Carlo over positions only.
double mc_opposite_probability(const SourceConfig& cfg, double path_difference,
                               int n, std::uint64_t seed) {
  SplitMix64 rng(seed);
  double sum = 0.0;
  for (int i = 0; i < n; ++i) {
    auto pair = make_pair(uniform01(rng), 3, 3);
    apply_compensator(pair, cfg, path_difference);
    sum += opposite_port_probability(pair, cfg);
  }
  return sum / n;
}

double triangle(double x) { return std::max(0.0, 1.0 - std::abs(x)); }

}  // namespace

TEST_CASE("pair generation is a seeded Poisson process") {
  SourceConfig cfg;  // 3.4e6 pairs/(s mW) at 0.2 mW -> mean 6.8e5 in 1 s
  const auto pairs = generate_pairs(cfg, 42, 1.0);
  const double mean = 6.8e5;
  CHECK(std::abs(static_cast<double>(pairs.size()) - mean) <
        5.0 * std::sqrt(mean));

  // Deterministic given the seed.
  const auto again = generate_pairs(cfg, 42, 1.0);
  REQUIRE(again.size() == pairs.size());
  CHECK(again[100].creation_time == pairs[100].creation_time);
  CHECK(again[100].crystal_position == pairs[100].crystal_position);

  // Positions are uniform on [0,1].
  double pos_sum = 0.0;
  for (const auto& p : pairs) pos_sum += p.crystal_position;
  CHECK(pos_sum / static_cast<double>(pairs.size()) ==
        doctest::Approx(0.5).epsilon(0.01));

  SourceConfig off = cfg;
  off.pair_rate_per_mw = 0.0;
  CHECK(generate_pairs(off, 42, 1.0).empty());
  CHECK(generate_pairs(cfg, 42, 0.0).empty());
  CHECK_THROWS_AS(generate_pairs(cfg, 42, -1.0), ValidationError);
}

TEST_CASE("cavity exit samples geometric round trips") {
  SourceConfig cfg;
  const double p_term = 2.0 * std::numbers::pi / cfg.finesse;
  CHECK(p_term == doctest::Approx(0.0898).epsilon(0.001));

  SplitMix64 rng(7);
  const int n = 1000000;
  double sum = 0.0;
  std::uint64_t escaped = 0;
  std::vector<std::uint64_t> delta_hist(64, 0);
  for (int i = 0; i < n; ++i) {
    auto pair = make_pair(0.5, 0, 0);
    cavity_exit(pair, cfg, rng);
    REQUIRE(pair.roundtrips_signal >= 1);
    sum += pair.roundtrips_signal;
    if (pair.exit_signal == ExitFate::kEscaped) ++escaped;
    const auto d = static_cast<std::size_t>(
        std::abs(pair.roundtrips_signal - pair.roundtrips_idler));
    if (d < delta_hist.size()) ++delta_hist[d];
  }
  // Mean round trips 1/p ~ 11.1.
  CHECK(sum / n == doctest::Approx(1.0 / p_term).epsilon(0.01));
  CHECK(static_cast<double>(escaped) / n ==
        doctest::Approx(cfg.escape_efficiency).epsilon(0.005));

  // |delta n| is double-sided geometric; its envelope decay time
  // T_rt/(-ln(1-p)) ~ 21.6 ns agrees with the ring-down time within 10%.
  const auto dq = derive_quantities(cfg);
  const double expected_decay =
      dq.round_trip_time / (-std::log1p(-p_term));
  CHECK(expected_decay == doctest::Approx(dq.ring_down_time).epsilon(0.10));
  // Monte Carlo slope of ln P(|dn|=d) between d=2 and d=20.
  const double slope = (std::log(static_cast<double>(delta_hist[20])) -
                        std::log(static_cast<double>(delta_hist[2]))) /
                       18.0;
  CHECK(dq.round_trip_time / (-slope) ==
        doctest::Approx(expected_decay).epsilon(0.05));
}

TEST_CASE("infinite finesse is rejected at cavity exit") {
  SourceConfig cfg;
  cfg.finesse = 1e30;  // p_term underflows the (0,1] contract? no: p>0 ok
  cfg.finesse = 5.0;   // p_term > 1
  SplitMix64 rng(1);
  auto pair = make_pair(0.5, 0, 0);
  CHECK_THROWS_WITH_AS(cavity_exit(pair, cfg, rng),
                       doctest::Contains("finesse"), ValidationError);
}

TEST_CASE("compensator residual delay") {
  SourceConfig cfg;
  const double total_walkoff = cfg.crystal_length * cfg.group_delay_mismatch;
  CHECK(total_walkoff == doctest::Approx(6.76e-12).epsilon(0.001));

  auto mid = make_pair(0.5, 1, 1);
  apply_compensator(mid, cfg, cfg.hom_dip_center);
  CHECK(mid.residual_delay == doctest::Approx(0.0));

  auto front = make_pair(0.0, 1, 1);
  apply_compensator(front, cfg, cfg.hom_dip_center);
  CHECK(front.residual_delay == doctest::Approx(-3.38e-12).epsilon(0.002));
  auto back = make_pair(1.0, 1, 1);
  apply_compensator(back, cfg, cfg.hom_dip_center);
  CHECK(back.residual_delay == doctest::Approx(3.38e-12).epsilon(0.002));

  // Offsetting the path by the full base width spans the triangle:
  // 2.03 mm shifts the delay by the full walk-off window.
  const auto dq = derive_quantities(cfg);
  auto shifted = make_pair(0.5, 1, 1);
  apply_compensator(shifted, cfg, cfg.hom_dip_center + dq.hom_base_width);
  CHECK(shifted.residual_delay ==
        doctest::Approx(-total_walkoff).epsilon(1e-9));
}

TEST_CASE("HV projection is deterministic and comb-locked") {
  SourceConfig cfg;
  const auto dq = derive_quantities(cfg);
  SplitMix64 rng(3);
  std::vector<PhotonEvent> events;
  for (int i = 0; i < 1000; ++i) {
    auto pair = make_pair(0.3, 2 + i % 7, 5, true);
    apply_compensator(pair, cfg, cfg.hom_dip_center);
    events.clear();
    project_basis(pair, Basis::kHV, cfg, rng, events);
    REQUIRE(events.size() == 2);
    CHECK(events[0].channel == 0);
    CHECK(events[1].channel == 1);
    // Arrival-time difference is an exact integer multiple of the
    // round-trip time before quantization.
    const double dt = events[0].time - events[1].time;
    const double multiple = dt / dq.round_trip_time;
    CHECK(std::abs(multiple - std::round(multiple)) < 1e-9);
  }
}

TEST_CASE("photon number conservation") {
  SourceConfig cfg;
  SplitMix64 rng(11);
  std::vector<PhotonEvent> events;
  for (auto basis : {Basis::kHV, Basis::kDiag}) {
    for (int mask = 0; mask < 4; ++mask) {
      auto pair = make_pair(0.5, 2, 2);
      pair.exit_signal = (mask & 1) ? ExitFate::kEscaped
                                    : ExitFate::kLostInCavity;
      pair.exit_idler = (mask & 2) ? ExitFate::kEscaped
                                   : ExitFate::kLostInCavity;
      apply_compensator(pair, cfg, cfg.hom_dip_center);
      events.clear();
      project_basis(pair, basis, cfg, rng, events);
      const std::size_t expected =
          static_cast<std::size_t>((mask & 1) != 0) +
          static_cast<std::size_t>((mask & 2) != 0);
      CHECK(events.size() == expected);
    }
  }
}

TEST_CASE("diagonal-basis interference follows the triangular kernel") {
  SourceConfig cfg;
  cfg.hv_spectral_overlap = 1.0;
  const auto dq = derive_quantities(cfg);
  const double half_base = dq.hom_base_width / 2.0;

  // At the dip center every pair interferes: ensemble p -> 0.
  CHECK(mc_opposite_probability(cfg, cfg.hom_dip_center, 200000, 1) ==
        doctest::Approx(0.0).epsilon(1e-12));
  // Beyond the base the pairs are fully distinguishable: p = 1/2.
  CHECK(mc_opposite_probability(
            cfg, cfg.hom_dip_center + 1.05 * half_base, 200000, 2) ==
        doctest::Approx(0.5).epsilon(1e-12));
  // At half the half-base the kernel gives 1/4.
  const double x = cfg.hom_dip_center + 0.25 * dq.hom_base_width;
  const double p_mc = mc_opposite_probability(cfg, x, 400000, 3);
  CHECK(p_mc == doctest::Approx(0.25).epsilon(0.02));

  // Brute-force quadrature over the generation position as an independent
  // oracle for the same point.
  const int steps = 200001;
  double acc = 0.0;
  for (int i = 0; i < steps; ++i) {
    auto pair = make_pair((i + 0.5) / steps, 4, 4);
    apply_compensator(pair, cfg, x);
    acc += opposite_port_probability(pair, cfg);
  }
  CHECK(acc / steps == doctest::Approx(0.25).epsilon(1e-4));
}

TEST_CASE("ensemble opposite-port probability matches (1 - V tri)/2") {
  SourceConfig cfg;  // V = 0.98
  const auto dq = derive_quantities(cfg);
  const int n = 100000;
  SplitMix64 pos_rng(17);
  int grid_index = 0;
  for (double frac : {-1.2, -0.75, -0.4, 0.0, 0.3, 0.6, 0.9, 1.3}) {
    const double dl = frac * dq.hom_base_width / 2.0;
    SplitMix64 rng(1000 + grid_index);
    int opposite = 0;
    for (int i = 0; i < n; ++i) {
      auto pair = make_pair(uniform01(pos_rng), 6, 6);
      apply_compensator(pair, cfg, cfg.hom_dip_center + dl);
      std::vector<PhotonEvent> events;
      project_basis(pair, Basis::kDiag, cfg, rng, events);
      REQUIRE(events.size() == 2);
      if (events[0].channel != events[1].channel) ++opposite;
    }
    const double expected =
        0.5 * (1.0 - cfg.hv_spectral_overlap *
                         triangle(dl * dq.zeta / (2.0 * kSpeedOfLight)));
    const double sigma = std::sqrt(expected * (1 - expected) / n) + 1e-12;
    CHECK(std::abs(static_cast<double>(opposite) / n - expected) <
          3.0 * sigma + 1e-9);
    ++grid_index;
  }
}

TEST_CASE("rectangular-amplitude autocorrelation reproduces the triangle") {
  // Independent oracle for the interference kernel: the overlap of the
  // rectangular biphoton amplitude of width T with its mirror image shifted
  // by 2*delta, computed by numerical quadrature.
  const double T = 6.76e-12;
  const int steps = 20000;
  auto rect = [&](double t) { return (std::abs(t) <= T / 2) ? 1.0 : 0.0; };
  for (double frac : {0.0, 0.2, 0.5, 0.8, 1.0, 1.3}) {
    const double delta = frac * T / 2.0;  // path offset in time units
    double acc = 0.0;
    const double dt = 2.0 * T / steps;
    for (int i = 0; i < steps; ++i) {
      const double t = -T + (i + 0.5) * dt;
      acc += rect(t) * rect(-t + 2.0 * delta) * dt;
    }
    const double overlap = acc / T;
    CHECK(overlap == doctest::Approx(triangle(2.0 * delta / T)).epsilon(0.01));
  }
}
