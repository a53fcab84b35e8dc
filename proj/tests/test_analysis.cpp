#include <algorithm>
#include <cmath>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "pairsim/analysis.hpp"
#include "pairsim/physics.hpp"
#include "pairsim/rng.hpp"

using namespace pairsim;

namespace {

TimeTagStream make_stream(std::vector<std::int64_t> a,
                          std::vector<std::int64_t> b,
                          double resolution = 1e-9, double duration = 1.0) {
  TimeTagStream s;
  s.resolution = resolution;
  s.duration = duration;
  s.live_time = duration;
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  s.tags[0] = std::move(a);
  s.tags[1] = std::move(b);
  return s;
}

// O(n^2) reference counter, same |t_A - t_B| <= window/2 convention.
std::uint64_t brute_force(const TimeTagStream& s, double window) {
  const auto m = static_cast<std::int64_t>(
      std::floor(window / (2.0 * s.resolution)));
  std::uint64_t count = 0;
  for (auto ta : s.tags[0])
    for (auto tb : s.tags[1])
      if (std::llabs(ta - tb) <= m) ++count;
  return count;
}

std::vector<std::int64_t> poisson_tags(double rate, double duration,
                                       double resolution, std::uint64_t seed) {
  SplitMix64 rng(seed);
  std::vector<std::int64_t> tags;
  double t = 0.0;
  while (true) {
    t += -std::log(1.0 - uniform01(rng)) / rate;
    if (t >= duration) break;
    tags.push_back(static_cast<std::int64_t>(t / resolution));
  }
  return tags;
}

double triangle(double x) { return std::max(0.0, 1.0 - std::abs(x)); }

}  // namespace

TEST_CASE("coincidence counting examples") {
  // 100 ns apart inside a 256 ns window.
  auto s = make_stream({0}, {100});
  auto res = count_coincidences(s, 256e-9);
  CHECK(res.count == 1);
  REQUIRE(res.delta_tags.size() == 1);
  CHECK(res.delta_tags[0] == -100);

  // 300 ns apart: outside.
  CHECK(count_coincidences(make_stream({0}, {300}), 256e-9).count == 0);
  // Exactly at the half window, inclusive.
  CHECK(count_coincidences(make_stream({0}, {128}), 256e-9).count == 1);
  CHECK(count_coincidences(make_stream({0}, {129}), 256e-9).count == 0);
  // Empty channels.
  CHECK(count_coincidences(make_stream({}, {1, 2}), 256e-9).count == 0);
  // Multiple partners are all counted.
  CHECK(count_coincidences(make_stream({0, 1}, {50, 60}), 256e-9).count == 4);
}

TEST_CASE("two-pointer counter agrees exactly with the quadratic oracle") {
  SplitMix64 rng(99);
  for (int rep = 0; rep < 3; ++rep) {
    std::vector<std::int64_t> a, b;
    for (int i = 0; i < 10000; ++i) {
      a.push_back(static_cast<std::int64_t>(uniform01(rng) * 1e6));
      b.push_back(static_cast<std::int64_t>(uniform01(rng) * 1e6));
    }
    auto s = make_stream(std::move(a), std::move(b));
    for (double w : {2e-9, 64e-9, 256e-9, 1e-6}) {
      CHECK(count_coincidences(s, w).count == brute_force(s, w));
    }
  }
}

TEST_CASE("accidental coincidences on Poisson background") {
  const double r1 = 70000.0, r2 = 72000.0, duration = 2.0;
  auto s = make_stream(poisson_tags(r1, duration, 1e-9, 1),
                       poisson_tags(r2, duration, 1e-9, 2), 1e-9, duration);
  const double window = 256e-9;
  const auto res = count_coincidences(s, window);
  const double w_eff = effective_window(window, 1e-9);
  const double expected = r1 * r2 * w_eff * duration;
  CHECK(std::abs(static_cast<double>(res.count) - expected) <
        4.0 * std::sqrt(expected));
  CHECK(accidental_rate(r1, r2, window) ==
        doctest::Approx(r1 * r2 * window));
  CHECK(accidental_rate(142000.0, 142000.0, 256e-9) ==
        doctest::Approx(5162.0).epsilon(0.001));
}

TEST_CASE("effective window of the integer comparison") {
  CHECK(effective_window(256e-9, 1e-9) == doctest::Approx(257e-9));
  CHECK(effective_window(2e-9, 1e-9) == doctest::Approx(3e-9));
  CHECK(effective_window(1e-9, 1e-9) == doctest::Approx(1e-9));
  CHECK_THROWS_AS(effective_window(1e-9, 0.0), ValidationError);
}

TEST_CASE("histogram construction") {
  Histogram h = build_histogram(std::vector<double>{}, 1e-9, 10e-9);
  CHECK(h.total_events == 0);
  CHECK(std::all_of(h.counts.begin(), h.counts.end(),
                    [](std::uint64_t c) { return c == 0; }));
  CHECK(h.origin == doctest::Approx(-10e-9));

  // Floor binning on both sides of zero.
  h = build_histogram({-0.4e-9, 0.4e-9, 1.2e-9}, 1e-9, 2e-9);
  REQUIRE(h.counts.size() == 4);
  CHECK(h.counts[1] == 1);  // [-1, 0)
  CHECK(h.counts[2] == 1);  // [0, 1)
  CHECK(h.counts[3] == 1);  // [1, 2)
  CHECK(h.total_events == 3);
  CHECK(h.bin_center(2) == doctest::Approx(0.5e-9));

  // Tag overload agrees with the double overload.
  const auto ht = build_histogram(std::vector<std::int64_t>{-1, 0, 1}, 1e-9,
                                  1e-9, 2e-9);
  CHECK(ht.counts[1] == 1);
  CHECK(ht.counts[2] == 1);
  CHECK(ht.counts[3] == 1);
}

TEST_CASE("alternating-bin contrast finds the aliasing beat period") {
  // Synthetic comb as a 1 ns tagger records it: teeth at multiples of
  // 2.0347 ns, each split over the two adjacent integer bins because the
  // tooth offset dithers across the tag grid. floor(t + s) - floor(t) for
  // uniform t is floor(s) + Bernoulli(frac(s)).
  const double t_rt = 2.0347e-9;
  const double bin = 1e-9;
  const double decay = 22.66e-9;
  std::vector<std::int64_t> delta_tags;
  for (int d = -120; d <= 120; ++d) {
    const double s = d * t_rt / bin;
    const double lo = std::floor(s);
    const double frac = s - lo;
    const int weight =
        static_cast<int>(20000.0 * std::exp(-std::abs(d) * t_rt / decay)) + 60;
    const int n_hi = static_cast<int>(std::lround(weight * frac));
    for (int k = 0; k < weight - n_hi; ++k)
      delta_tags.push_back(static_cast<std::int64_t>(lo));
    for (int k = 0; k < n_hi; ++k)
      delta_tags.push_back(static_cast<std::int64_t>(lo) + 1);
  }
  const auto h = build_histogram(delta_tags, bin, bin, 250e-9);
  const auto cc = comb_contrast(h);
  REQUIRE(!cc.signed_contrast.empty());
  // Expected beat: tooth phase slips by (s - 2) per tooth with s = 2.0347
  // bins, so the sign flips every s / (2 (s - 2)) ~ 29.3 bin pairs.
  const double s = t_rt / bin;
  const double expected = s / (2.0 * (s - 2.0));
  CHECK(expected == doctest::Approx(29.3).epsilon(0.01));
  CHECK(std::isfinite(cc.period));
  CHECK(cc.period == doctest::Approx(expected).epsilon(0.08));

  // Contrast magnitude near zero delay is high: teeth dominate their bins.
  const std::size_t mid = cc.pair_position.size() / 2;
  CHECK(cc.contrast[mid] > 0.8);
}

TEST_CASE("commensurate comb has no beat") {
  // Teeth at exactly 2 ns on a 1 ns histogram: every tooth lands on an even
  // bin, the signed contrast never crosses zero, the period is NaN.
  std::vector<double> deltas;
  for (int d = -50; d <= 50; ++d)
    for (int k = 0; k < 200; ++k) deltas.push_back(d * 2e-9);
  const auto cc = comb_contrast(build_histogram(deltas, 1e-9, 110e-9));
  CHECK(std::isnan(cc.period));
}

TEST_CASE("sparse bin pairs are excluded from the contrast") {
  std::vector<double> deltas;
  for (int k = 0; k < 1000; ++k) deltas.push_back(0.2e-9);
  for (int k = 0; k < 4; ++k) deltas.push_back(40.2e-9);  // below min_counts
  const auto cc = comb_contrast(build_histogram(deltas, 1e-9, 50e-9));
  const std::size_t mid = cc.pair_position.size() / 2;
  CHECK(std::isfinite(cc.signed_contrast[mid]));
  bool found_nan = false;
  for (double c : cc.signed_contrast) found_nan |= std::isnan(c);
  CHECK(found_nan);
}

TEST_CASE("envelope decay regression recovers the synthetic constant") {
  const double t_rt = 2.0347e-9;
  const double decay = 22.66e-9;
  std::vector<double> deltas;
  SplitMix64 rng(4);
  for (int d = -100; d <= 100; ++d) {
    const double t = d * t_rt;
    const int n = static_cast<int>(30000.0 * std::exp(-std::abs(t) / decay));
    for (int k = 0; k < n; ++k)
      deltas.push_back(t + (uniform01(rng) - 0.5) * 0.2e-9);
  }
  const auto h = build_histogram(deltas, 1e-9, 220e-9);
  CHECK(fit_envelope_decay(h, t_rt) == doctest::Approx(decay).epsilon(0.03));

  // A flat accidental pedestal biases the naive fit long; subtracting the
  // known background recovers the true constant.
  Histogram with_bg = h;
  for (auto& c : with_bg.counts) c += 200;
  CHECK(fit_envelope_decay(with_bg, t_rt) > 1.1 * decay);
  CHECK(fit_envelope_decay(with_bg, t_rt, 200.0) ==
        doctest::Approx(decay).epsilon(0.03));
  CHECK_THROWS_AS(fit_envelope_decay(h, t_rt, -1.0), ValidationError);

  Histogram flat = build_histogram(std::vector<double>{}, 1e-9, 220e-9);
  CHECK_THROWS_AS(fit_envelope_decay(flat, t_rt), ValidationError);
}

TEST_CASE("peak spacing estimate on a fine-binned comb") {
  std::vector<double> deltas;
  for (int d = -10; d <= 10; ++d)
    for (int k = 0; k < 500; ++k) deltas.push_back(d * 2.0347e-9);
  const auto h = build_histogram(deltas, 0.01e-9, 25e-9);
  CHECK(estimate_peak_spacing(h) == doctest::Approx(2.0347e-9).epsilon(0.005));
}

TEST_CASE("triangle fit recovers noiseless parameters to four figures") {
  const double center = 4.0e-3, width = 2.0256e-3, v = 0.82, r = 35000.0;
  std::vector<double> x, rate;
  for (int i = 0; i <= 40; ++i) {
    const double xi = i * 8.0e-3 / 40.0;
    x.push_back(xi);
    rate.push_back(r * (1.0 - v * triangle(2.0 * (xi - center) / width)));
  }
  const auto fit = fit_triangle(x, rate);
  REQUIRE(fit.converged);
  CHECK(fit.center == doctest::Approx(center).epsilon(1e-4));
  CHECK(fit.width == doctest::Approx(width).epsilon(1e-4));
  CHECK(fit.v == doctest::Approx(v).epsilon(1e-4));
  CHECK(fit.r_avg == doctest::Approx(r).epsilon(1e-4));
  CHECK(fit.visibility == doctest::Approx(v / (2.0 - v)).epsilon(1e-4));
  CHECK(fit.zeta == doctest::Approx(4.0 * kSpeedOfLight / width).epsilon(1e-4));

  // Rescaling the rates rescales r_avg only.
  std::vector<double> rate10 = rate;
  for (double& ri : rate10) ri *= 10.0;
  const auto fit10 = fit_triangle(x, rate10);
  CHECK(fit10.center == doctest::Approx(fit.center).epsilon(1e-6));
  CHECK(fit10.width == doctest::Approx(fit.width).epsilon(1e-6));
  CHECK(fit10.v == doctest::Approx(fit.v).epsilon(1e-6));
  CHECK(fit10.r_avg == doctest::Approx(10.0 * fit.r_avg).epsilon(1e-6));
}

TEST_CASE("triangle fit handles degenerate inputs") {
  std::vector<double> x, flat;
  for (int i = 0; i < 20; ++i) {
    x.push_back(i * 1e-4);
    flat.push_back(1000.0);
  }
  const auto fit = fit_triangle(x, flat);
  CHECK(fit.v == doctest::Approx(0.0).epsilon(1e-6));
  CHECK(fit.visibility == doctest::Approx(0.0).epsilon(1e-6));

  CHECK_THROWS_AS(fit_triangle({0.0, 1.0}, {1.0, 2.0}), ValidationError);
  CHECK_THROWS_AS(fit_triangle({0.0, 1.0, 2.0}, {1.0, 2.0}), ValidationError);
}

TEST_CASE("mask excludes points from the fit") {
  const double center = 2.0e-3, width = 2.0e-3, v = 0.9, r = 1e4;
  std::vector<double> x, rate;
  std::vector<bool> mask;
  for (int i = 0; i <= 40; ++i) {
    const double xi = i * 8.0e-3 / 40.0;
    x.push_back(xi);
    const bool keep = xi < 6.0e-3;
    // Corrupt masked-out points; the fit must ignore them.
    rate.push_back(keep ? r * (1.0 - v * triangle(2.0 * (xi - center) / width))
                        : 12.0 * r);
    mask.push_back(keep);
  }
  const auto fit = fit_triangle(x, rate, &mask);
  REQUIRE(fit.converged);
  CHECK(fit.center == doctest::Approx(center).epsilon(1e-4));
  CHECK(fit.v == doctest::Approx(v).epsilon(1e-4));
}

TEST_CASE("visibility from extreme rates") {
  CHECK(visibility(100.0, 0.0) == doctest::Approx(1.0));
  CHECK(visibility(3.0, 1.0) == doctest::Approx(0.5));
  CHECK(visibility(1.0, 1.0) == doctest::Approx(0.0));
  CHECK_THROWS_AS(visibility(0.0, 0.0), ValidationError);
  CHECK_THROWS_AS(visibility(1.0, -0.5), ValidationError);
  CHECK_THROWS_AS(visibility(1.0, 2.0), ValidationError);
}

TEST_CASE("scan analysis subtracts per-point accidentals") {
  // Synthetic scan with a flat accidental floor from the singles rates.
  const double center = 4.0e-3, width = 2.0256e-3, v = 0.82;
  const double r_true = 30000.0, live = 5.0, window = 34e-9;
  const double resolution = 1e-9;
  const double w_eff = effective_window(window, resolution);
  const double singles = 142000.0;
  const double acc = singles * singles * w_eff;
  std::vector<ScanPoint> points;
  for (int i = 0; i <= 40; ++i) {
    ScanPoint p;
    p.path_difference = i * 8.0e-3 / 40.0;
    const double rate =
        r_true *
            (1.0 - v * triangle(2.0 * (p.path_difference - center) / width)) +
        acc;
    p.coincidences = static_cast<std::uint64_t>(std::llround(rate * live));
    p.singles_a = static_cast<std::uint64_t>(std::llround(singles * live));
    p.singles_b = p.singles_a;
    p.live_time = live;
    points.push_back(p);
  }
  const auto res = analyze_scan(points, window, resolution);
  REQUIRE(res.fit_corrected.converged);
  CHECK(res.fit_corrected.v == doctest::Approx(v).epsilon(0.01));
  CHECK(res.fit_corrected.center == doctest::Approx(center).epsilon(1e-3));
  CHECK(res.visibility_corrected ==
        doctest::Approx(v / (2.0 - v)).epsilon(0.01));
  // The raw dip is shallower than the corrected one.
  CHECK(res.visibility_raw < res.visibility_corrected);
  CHECK(res.visibility_raw_sigma > 0.0);
  CHECK(res.visibility_raw_sigma < 0.05);
}
