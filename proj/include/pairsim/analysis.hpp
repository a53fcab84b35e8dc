#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "pairsim/detection.hpp"

namespace pairsim {

struct CoincidenceResult {
  std::uint64_t count = 0;
  std::vector<std::int64_t> delta_tags;  // t_A - t_B, signed tagger units
};

// All A-B pairs with |t_A - t_B| <= window/2, i.e. `window` is the total
// accepted range of arrival-time differences. With this convention the
// accidental rate on Poisson background is r_A * r_B * window.
CoincidenceResult count_coincidences(const TimeTagStream& stream,
                                     double window);

// r1 * r2 * window.
double accidental_rate(double r1, double r2, double window);

// Width actually accepted by the integer tag comparison: (2m+1)*resolution
// with m = floor(window / (2 resolution)).
double effective_window(double window, double resolution);

struct Histogram {
  double bin_width = 0.0;   // s
  double origin = 0.0;      // s, left edge of bin 0; range symmetric about 0
  std::vector<std::uint64_t> counts;
  std::uint64_t total_events = 0;

  double bin_center(std::size_t i) const {
    return origin + (static_cast<double>(i) + 0.5) * bin_width;
  }
};

// Symmetric histogram over [-range, +range), floor binning.
Histogram build_histogram(const std::vector<double>& deltas, double bin_width,
                          double range);
Histogram build_histogram(const std::vector<std::int64_t>& delta_tags,
                          double resolution, double bin_width, double range);

struct CombContrast {
  std::vector<double> pair_position;    // bin-pair index relative to dt = 0
  std::vector<double> signed_contrast;  // smoothed; NaN where counts < min
  std::vector<double> contrast;         // |signed_contrast|
  double period = 0.0;                  // peaks between contrast minima; NaN
                                        // when fewer than two minima exist
};

// Alternating-bin contrast of a tagger-resolution histogram. Bin pairs with
// fewer than min_counts events are excluded. Contrast minima are located as
// zero crossings of the smoothed signed contrast.
CombContrast comb_contrast(const Histogram& hist, int smooth_window = 5,
                           std::uint64_t min_counts = 25);

// Exponential decay constant of the comb envelope: bins are grouped by
// nearest round-trip index and log-linear regressed after subtracting a
// flat background (counts per bin). Returns seconds.
double fit_envelope_decay(const Histogram& hist, double round_trip_time,
                          double background_per_bin = 0.0);

// Median spacing of histogram peaks (for fine-binned combs). Returns seconds.
double estimate_peak_spacing(const Histogram& hist);

struct TriangleFit {
  double r_avg = 0.0;          // fitted rate away from the dip
  double zeta = 0.0;           // 1/s
  double width = 0.0;          // m, base-to-base, 4c/zeta
  double center = 0.0;         // m
  double v = 0.0;              // dip floor parameter in [0,1]
  double visibility = 0.0;     // (Cmax - Cmin)/(Cmax + Cmin) of the fit
  double residual_norm = 0.0;
  bool converged = false;
  int evaluations = 0;
};

// Least-squares fit of R(x) = r_avg (1 - v tri(2 (x - center) / width)) via
// profiled linear parameters and Nelder-Mead over (center, width) with
// multistart. mask: points set to false are excluded.
TriangleFit fit_triangle(const std::vector<double>& path_difference,
                         const std::vector<double>& rate,
                         const std::vector<bool>* mask = nullptr);

// (cmax - cmin)/(cmax + cmin); throws ValidationError on invalid inputs.
double visibility(double c_max, double c_min);

struct ScanPoint {
  double path_difference = 0.0;  // m
  std::uint64_t coincidences = 0;
  std::uint64_t singles_a = 0;
  std::uint64_t singles_b = 0;
  double live_time = 0.0;  // s
};

struct HomScanResult {
  std::vector<ScanPoint> points;
  double window = 0.0;  // coincidence window used, s
  TriangleFit fit_raw;
  TriangleFit fit_corrected;
  double visibility_raw = 0.0;
  double visibility_corrected = 0.0;
  double visibility_raw_sigma = 0.0;
  double visibility_corrected_sigma = 0.0;
};

// Fits raw and accidental-subtracted rates of an already-measured scan.
// The accidental estimate per point is R_A R_B w_eff with the singles rates
// measured at that point.
HomScanResult analyze_scan(const std::vector<ScanPoint>& points, double window,
                           double resolution,
                           const std::vector<bool>* mask = nullptr);

}  // namespace pairsim
