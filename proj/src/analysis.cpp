#include "pairsim/analysis.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>
#include <numeric>

#include "pairsim/physics.hpp"

namespace pairsim {

CoincidenceResult count_coincidences(const TimeTagStream& stream,
                                     double window) {
  if (window < stream.resolution) {
    throw ValidationError("coincidence window must be >= tagger resolution");
  }
  const auto m = static_cast<std::int64_t>(
      std::floor(window / (2.0 * stream.resolution)));
  const auto& a = stream.tags[0];
  const auto& b = stream.tags[1];
  CoincidenceResult result;
  std::size_t lo = 0;
  for (std::int64_t ta : a) {
    while (lo < b.size() && b[lo] < ta - m) ++lo;
    for (std::size_t j = lo; j < b.size() && b[j] <= ta + m; ++j) {
      result.delta_tags.push_back(ta - b[j]);
    }
  }
  result.count = result.delta_tags.size();
  return result;
}

double accidental_rate(double r1, double r2, double window) {
  if (r1 < 0.0 || r2 < 0.0 || window < 0.0) {
    throw ValidationError("accidental_rate inputs must be nonnegative");
  }
  return r1 * r2 * window;
}

double effective_window(double window, double resolution) {
  if (!(resolution > 0.0)) {
    throw ValidationError("resolution must be strictly positive");
  }
  if (window < 0.0) {
    throw ValidationError("window must be nonnegative");
  }
  const auto m =
      static_cast<std::int64_t>(std::floor(window / (2.0 * resolution)));
  return static_cast<double>(2 * m + 1) * resolution;
}

Histogram build_histogram(const std::vector<double>& deltas, double bin_width,
                          double range) {
  if (!(bin_width > 0.0)) {
    throw ValidationError("bin_width must be strictly positive");
  }
  if (!(range > 0.0)) {
    throw ValidationError("range must be strictly positive");
  }
  Histogram hist;
  hist.bin_width = bin_width;
  const auto n_half = static_cast<std::size_t>(std::ceil(range / bin_width));
  hist.origin = -static_cast<double>(n_half) * bin_width;
  hist.counts.assign(2 * n_half, 0);
  hist.total_events = deltas.size();
  for (double dt : deltas) {
    const double pos = (dt - hist.origin) / bin_width;
    // Nudge against representation error so exact bin multiples land in
    // the bin they name.
    const auto idx = static_cast<std::int64_t>(std::floor(pos + 1e-9));
    if (idx >= 0 && idx < static_cast<std::int64_t>(hist.counts.size())) {
      ++hist.counts[static_cast<std::size_t>(idx)];
    }
  }
  return hist;
}

Histogram build_histogram(const std::vector<std::int64_t>& delta_tags,
                          double resolution, double bin_width, double range) {
  std::vector<double> deltas;
  deltas.reserve(delta_tags.size());
  for (std::int64_t t : delta_tags) {
    deltas.push_back(static_cast<double>(t) * resolution);
  }
  return build_histogram(deltas, bin_width, range);
}

CombContrast comb_contrast(const Histogram& hist, int smooth_window,
                           std::uint64_t min_counts) {
  const double nan = std::numeric_limits<double>::quiet_NaN();
  CombContrast out;
  const std::size_t n = hist.counts.size();
  // Index of the bin containing dt = 0.
  const auto i0 = static_cast<std::int64_t>(
      std::llround(-hist.origin / hist.bin_width));
  // Disjoint bin pairs aligned so that (i0, i0+1) is a pair.
  std::int64_t start = i0 % 2;
  std::vector<double> raw;
  std::vector<double> pos;
  for (std::int64_t i = start; i + 1 < static_cast<std::int64_t>(n); i += 2) {
    const auto c0 = hist.counts[static_cast<std::size_t>(i)];
    const auto c1 = hist.counts[static_cast<std::size_t>(i + 1)];
    pos.push_back(static_cast<double>(i - i0) / 2.0);
    if (c0 + c1 < min_counts) {
      raw.push_back(nan);
    } else {
      raw.push_back((static_cast<double>(c0) - static_cast<double>(c1)) /
                    static_cast<double>(c0 + c1));
    }
  }

  // Centered moving average skipping excluded pairs.
  const int half = std::max(0, smooth_window / 2);
  std::vector<double> smoothed(raw.size(), nan);
  for (std::size_t k = 0; k < raw.size(); ++k) {
    double sum = 0.0;
    int cnt = 0;
    for (int d = -half; d <= half; ++d) {
      const auto j = static_cast<std::int64_t>(k) + d;
      if (j < 0 || j >= static_cast<std::int64_t>(raw.size())) continue;
      if (std::isnan(raw[static_cast<std::size_t>(j)])) continue;
      sum += raw[static_cast<std::size_t>(j)];
      ++cnt;
    }
    if (cnt > 0) smoothed[k] = sum / cnt;
  }

  out.pair_position = std::move(pos);
  out.signed_contrast = smoothed;
  out.contrast.resize(smoothed.size());
  for (std::size_t k = 0; k < smoothed.size(); ++k) {
    out.contrast[k] = std::abs(smoothed[k]);
  }

  // Contrast minima = zero crossings of the smoothed signed contrast.
  std::vector<double> crossings;
  double prev = nan;
  double prev_pos = 0.0;
  for (std::size_t k = 0; k < smoothed.size(); ++k) {
    const double cur = smoothed[k];
    if (std::isnan(cur)) continue;
    if (!std::isnan(prev) && prev * cur < 0.0) {
      const double frac = prev / (prev - cur);
      crossings.push_back(prev_pos +
                          frac * (out.pair_position[k] - prev_pos));
    }
    prev = cur;
    prev_pos = out.pair_position[k];
  }
  if (crossings.size() < 2) {
    out.period = nan;
  } else {
    std::vector<double> spacings;
    for (std::size_t k = 1; k < crossings.size(); ++k) {
      spacings.push_back(crossings[k] - crossings[k - 1]);
    }
    std::nth_element(spacings.begin(),
                     spacings.begin() + spacings.size() / 2, spacings.end());
    out.period = spacings[spacings.size() / 2];
  }
  return out;
}

double fit_envelope_decay(const Histogram& hist, double round_trip_time,
                          double background_per_bin) {
  if (!(round_trip_time > 0.0)) {
    throw ValidationError("round_trip_time must be strictly positive");
  }
  if (background_per_bin < 0.0) {
    throw ValidationError("background_per_bin must be nonnegative");
  }
  // Group counts by nearest round-trip index; skip the central peak (its
  // weight differs from the two-sided tail law).
  std::vector<std::uint64_t> per_index;
  std::vector<std::uint64_t> bins_per_index;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    const double t = std::abs(hist.bin_center(i));
    const auto d = static_cast<std::size_t>(std::llround(t / round_trip_time));
    if (d == 0) continue;
    if (per_index.size() <= d) {
      per_index.resize(d + 1, 0);
      bins_per_index.resize(d + 1, 0);
    }
    per_index[d] += hist.counts[i];
    ++bins_per_index[d];
  }
  // Weighted log-linear regression of ln(count - background) on
  // d * round_trip_time. Without the subtraction a flat accidental floor
  // biases the decay constant upward.
  double sw = 0, sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t d = 1; d < per_index.size(); ++d) {
    const double c = static_cast<double>(per_index[d]) -
                     background_per_bin *
                         static_cast<double>(bins_per_index[d]);
    if (c < 25.0) continue;
    const double x = static_cast<double>(d) * round_trip_time;
    const double y = std::log(c);
    const double w = c;
    sw += w;
    sx += w * x;
    sy += w * y;
    sxx += w * x * x;
    sxy += w * x * y;
  }
  const double det = sw * sxx - sx * sx;
  if (!(sw > 0.0) || std::abs(det) < 1e-30) {
    throw ValidationError("insufficient counts for envelope fit");
  }
  const double slope = (sw * sxy - sx * sy) / det;
  if (!(slope < 0.0)) {
    throw ValidationError("envelope fit did not find a decaying tail");
  }
  return -1.0 / slope;
}

double estimate_peak_spacing(const Histogram& hist) {
  const auto max_it = std::max_element(hist.counts.begin(), hist.counts.end());
  if (max_it == hist.counts.end() || *max_it == 0) {
    throw ValidationError("empty histogram");
  }
  const double threshold = static_cast<double>(*max_it) / 20.0;
  // Cluster above-threshold bins and take each cluster's centroid.
  std::vector<double> centers;
  double wsum = 0.0, twsum = 0.0;
  std::int64_t last = -100;
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    if (static_cast<double>(hist.counts[i]) < threshold) continue;
    if (static_cast<std::int64_t>(i) - last > 5 && wsum > 0.0) {
      centers.push_back(twsum / wsum);
      wsum = twsum = 0.0;
    }
    wsum += static_cast<double>(hist.counts[i]);
    twsum += static_cast<double>(hist.counts[i]) * hist.bin_center(i);
    last = static_cast<std::int64_t>(i);
  }
  if (wsum > 0.0) centers.push_back(twsum / wsum);
  if (centers.size() < 2) {
    throw ValidationError("fewer than two peaks found");
  }
  std::vector<double> spacings;
  for (std::size_t k = 1; k < centers.size(); ++k) {
    spacings.push_back(centers[k] - centers[k - 1]);
  }
  std::nth_element(spacings.begin(), spacings.begin() + spacings.size() / 2,
                   spacings.end());
  return spacings[spacings.size() / 2];
}

namespace {

double triangle_kernel(double x) { return std::max(0.0, 1.0 - std::abs(x)); }

struct ProfiledFit {
  double a = 0.0;  // offset (r_avg)
  double b = 0.0;  // triangle coefficient (-r_avg * v)
  double ssr = std::numeric_limits<double>::infinity();
};

// For fixed (center, width) the model is linear in (a, b); solve the 2x2
// normal equations directly.
ProfiledFit profile_linear(const std::vector<double>& x,
                           const std::vector<double>& y,
                           const std::vector<bool>* mask, double center,
                           double width) {
  double s1 = 0, sz = 0, szz = 0, sy = 0, szy = 0;
  std::size_t n = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double z = triangle_kernel(2.0 * (x[i] - center) / width);
    s1 += 1.0;
    sz += z;
    szz += z * z;
    sy += y[i];
    szy += z * y[i];
    ++n;
  }
  ProfiledFit fit;
  if (n < 2) return fit;
  const double det = s1 * szz - sz * sz;
  if (std::abs(det) < 1e-14 * std::max(1.0, s1 * szz)) {
    // Degenerate (flat kernel over the grid): offset-only model.
    fit.a = sy / s1;
    fit.b = 0.0;
  } else {
    fit.a = (szz * sy - sz * szy) / det;
    fit.b = (s1 * szy - sz * sy) / det;
  }
  double ssr = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    if (mask && !(*mask)[i]) continue;
    const double z = triangle_kernel(2.0 * (x[i] - center) / width);
    const double r = y[i] - fit.a - fit.b * z;
    ssr += r * r;
  }
  fit.ssr = ssr;
  return fit;
}

struct NmResult {
  std::array<double, 2> param{};
  double f = std::numeric_limits<double>::infinity();
  bool converged = false;
  int evaluations = 0;
};

// 2-D Nelder-Mead; the triangular kink makes gradient methods unreliable.
template <typename F>
NmResult nelder_mead(F objective, std::array<double, 2> start,
                     std::array<double, 2> step, int max_evals,
                     double rel_tol, double abs_tol) {
  using Point = std::array<double, 2>;
  struct Vertex {
    Point p;
    double f;
  };
  NmResult result;
  int evals = 0;
  auto eval = [&](const Point& p) {
    ++evals;
    return objective(p);
  };
  std::array<Vertex, 3> simplex;
  simplex[0] = {start, eval(start)};
  for (int k = 0; k < 2; ++k) {
    Point p = start;
    p[static_cast<std::size_t>(k)] += step[static_cast<std::size_t>(k)];
    simplex[static_cast<std::size_t>(k) + 1] = {p, eval(p)};
  }
  auto order = [&] {
    std::sort(simplex.begin(), simplex.end(),
              [](const Vertex& a, const Vertex& b) { return a.f < b.f; });
  };
  order();
  while (evals < max_evals) {
    const double fbest = simplex[0].f;
    const double fworst = simplex[2].f;
    if (fworst - fbest <= rel_tol * std::abs(fbest) + abs_tol) {
      result.converged = true;
      break;
    }
    Point centroid{};
    for (int k = 0; k < 2; ++k) {
      centroid[static_cast<std::size_t>(k)] =
          0.5 * (simplex[0].p[static_cast<std::size_t>(k)] +
                 simplex[1].p[static_cast<std::size_t>(k)]);
    }
    auto combine = [&](double coeff) {
      Point p;
      for (std::size_t k = 0; k < 2; ++k) {
        p[k] = centroid[k] + coeff * (simplex[2].p[k] - centroid[k]);
      }
      return p;
    };
    const Point reflected = combine(-1.0);
    const double fr = eval(reflected);
    if (fr < simplex[0].f) {
      const Point expanded = combine(-2.0);
      const double fe = eval(expanded);
      simplex[2] = fe < fr ? Vertex{expanded, fe} : Vertex{reflected, fr};
    } else if (fr < simplex[1].f) {
      simplex[2] = {reflected, fr};
    } else {
      const Point contracted = combine(fr < simplex[2].f ? -0.5 : 0.5);
      const double fc = eval(contracted);
      if (fc < std::min(fr, simplex[2].f)) {
        simplex[2] = {contracted, fc};
      } else {
        for (int k = 1; k < 3; ++k) {
          for (std::size_t d = 0; d < 2; ++d) {
            simplex[static_cast<std::size_t>(k)].p[d] =
                0.5 * (simplex[static_cast<std::size_t>(k)].p[d] +
                       simplex[0].p[d]);
          }
          simplex[static_cast<std::size_t>(k)].f =
              eval(simplex[static_cast<std::size_t>(k)].p);
        }
      }
    }
    order();
  }
  result.param = simplex[0].p;
  result.f = simplex[0].f;
  result.evaluations = evals;
  return result;
}

}  // namespace

TriangleFit fit_triangle(const std::vector<double>& path_difference,
                         const std::vector<double>& rate,
                         const std::vector<bool>* mask) {
  if (path_difference.size() != rate.size()) {
    throw ValidationError("grid and rate vectors must have equal length");
  }
  std::size_t active = 0;
  for (std::size_t i = 0; i < path_difference.size(); ++i) {
    if (!mask || (*mask)[i]) ++active;
  }
  if (active < 5) {
    throw ValidationError("triangle fit needs at least 5 grid points");
  }

  const auto [mn, mx] = std::minmax_element(path_difference.begin(),
                                            path_difference.end());
  const double span = std::max(*mx - *mn, 1e-12);

  auto objective = [&](const std::array<double, 2>& p) {
    const double center = p[0];
    const double width = std::abs(p[1]);
    if (width < 1e-6 * span) {
      return std::numeric_limits<double>::infinity();
    }
    return profile_linear(path_difference, rate, mask, center, width).ssr;
  };

  // Multistart over center: the grid minimum and its neighbourhood.
  std::size_t i_min = 0;
  for (std::size_t i = 0; i < rate.size(); ++i) {
    if (!mask || (*mask)[i]) {
      if (rate[i] < rate[i_min] || (mask && !(*mask)[i_min])) i_min = i;
    }
  }
  // Absolute SSR floor: a spread this far below the data scale is numerical
  // noise, not an unresolved optimum.
  double y_scale = 0.0;
  for (std::size_t i = 0; i < rate.size(); ++i) {
    if (!mask || (*mask)[i]) y_scale += rate[i] * rate[i];
  }
  const double abs_tol = 1e-20 * std::max(y_scale, 1.0);

  const double c0 = path_difference[i_min];
  const std::array<double, 4> centers{c0, c0 - 0.05 * span, c0 + 0.05 * span,
                                      0.5 * (*mn + *mx)};
  const std::array<double, 2> widths{0.25 * span, 0.5 * span};

  NmResult best;
  for (double c : centers) {
    for (double w : widths) {
      auto r = nelder_mead(objective, {c, w}, {0.05 * span, 0.1 * span},
                           10000, 1e-10, abs_tol);
      // Polish the winner with a tighter tolerance for 4+ significant
      // figures on noiseless data.
      if (r.f < best.f) best = r;
    }
  }
  auto polished = nelder_mead(objective, best.param,
                              {1e-4 * span, 1e-4 * span}, 10000, 1e-14,
                              abs_tol);
  if (polished.f <= best.f) {
    polished.converged = polished.converged || best.converged;
    best = polished;
  }

  const double center = best.param[0];
  const double width = std::abs(best.param[1]);
  const auto lin = profile_linear(path_difference, rate, mask, center, width);

  TriangleFit fit;
  fit.center = center;
  fit.width = width;
  fit.zeta = 4.0 * kSpeedOfLight / width;
  fit.r_avg = lin.a;
  fit.v = lin.a > 0.0 ? std::clamp(-lin.b / lin.a, 0.0, 1.0) : 0.0;
  const double c_max = lin.a;
  const double c_min = lin.a * (1.0 - fit.v);
  fit.visibility = c_max > 0.0 ? (c_max - c_min) / (c_max + c_min) : 0.0;
  fit.residual_norm = std::sqrt(lin.ssr);
  fit.converged = best.converged;
  fit.evaluations = best.evaluations;
  return fit;
}

double visibility(double c_max, double c_min) {
  if (c_min < 0.0 || c_max < c_min) {
    throw ValidationError("visibility requires c_max >= c_min >= 0");
  }
  if (!(c_max > 0.0)) {
    throw ValidationError("visibility undefined for c_max = 0");
  }
  return (c_max - c_min) / (c_max + c_min);
}

HomScanResult analyze_scan(const std::vector<ScanPoint>& points, double window,
                           double resolution, const std::vector<bool>* mask) {
  HomScanResult result;
  result.points = points;
  result.window = window;

  const double w_eff = effective_window(window, resolution);
  std::vector<double> x, raw, corrected;
  for (const auto& p : points) {
    if (!(p.live_time > 0.0)) {
      throw ValidationError("scan point live_time must be strictly positive");
    }
    x.push_back(p.path_difference);
    const double rate = static_cast<double>(p.coincidences) / p.live_time;
    const double ra = static_cast<double>(p.singles_a) / p.live_time;
    const double rb = static_cast<double>(p.singles_b) / p.live_time;
    raw.push_back(rate);
    corrected.push_back(rate - accidental_rate(ra, rb, w_eff));
  }
  result.fit_raw = fit_triangle(x, raw, mask);
  result.fit_corrected = fit_triangle(x, corrected, mask);
  result.visibility_raw = result.fit_raw.visibility;
  result.visibility_corrected = result.fit_corrected.visibility;

  // Poisson error propagation through V = (M - m)/(M + m) using the fitted
  // extremes converted back to counts with the mean per-point live time.
  double live = 0.0;
  for (const auto& p : points) live += p.live_time;
  live /= static_cast<double>(points.size());
  auto vis_sigma = [live](const TriangleFit& f) {
    const double big = std::max(f.r_avg * live, 1.0);
    const double small = std::max(f.r_avg * (1.0 - f.v) * live, 1.0);
    const double denom = (big + small) * (big + small);
    return 2.0 * std::sqrt(big * big * small + small * small * big) / denom;
  };
  result.visibility_raw_sigma = vis_sigma(result.fit_raw);
  result.visibility_corrected_sigma = vis_sigma(result.fit_corrected);
  return result;
}

}  // namespace pairsim
