#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "pairsim/analysis.hpp"
#include "pairsim/config.hpp"
#include "pairsim/detection.hpp"
#include "pairsim/physics.hpp"
#include "pairsim/pipeline.hpp"
#include "pairsim/report.hpp"

namespace {

constexpr int kExitOk = 0;
constexpr int kExitValidation = 2;
constexpr int kExitRuntime = 3;

struct CommonOptions {
  std::string config_path;
  std::string out_dir = ".";
  std::string format = "json";
  std::uint64_t seed = 1;
};

pairsim::LoadedConfig load_config(const CommonOptions& opts) {
  std::string path = opts.config_path;
  if (path.empty()) {
    if (const char* env = std::getenv("PAIRSIM_CONFIG")) path = env;
  }
  if (path.empty()) {
    throw pairsim::ValidationError(
        "no config given: use --config or set PAIRSIM_CONFIG");
  }
  auto loaded = pairsim::load_config_file(path);
  for (const auto& w : loaded.warnings) {
    std::cerr << "warning: " << w << '\n';
  }
  return loaded;
}

std::string out_path(const CommonOptions& opts, const std::string& name) {
  std::filesystem::create_directories(opts.out_dir);
  return (std::filesystem::path(opts.out_dir) / name).string();
}

void print_derived_table(const pairsim::DerivedQuantities& dq) {
  struct Row {
    const char* name;
    double computed;
    const char* unit;
    double reference;  // NaN when there is no published reference value
  };
  const double nan = std::nan("");
  const Row rows[] = {
      {"free spectral range", dq.fsr * 1e-6, "MHz", 490.0},
      {"cavity linewidth", dq.cavity_linewidth * 1e-6, "MHz", 7.0},
      {"round-trip time", dq.round_trip_time * 1e9, "ns", 2.03},
      {"ring-down time", dq.ring_down_time * 1e9, "ns", nan},
      {"phase-matching bandwidth", dq.phase_matching_bandwidth * 1e-9, "GHz",
       148.0},
      {"bandwidth (wavelength)", dq.bandwidth_nm * 1e9, "nm", nan},
      {"HOM base-to-base width", dq.hom_base_width * 1e3, "mm", 2.03},
      {"modes within FWHM", dq.mode_count_fwhm, "", nan},
      {"degenerate-mode fraction", dq.degenerate_mode_fraction, "", nan},
      {"conditional detection eff.", dq.conditional_detection_efficiency, "",
       0.21},
  };
  std::printf("%-28s %14s %-4s %12s\n", "quantity", "computed", "unit",
              "reference");
  for (const auto& r : rows) {
    if (std::isnan(r.reference)) {
      std::printf("%-28s %14.6g %-4s %12s\n", r.name, r.computed, r.unit, "-");
    } else {
      std::printf("%-28s %14.6g %-4s %12.6g\n", r.name, r.computed, r.unit,
                  r.reference);
    }
  }
}

std::vector<double> make_grid(double center, double range, int points) {
  std::vector<double> grid;
  grid.reserve(static_cast<std::size_t>(points));
  for (int i = 0; i < points; ++i) {
    const double frac =
        points > 1 ? static_cast<double>(i) / (points - 1) : 0.5;
    grid.push_back(center - 0.5 * range + frac * range);
  }
  return grid;
}

int cmd_derive(const CommonOptions& opts) {
  auto loaded = load_config(opts);
  const auto dq = pairsim::derive_quantities(loaded.config);
  print_derived_table(dq);
  if (opts.format == "json") {
    nlohmann::ordered_json j;
    j["config"] = pairsim::to_json(loaded.config);
    j["derived"] = pairsim::to_json(dq);
    j["provenance"] = pairsim::to_json(
        pairsim::Provenance{opts.seed, loaded.hash, pairsim::kVersion});
    pairsim::write_json_report(out_path(opts, "derived.json"), j);
  }
  return kExitOk;
}

int cmd_simulate(const CommonOptions& opts, const std::string& basis_name,
                 double duration, double delta_l_mm) {
  auto loaded = load_config(opts);
  const auto basis = basis_name == "diag" ? pairsim::Basis::kDiag
                                          : pairsim::Basis::kHV;
  auto sim = pairsim::simulate(loaded.config, basis, duration, opts.seed,
                               delta_l_mm * 1e-3);
  const auto summary = pairsim::summarize(sim.stream, loaded.config);

  sim.stream.save_binary(out_path(opts, "stream.ptag"));
  if (opts.format == "csv") {
    sim.stream.save_csv(out_path(opts, "stream.csv"));
  }
  nlohmann::ordered_json j;
  j["basis"] = basis_name;
  j["duration_s"] = duration;
  j["delta_l_mm"] = delta_l_mm;
  j["pairs_generated"] = sim.pairs_generated;
  j["rates"] = pairsim::to_json(summary);
  j["provenance"] = pairsim::to_json(
      pairsim::Provenance{opts.seed, loaded.hash, pairsim::kVersion});
  pairsim::write_json_report(out_path(opts, "summary.json"), j);

  std::printf("singles A %.0f /s, singles B %.0f /s\n", summary.singles_rate_a,
              summary.singles_rate_b);
  std::printf("coincidences %.0f /s raw, %.0f /s accidental, %.0f /s corrected\n",
              summary.raw_coincidence_rate, summary.accidental_rate_est,
              summary.corrected_coincidence_rate);
  return kExitOk;
}

int cmd_histogram(const CommonOptions& opts, const std::string& input,
                  double duration, double bin_width_ns, double range_ns) {
  auto loaded = load_config(opts);
  const auto& cfg = loaded.config;
  pairsim::TimeTagStream stream;
  if (!input.empty()) {
    stream = pairsim::TimeTagStream::load_binary(input);
    stream.live_time = cfg.chopper_duty_cycle * stream.duration;
  } else {
    stream = pairsim::simulate(cfg, pairsim::Basis::kHV, duration, opts.seed,
                               cfg.hom_dip_center)
                 .stream;
  }
  const auto coinc =
      pairsim::count_coincidences(stream, cfg.coincidence_window);
  const auto hist = pairsim::build_histogram(
      coinc.delta_tags, stream.resolution, bin_width_ns * 1e-9,
      range_ns * 1e-9);
  pairsim::write_histogram_csv(out_path(opts, "histogram.csv"), hist);

  nlohmann::ordered_json j;
  j["coincidences"] = coinc.count;
  j["bin_width_ns"] = bin_width_ns;
  j["range_ns"] = range_ns;
  const auto dq = pairsim::derive_quantities(cfg);
  try {
    j["envelope_decay_ns"] =
        pairsim::fit_envelope_decay(hist, dq.round_trip_time) * 1e9;
  } catch (const pairsim::ValidationError&) {
    j["envelope_decay_ns"] = nullptr;
  }
  const auto contrast = pairsim::comb_contrast(hist);
  j["comb_contrast_period_peaks"] =
      std::isnan(contrast.period) ? nlohmann::ordered_json(nullptr)
                                  : nlohmann::ordered_json(contrast.period);
  j["provenance"] = pairsim::to_json(
      pairsim::Provenance{opts.seed, loaded.hash, pairsim::kVersion});
  pairsim::write_json_report(out_path(opts, "histogram.json"), j);
  std::printf("%llu coincidences histogrammed\n",
              static_cast<unsigned long long>(coinc.count));
  return kExitOk;
}

int report_scan(const CommonOptions& opts, const pairsim::LoadedConfig& loaded,
                const pairsim::HomScanResult& scan) {
  pairsim::write_scan_csv(out_path(opts, "homscan.csv"), scan);
  nlohmann::ordered_json j = pairsim::to_json(scan);
  j["provenance"] = pairsim::to_json(
      pairsim::Provenance{opts.seed, loaded.hash, pairsim::kVersion});
  pairsim::write_json_report(out_path(opts, "homscan.json"), j);
  std::printf("fit width %.4f mm, center %.4f mm\n",
              scan.fit_corrected.width * 1e3, scan.fit_corrected.center * 1e3);
  std::printf("visibility %.4f raw, %.4f corrected\n", scan.visibility_raw,
              scan.visibility_corrected);
  if (!scan.fit_raw.converged || !scan.fit_corrected.converged) {
    std::cerr << "error: triangle fit did not converge\n";
    return kExitRuntime;
  }
  return kExitOk;
}

int cmd_homscan(const CommonOptions& opts, int points, double range_mm,
                double duration_per_point) {
  auto loaded = load_config(opts);
  const auto& cfg = loaded.config;
  const auto grid = make_grid(cfg.hom_dip_center, range_mm * 1e-3, points);
  const auto scan =
      pairsim::run_hom_scan(cfg, grid, duration_per_point, opts.seed);
  return report_scan(opts, loaded, scan);
}

int cmd_fit(const CommonOptions& opts, const std::string& input,
            double exclude_above_mm) {
  auto loaded = load_config(opts);
  const auto points = pairsim::read_scan_csv(input);
  std::vector<bool> mask(points.size(), true);
  if (std::isfinite(exclude_above_mm)) {
    for (std::size_t i = 0; i < points.size(); ++i) {
      if (points[i].path_difference * 1e3 > exclude_above_mm) mask[i] = false;
    }
  }
  const auto scan = pairsim::analyze_scan(
      points, loaded.config.hom_scan_window, loaded.config.tagger_resolution,
      std::isfinite(exclude_above_mm) ? &mask : nullptr);
  return report_scan(opts, loaded, scan);
}

int cmd_report(const CommonOptions& opts, double duration) {
  auto loaded = load_config(opts);
  const auto& cfg = loaded.config;
  const auto dq = pairsim::derive_quantities(cfg);
  auto sim = pairsim::simulate(cfg, pairsim::Basis::kHV, duration, opts.seed,
                               cfg.hom_dip_center);
  const auto summary = pairsim::summarize(sim.stream, cfg);
  const auto metrics = pairsim::spectral_metrics(
      summary.corrected_coincidence_rate, cfg, dq);

  nlohmann::ordered_json j;
  j["config"] = pairsim::to_json(cfg);
  j["derived"] = pairsim::to_json(dq);
  j["rates"] = pairsim::to_json(summary);
  j["spectral_metrics"] = pairsim::to_json(metrics);
  j["accidental_window_note"] =
      "accidental estimates use the effective window (2*floor(w/2res)+1)*res "
      "matching the integer-tag coincidence comparison";
  j["provenance"] = pairsim::to_json(
      pairsim::Provenance{opts.seed, loaded.hash, pairsim::kVersion});
  pairsim::write_json_report(out_path(opts, "report.json"), j);
  print_derived_table(dq);
  std::printf("spectral brightness %.3g pairs/(s mW nm)\n",
              metrics.pairs_per_s_mw_nm);
  std::printf("degenerate mode %.3g pairs/(s mW MHz)\n",
              metrics.degenerate_pairs_per_s_mw_mhz);
  std::printf("true pair rate %.3g pairs/(s mW)\n",
              metrics.true_pair_rate_per_s_mw);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Cavity-enhanced photon-pair source simulator and analyzer"};
  app.require_subcommand(1);

  CommonOptions opts;
  app.add_option("--config", opts.config_path,
                 "Config file (default: $PAIRSIM_CONFIG)");
  app.add_option("--seed", opts.seed, "Master random seed");
  app.add_option("--out-dir", opts.out_dir, "Output directory");
  app.add_option("--format", opts.format, "Output format")
      ->check(CLI::IsMember({"csv", "json"}));

  auto* derive = app.add_subcommand("derive", "Print derived quantities");
  derive->fallthrough();

  auto* simulate = app.add_subcommand("simulate", "Run one simulation");
  simulate->fallthrough();
  std::string basis = "hv";
  double duration = 1.0;
  double delta_l_mm = 0.0;
  simulate->add_option("--basis", basis, "Measurement basis")
      ->check(CLI::IsMember({"hv", "diag"}));
  simulate->add_option("--duration-s", duration, "Simulated duration");
  simulate->add_option("--delta-l-mm", delta_l_mm,
                       "Compensator path difference");

  auto* histogram =
      app.add_subcommand("histogram", "Arrival-time difference histogram");
  histogram->fallthrough();
  std::string hist_input;
  double hist_duration = 2.0;
  double bin_width_ns = 1.0;
  double range_ns = 128.0;
  histogram->add_option("--in", hist_input, "Existing .ptag stream");
  histogram->add_option("--duration-s", hist_duration,
                        "Simulated duration when no input stream is given");
  histogram->add_option("--bin-width-ns", bin_width_ns, "Histogram bin width");
  histogram->add_option("--range-ns", range_ns, "Histogram half range");

  auto* homscan = app.add_subcommand("homscan", "Hong-Ou-Mandel dip scan");
  homscan->fallthrough();
  int scan_points = 41;
  double scan_range_mm = 8.0;
  double scan_duration = 5.0;
  homscan->add_option("--points", scan_points, "Number of grid points");
  homscan->add_option("--range-mm", scan_range_mm, "Scan range");
  homscan->add_option("--duration-s", scan_duration, "Duration per point");

  auto* fit = app.add_subcommand("fit", "Fit a scan CSV");
  fit->fallthrough();
  std::string fit_input;
  double exclude_above_mm = std::nan("");
  fit->add_option("--in", fit_input, "Scan CSV")->required();
  fit->add_option("--exclude-above-mm", exclude_above_mm,
                  "Exclude points beyond this path difference");

  auto* report = app.add_subcommand("report", "Full derived + rate report");
  report->fallthrough();
  double report_duration = 5.0;
  report->add_option("--duration-s", report_duration, "Simulated duration");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitValidation;
  }

  try {
    if (derive->parsed()) return cmd_derive(opts);
    if (simulate->parsed())
      return cmd_simulate(opts, basis, duration, delta_l_mm);
    if (histogram->parsed())
      return cmd_histogram(opts, hist_input, hist_duration, bin_width_ns,
                           range_ns);
    if (homscan->parsed())
      return cmd_homscan(opts, scan_points, scan_range_mm, scan_duration);
    if (fit->parsed()) return cmd_fit(opts, fit_input, exclude_above_mm);
    if (report->parsed()) return cmd_report(opts, report_duration);
  } catch (const pairsim::ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitValidation;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitRuntime;
  }
  return kExitOk;
}
