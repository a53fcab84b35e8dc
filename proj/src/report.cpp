#include "pairsim/report.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <sstream>

namespace pairsim {

namespace {

std::string timestamp_utc() {
  const auto now = std::chrono::system_clock::now();
  const std::time_t t = std::chrono::system_clock::to_time_t(now);
  std::tm tm{};
  gmtime_r(&t, &tm);
  char buf[32];
  std::strftime(buf, sizeof(buf), "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

}  // namespace

nlohmann::ordered_json to_json(const SourceConfig& c) {
  return nlohmann::ordered_json{
      {"crystal_length_mm", c.crystal_length * 1e3},
      {"group_delay_mismatch_fs_per_mm", c.group_delay_mismatch * 1e15 * 1e-3},
      {"effective_cavity_length_mm", c.effective_cavity_length * 1e3},
      {"finesse", c.finesse},
      {"escape_efficiency", c.escape_efficiency},
      {"fiber_coupling_efficiency", c.fiber_coupling_efficiency},
      {"optics_transmission", c.optics_transmission},
      {"detector_quantum_efficiency", c.detector_quantum_efficiency},
      {"pump_power_uw", c.pump_power * 1e6},
      {"pair_rate_per_s_mw", c.pair_rate_per_mw},
      {"hv_spectral_overlap", c.hv_spectral_overlap},
      {"chopper_frequency_hz", c.chopper_frequency},
      {"chopper_duty_cycle", c.chopper_duty_cycle},
      {"coincidence_window_ns", c.coincidence_window * 1e9},
      {"tagger_resolution_ns", c.tagger_resolution * 1e9},
      {"center_wavelength_nm", c.center_wavelength * 1e9},
      {"hom_dip_center_mm", c.hom_dip_center * 1e3},
      {"hom_scan_window_ns", c.hom_scan_window * 1e9},
  };
}

nlohmann::ordered_json to_json(const DerivedQuantities& dq) {
  return nlohmann::ordered_json{
      {"fsr_mhz", dq.fsr * 1e-6},
      {"cavity_linewidth_mhz", dq.cavity_linewidth * 1e-6},
      {"round_trip_time_ns", dq.round_trip_time * 1e9},
      {"ring_down_time_ns", dq.ring_down_time * 1e9},
      {"phase_matching_bandwidth_ghz", dq.phase_matching_bandwidth * 1e-9},
      {"bandwidth_nm", dq.bandwidth_nm * 1e9},
      {"zeta_per_s", dq.zeta},
      {"hom_base_width_mm", dq.hom_base_width * 1e3},
      {"mode_count_fwhm", dq.mode_count_fwhm},
      {"degenerate_mode_fraction", dq.degenerate_mode_fraction},
      {"conditional_detection_efficiency",
       dq.conditional_detection_efficiency},
  };
}

nlohmann::ordered_json to_json(const SpectralMetrics& m) {
  return nlohmann::ordered_json{
      {"pairs_per_s_mw", m.pairs_per_s_mw},
      {"pairs_per_s_mw_nm", m.pairs_per_s_mw_nm},
      {"degenerate_pairs_per_s_mw_mhz", m.degenerate_pairs_per_s_mw_mhz},
      {"true_pair_rate_per_s_mw", m.true_pair_rate_per_s_mw},
  };
}

nlohmann::ordered_json to_json(const RateSummary& s) {
  return nlohmann::ordered_json{
      {"live_time_s", s.live_time},
      {"singles_rate_a_hz", s.singles_rate_a},
      {"singles_rate_b_hz", s.singles_rate_b},
      {"coincidences", s.coincidences},
      {"raw_coincidence_rate_hz", s.raw_coincidence_rate},
      {"accidental_rate_hz", s.accidental_rate_est},
      {"corrected_coincidence_rate_hz", s.corrected_coincidence_rate},
  };
}

nlohmann::ordered_json to_json(const TriangleFit& f) {
  return nlohmann::ordered_json{
      {"r_avg_hz", f.r_avg},
      {"zeta_per_s", f.zeta},
      {"width_mm", f.width * 1e3},
      {"center_mm", f.center * 1e3},
      {"v_floor", f.v},
      {"visibility", f.visibility},
      {"residual_norm", f.residual_norm},
      {"converged", f.converged},
      {"evaluations", f.evaluations},
  };
}

nlohmann::ordered_json to_json(const HomScanResult& r) {
  nlohmann::ordered_json points = nlohmann::ordered_json::array();
  for (const auto& p : r.points) {
    points.push_back(nlohmann::ordered_json{
        {"path_difference_mm", p.path_difference * 1e3},
        {"coincidences", p.coincidences},
        {"singles_a", p.singles_a},
        {"singles_b", p.singles_b},
        {"live_time_s", p.live_time},
    });
  }
  return nlohmann::ordered_json{
      {"window_ns", r.window * 1e9},
      {"fit_raw", to_json(r.fit_raw)},
      {"fit_corrected", to_json(r.fit_corrected)},
      {"visibility_raw", r.visibility_raw},
      {"visibility_corrected", r.visibility_corrected},
      {"visibility_raw_sigma", r.visibility_raw_sigma},
      {"visibility_corrected_sigma", r.visibility_corrected_sigma},
      {"points", points},
  };
}

nlohmann::ordered_json to_json(const Provenance& p) {
  char hash[32];
  std::snprintf(hash, sizeof(hash), "%016llx",
                static_cast<unsigned long long>(p.config_hash));
  return nlohmann::ordered_json{
      {"seed", p.seed},
      {"config_hash", hash},
      {"version", p.version},
  };
}

void write_json_report(const std::string& path, nlohmann::ordered_json j) {
  nlohmann::ordered_json out;
  out["generated_at"] = timestamp_utc();
  for (auto& [key, value] : j.items()) {
    out[key] = std::move(value);
  }
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open for writing: " + path);
  file << out.dump(2) << '\n';
  if (!file) throw std::runtime_error("write failure: " + path);
}

void write_histogram_csv(const std::string& path, const Histogram& hist) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open for writing: " + path);
  file << "# generated " << timestamp_utc() << '\n';
  file << "bin_center_ns,count\n";
  char line[64];
  for (std::size_t i = 0; i < hist.counts.size(); ++i) {
    std::snprintf(line, sizeof(line), "%.6f,%llu\n", hist.bin_center(i) * 1e9,
                  static_cast<unsigned long long>(hist.counts[i]));
    file << line;
  }
  if (!file) throw std::runtime_error("write failure: " + path);
}

void write_scan_csv(const std::string& path, const HomScanResult& scan) {
  std::ofstream file(path);
  if (!file) throw std::runtime_error("cannot open for writing: " + path);
  file << "# generated " << timestamp_utc() << '\n';
  file << "path_difference_mm,coincidences,singles_a,singles_b,live_time_s\n";
  char line[160];
  for (const auto& p : scan.points) {
    std::snprintf(line, sizeof(line), "%.6f,%llu,%llu,%llu,%.9f\n",
                  p.path_difference * 1e3,
                  static_cast<unsigned long long>(p.coincidences),
                  static_cast<unsigned long long>(p.singles_a),
                  static_cast<unsigned long long>(p.singles_b), p.live_time);
    file << line;
  }
  if (!file) throw std::runtime_error("write failure: " + path);
}

std::vector<ScanPoint> read_scan_csv(const std::string& path) {
  std::ifstream file(path);
  if (!file) throw ValidationError("cannot open scan CSV: " + path);
  std::vector<ScanPoint> points;
  std::string line;
  int row = 0;
  bool header_seen = false;
  while (std::getline(file, line)) {
    ++row;
    if (line.empty() || line[0] == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (line.rfind("path_difference_mm", 0) == 0) continue;
      // fall through: headerless files are accepted
    }
    std::istringstream ss(line);
    std::string field;
    std::vector<std::string> fields;
    while (std::getline(ss, field, ',')) fields.push_back(field);
    if (fields.size() < 5) {
      throw ValidationError("scan CSV row " + std::to_string(row) +
                            ": expected 5 columns");
    }
    try {
      ScanPoint p;
      p.path_difference = std::stod(fields[0]) * 1e-3;
      p.coincidences = static_cast<std::uint64_t>(std::stoull(fields[1]));
      p.singles_a = static_cast<std::uint64_t>(std::stoull(fields[2]));
      p.singles_b = static_cast<std::uint64_t>(std::stoull(fields[3]));
      p.live_time = std::stod(fields[4]);
      points.push_back(p);
    } catch (const std::exception&) {
      throw ValidationError("scan CSV row " + std::to_string(row) +
                            ": malformed value");
    }
  }
  if (points.empty()) {
    throw ValidationError("scan CSV contains no data rows: " + path);
  }
  return points;
}

}  // namespace pairsim
