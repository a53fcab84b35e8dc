#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <vector>

namespace pairsim {

struct ValidationError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// All physical parameters of the source and its detection electronics.
// SI units throughout: lengths in m, times in s, frequencies in Hz.
// Unit conversion happens only at the I/O boundary (config files, reports).
struct SourceConfig {
  double crystal_length = 0.020;             // m
  double group_delay_mismatch = 3.3783783783783784e-10;  // |k_s'-k_i'|, s/m
  double effective_cavity_length = 0.610;    // m
  double finesse = 70.0;
  double escape_efficiency = 0.82;
  double fiber_coupling_efficiency = 0.58;
  double optics_transmission = 0.90;
  double detector_quantum_efficiency = 0.49;
  double pump_power = 200e-6;                // W
  double pair_rate_per_mw = 3.4e6;           // pairs/(s mW) inside the cavity
  double hv_spectral_overlap = 0.98;         // H/V mode overlap (dip floor)
  double chopper_frequency = 80.0;           // Hz
  double chopper_duty_cycle = 0.24;
  double coincidence_window = 256e-9;        // s, total accepted |dt| range
  double tagger_resolution = 1e-9;           // s
  double center_wavelength = 795e-9;         // m
  double hom_dip_center = 0.0;               // m, compensator path at dip center
  double hom_scan_window = 34e-9;            // s, coincidence window for HOM scans

  double pump_mw() const { return pump_power * 1e3; }

  // Throws ValidationError naming the offending field.
  void validate() const;
};

// Result of parsing a config file: the config plus provenance data.
struct LoadedConfig {
  SourceConfig config;
  std::uint64_t hash = 0;                 // FNV-1a of the raw file bytes
  std::vector<std::string> warnings;      // consistency warnings, unknown keys
};

// Plain-text key=value config with units encoded in key names
// (crystal_length_mm, pump_power_uw, ...). Throws ValidationError on parse
// or validation failure, naming the field or line.
LoadedConfig load_config_file(const std::string& path);

std::uint64_t fnv1a64(const std::string& bytes);

}  // namespace pairsim
