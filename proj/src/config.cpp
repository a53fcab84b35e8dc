#include "pairsim/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

#include "pairsim/physics.hpp"

namespace pairsim {

namespace {

void require_probability(double v, const char* field) {
  if (!(v >= 0.0 && v <= 1.0)) {
    throw ValidationError(std::string(field) + " must be in [0,1]");
  }
}

void require_positive(double v, const char* field) {
  if (!(v > 0.0) || !std::isfinite(v)) {
    throw ValidationError(std::string(field) + " must be strictly positive");
  }
}

}  // namespace

void SourceConfig::validate() const {
  require_positive(crystal_length, "crystal_length");
  require_positive(group_delay_mismatch, "group_delay_mismatch");
  require_positive(effective_cavity_length, "effective_cavity_length");
  require_positive(finesse, "finesse");
  require_probability(escape_efficiency, "escape_efficiency");
  require_probability(fiber_coupling_efficiency, "fiber_coupling_efficiency");
  require_probability(optics_transmission, "optics_transmission");
  require_probability(detector_quantum_efficiency,
                      "detector_quantum_efficiency");
  if (!(pump_power >= 0.0) || !std::isfinite(pump_power)) {
    throw ValidationError("pump_power must be nonnegative");
  }
  if (!(pair_rate_per_mw >= 0.0) || !std::isfinite(pair_rate_per_mw)) {
    throw ValidationError("pair_rate_per_mw must be nonnegative");
  }
  require_probability(hv_spectral_overlap, "hv_spectral_overlap");
  require_positive(chopper_frequency, "chopper_frequency");
  if (!(chopper_duty_cycle > 0.0 && chopper_duty_cycle <= 1.0)) {
    throw ValidationError("chopper_duty_cycle must be in (0,1]");
  }
  require_positive(coincidence_window, "coincidence_window");
  require_positive(tagger_resolution, "tagger_resolution");
  if (coincidence_window < tagger_resolution) {
    throw ValidationError(
        "coincidence_window must be >= tagger_resolution");
  }
  require_positive(center_wavelength, "center_wavelength");
  require_positive(hom_scan_window, "hom_scan_window");
  if (!std::isfinite(hom_dip_center)) {
    throw ValidationError("hom_dip_center must be finite");
  }
}

std::uint64_t fnv1a64(const std::string& bytes) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

LoadedConfig load_config_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) {
    throw ValidationError("cannot open config file: " + path);
  }
  std::ostringstream raw;
  raw << in.rdbuf();
  const std::string text = raw.str();

  std::map<std::string, double> values;
  std::istringstream lines(text);
  std::string line;
  int lineno = 0;
  while (std::getline(lines, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.erase(hash);
    auto first = line.find_first_not_of(" \t\r");
    if (first == std::string::npos) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ValidationError("config parse error at line " +
                            std::to_string(lineno) + ": expected key = value");
    }
    auto trim = [](std::string s) {
      auto b = s.find_first_not_of(" \t\r");
      auto e = s.find_last_not_of(" \t\r");
      return b == std::string::npos ? std::string() : s.substr(b, e - b + 1);
    };
    std::string key = trim(line.substr(0, eq));
    std::string val = trim(line.substr(eq + 1));
    if (key.empty() || val.empty()) {
      throw ValidationError("config parse error at line " +
                            std::to_string(lineno) + ": empty key or value");
    }
    char* end = nullptr;
    double d = std::strtod(val.c_str(), &end);
    if (end == val.c_str() || *end != '\0') {
      throw ValidationError("config parse error at line " +
                            std::to_string(lineno) + ": bad number for " + key);
    }
    values[key] = d;
  }

  LoadedConfig out;
  out.hash = fnv1a64(text);
  SourceConfig& c = out.config;

  std::set<std::string> seen;
  auto require = [&](const char* key) {
    auto it = values.find(key);
    if (it == values.end()) {
      throw ValidationError(std::string("missing required field: ") + key);
    }
    seen.insert(key);
    return it->second;
  };
  auto optional = [&](const char* key) -> std::optional<double> {
    auto it = values.find(key);
    if (it == values.end()) return std::nullopt;
    seen.insert(key);
    return it->second;
  };

  c.crystal_length = require("crystal_length_mm") * 1e-3;
  c.effective_cavity_length = require("effective_cavity_length_mm") * 1e-3;
  c.finesse = require("finesse");
  c.escape_efficiency = require("escape_efficiency");
  c.fiber_coupling_efficiency = require("fiber_coupling_efficiency");
  c.optics_transmission = require("optics_transmission");
  c.detector_quantum_efficiency = require("detector_quantum_efficiency");
  c.pump_power = require("pump_power_uw") * 1e-6;
  c.pair_rate_per_mw = require("pair_rate_per_s_mw");
  c.hv_spectral_overlap = require("hv_spectral_overlap");
  c.chopper_frequency = require("chopper_frequency_hz");
  c.chopper_duty_cycle = require("chopper_duty_cycle");
  c.coincidence_window = require("coincidence_window_ns") * 1e-9;
  c.tagger_resolution = require("tagger_resolution_ns") * 1e-9;
  c.center_wavelength = require("center_wavelength_nm") * 1e-9;

  // The crystal group-delay mismatch may be given directly (fs/mm) or via
  // the phase-matching bandwidth it implies.
  auto dk = optional("group_delay_mismatch_fs_per_mm");
  auto bw = optional("phase_matching_bandwidth_ghz");
  if (dk) {
    c.group_delay_mismatch = *dk * 1e-15 / 1e-3;
    if (bw) {
      double implied = 1.0 / (c.group_delay_mismatch * c.crystal_length);
      if (std::abs(implied - *bw * 1e9) > 1e-3 * implied) {
        out.warnings.push_back(
            "phase_matching_bandwidth_ghz inconsistent with "
            "group_delay_mismatch_fs_per_mm; using the mismatch value");
      }
    }
  } else if (bw) {
    c.group_delay_mismatch = 1.0 / (*bw * 1e9 * c.crystal_length);
  } else {
    throw ValidationError(
        "missing required field: phase_matching_bandwidth_ghz "
        "(or group_delay_mismatch_fs_per_mm)");
  }

  if (auto v = optional("hom_dip_center_mm")) c.hom_dip_center = *v * 1e-3;
  if (auto v = optional("hom_scan_window_ns")) c.hom_scan_window = *v * 1e-9;

  if (auto fsr = optional("fsr_mhz")) {
    double computed = kSpeedOfLight / c.effective_cavity_length;
    if (std::abs(*fsr * 1e6 - computed) > 0.01 * computed) {
      out.warnings.push_back(
          "fsr_mhz override inconsistent with c/effective_cavity_length (" +
          std::to_string(computed * 1e-6) + " MHz); derived value wins");
    }
  }

  for (const auto& [key, value] : values) {
    (void)value;
    if (!seen.count(key)) {
      out.warnings.push_back("unknown config key ignored: " + key);
    }
  }

  c.validate();
  return out;
}

}  // namespace pairsim
