#include "pairsim/physics.hpp"

#include <cmath>
#include <numbers>

namespace pairsim {

double phase_matching_bandwidth(double crystal_length,
                                double group_delay_mismatch) {
  if (!(crystal_length > 0.0)) {
    throw ValidationError("crystal_length must be strictly positive");
  }
  if (!(group_delay_mismatch > 0.0)) {
    throw ValidationError("group_delay_mismatch must be strictly positive");
  }
  return 1.0 / (group_delay_mismatch * crystal_length);
}

double bandwidth_to_wavelength(double dnu, double lambda0) {
  if (!(dnu >= 0.0)) {
    throw ValidationError("bandwidth must be nonnegative");
  }
  if (!(lambda0 > 0.0)) {
    throw ValidationError("center wavelength must be strictly positive");
  }
  return lambda0 * lambda0 * dnu / kSpeedOfLight;
}

double conditional_efficiency(const SourceConfig& config) {
  config.validate();
  return config.detector_quantum_efficiency *
         config.fiber_coupling_efficiency * config.escape_efficiency *
         config.optics_transmission;
}

DerivedQuantities derive_quantities(const SourceConfig& config) {
  config.validate();
  DerivedQuantities dq{};
  dq.fsr = kSpeedOfLight / config.effective_cavity_length;
  dq.round_trip_time = 1.0 / dq.fsr;
  dq.cavity_linewidth = dq.fsr / config.finesse;
  dq.ring_down_time = 1.0 / (2.0 * std::numbers::pi * dq.cavity_linewidth);
  dq.phase_matching_bandwidth =
      phase_matching_bandwidth(config.crystal_length,
                               config.group_delay_mismatch);
  dq.bandwidth_nm = bandwidth_to_wavelength(dq.phase_matching_bandwidth,
                                            config.center_wavelength);
  dq.zeta = 4.0 / (config.crystal_length * config.group_delay_mismatch);
  dq.hom_base_width =
      kSpeedOfLight * config.crystal_length * config.group_delay_mismatch;
  dq.mode_count_fwhm = dq.phase_matching_bandwidth / dq.fsr;
  dq.degenerate_mode_fraction = 1.0 / dq.mode_count_fwhm;
  dq.conditional_detection_efficiency = conditional_efficiency(config);
  return dq;
}

SpectralMetrics spectral_metrics(double corrected_pair_rate,
                                 const SourceConfig& config,
                                 const DerivedQuantities& dq) {
  if (!(config.pump_power > 0.0)) {
    throw ValidationError("pump_power must be strictly positive");
  }
  if (!(corrected_pair_rate >= 0.0)) {
    throw ValidationError("corrected_pair_rate must be nonnegative");
  }
  SpectralMetrics m{};
  m.pairs_per_s_mw = corrected_pair_rate / config.pump_mw();
  m.pairs_per_s_mw_nm = m.pairs_per_s_mw / (dq.bandwidth_nm * 1e9);
  m.degenerate_pairs_per_s_mw_mhz = m.pairs_per_s_mw *
                                    dq.degenerate_mode_fraction /
                                    (dq.cavity_linewidth * 1e-6);
  double eta = dq.conditional_detection_efficiency;
  m.true_pair_rate_per_s_mw = m.pairs_per_s_mw / (eta * eta);
  return m;
}

}  // namespace pairsim
