#pragma once

#include "pairsim/config.hpp"

namespace pairsim {

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s

// Closed-form quantities derived from a SourceConfig.
struct DerivedQuantities {
  double fsr;                        // Hz
  double cavity_linewidth;           // Hz, FWHM
  double round_trip_time;            // s
  double ring_down_time;             // s, 1/(2 pi linewidth)
  double phase_matching_bandwidth;   // Hz, FWHM
  double bandwidth_nm;               // m, same bandwidth in wavelength
  double zeta;                       // 1/s, 4/(L |k_s'-k_i'|)
  double hom_base_width;             // m, 4c/zeta = c L |k_s'-k_i'|
  double mode_count_fwhm;            // modes within the phase-matching FWHM
  double degenerate_mode_fraction;   // 1/mode_count_fwhm
  double conditional_detection_efficiency;
};

DerivedQuantities derive_quantities(const SourceConfig& config);

// FWHM phase-matching bandwidth 1/(dk L), Hz.
double phase_matching_bandwidth(double crystal_length, double group_delay_mismatch);

// dlambda = lambda0^2 dnu / c.
double bandwidth_to_wavelength(double dnu, double lambda0);

// Product of detector, fiber, escape and optics efficiencies.
double conditional_efficiency(const SourceConfig& config);

struct SpectralMetrics {
  double pairs_per_s_mw;             // corrected rate / pump power
  double pairs_per_s_mw_nm;          // spectral brightness
  double degenerate_pairs_per_s_mw_mhz;
  double true_pair_rate_per_s_mw;    // corrected for conditional efficiency^2
};

// corrected_pair_rate: accidental-corrected coincidence rate in pairs/s.
SpectralMetrics spectral_metrics(double corrected_pair_rate,
                                 const SourceConfig& config,
                                 const DerivedQuantities& dq);

}  // namespace pairsim
