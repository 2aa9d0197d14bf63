#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

namespace ppgbp::dsp {

inline constexpr double kDefaultFs = 125.0;
inline constexpr double kWindowSeconds = 5.0;
inline constexpr double kOverlapSeconds = 2.5;

struct Window {
  std::vector<double> samples;
  double fs = kDefaultFs;
  std::size_t source_offset = 0;
};

/// Fixed-length windows at offsets k * hop with hop = floor(fs * (window_s - overlap_s)).
/// The trailing remainder is dropped; a signal shorter than one window gives an empty list.
std::vector<Window> segment_windows(std::span<const double> signal, double fs,
                                    double window_s = kWindowSeconds,
                                    double overlap_s = kOverlapSeconds);

/// Value returned by compute_snr when the window carries no signal power.
inline constexpr double kSnrFloor = -1.7976931348623157e308;

/// Periodogram SNR in dB: fundamental (strongest bin in [0.7, 2.5] Hz) and first
/// harmonic, each +-0.2 Hz, against the rest of the [0.1, 10] Hz band.
double compute_snr(const Window& window);

struct PeakOptions {
  double min_distance_s = 0.35;
  double min_relative_prominence = 0.25;
};

/// Systolic peak indices: strict local maxima, distance-filtered (higher peak wins,
/// earlier index on ties), then prominence-filtered against the window range.
std::vector<std::size_t> detect_peaks(const Window& abp, const PeakOptions& options = {});

/// Median with the mean of the central pair for even counts. Empty input -> nullopt.
std::optional<double> median(std::vector<double> values);

/// Median ABP amplitude over the peaks; nullopt when there are none.
std::optional<double> derive_sbp(const Window& abp, std::span<const std::size_t> peaks);

/// 60 / median inter-peak interval; nullopt with fewer than two peaks.
std::optional<double> derive_hr(std::span<const std::size_t> peaks, double fs);

/// Zero mean, unit population standard deviation. nullopt when the sample
/// standard deviation is <= 1e-8.
std::optional<Window> normalize(const Window& window);

}  // namespace ppgbp::dsp
