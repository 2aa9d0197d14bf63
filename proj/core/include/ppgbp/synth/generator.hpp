#pragma once

#include <cstdint>
#include <vector>

#include "ppgbp/data/scheme.hpp"
#include "ppgbp/data/types.hpp"

namespace ppgbp::synth {

inline constexpr double kDefaultNoiseLevel = 0.1;
/// Expected windows per bin are oversampled by this factor.
inline constexpr double kOversample = 1.5;

/// Subject-specific generative parameters, fixed by (corpus seed, subject id).
struct SubjectProfile {
  std::uint32_t subject_id = 0;
  double hr_base = 75.0;        // bpm, [60, 90]
  double width_scale = 1.0;     // pulse width multiplier, [0.85, 1.15]
  double dicrotic_gain = 1.0;   // dicrotic amplitude multiplier, [0.85, 1.15]
  double phase_offset = 0.0;    // systolic timing offset as a fraction of the period, [-0.02, 0.02]
  double sbp_bias = 0.0;        // mmHg added to SBP before the shape mapping, +-[4, 12]
  double trajectory_phase = 0.0;  // start position in the SBP cycle, [0, 1)
  double noise_level = kDefaultNoiseLevel;  // white noise std relative to the clean PPG std
  std::uint64_t noise_seed = 0;
};

SubjectProfile make_profile(std::uint64_t corpus_seed, std::uint32_t subject_id,
                            double noise_level = kDefaultNoiseLevel);

/// Maps a position u in [0, n_bins] to SBP so that every bin takes equal length.
double warp_to_sbp(double u, const data::SegmentationScheme& scheme);

/// Target SBP at time t: a triangle wave between 80 and 180 mmHg in bin-warped units.
double trajectory_sbp(double t, double duration_s, const SubjectProfile& profile,
                      const data::SegmentationScheme& scheme);

/// Per-beat PPG shape parameters for a beat with systolic pressure `sbp` and period `period_s`.
struct BeatShape {
  double systolic_center = 0.0;  // s after beat onset
  double systolic_width = 0.0;
  double dicrotic_delay = 0.0;   // s after the systolic center
  double dicrotic_width = 0.0;
  double dicrotic_ratio = 0.0;   // dicrotic / systolic amplitude
};

BeatShape beat_shape(double sbp, double period_s, const SubjectProfile& profile);

/// Record of `duration_s` seconds at 125 Hz. ABP systolic peaks fall on samples
/// and equal the trajectory value; the PPG is noisy as set by the profile.
data::SubjectRecord generate_subject(const SubjectProfile& profile, double duration_s,
                                     const data::SegmentationScheme& scheme);
data::SubjectRecord generate_subject(std::uint64_t corpus_seed, std::uint32_t subject_id, double duration_s,
                                     const data::SegmentationScheme& scheme,
                                     double noise_level = kDefaultNoiseLevel);

/// Duration giving kOversample * target windows per bin (2.5 s hop) plus one window.
double corpus_duration(const data::SegmentationScheme& scheme, std::size_t windows_per_bin_target);

/// Subjects 1..n_subjects. Throws ConfigError for n_subjects < 5.
std::vector<data::SubjectRecord> generate_corpus(std::uint64_t corpus_seed, std::size_t n_subjects,
                                                 const data::SegmentationScheme& scheme,
                                                 std::size_t windows_per_bin_target,
                                                 double noise_level = kDefaultNoiseLevel);

}  // namespace ppgbp::synth
