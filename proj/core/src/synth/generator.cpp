#include "ppgbp/synth/generator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "ppgbp/common/error.hpp"
#include "ppgbp/common/random.hpp"
#include "ppgbp/dsp/signal.hpp"

namespace ppgbp::synth {

namespace {
constexpr double kFs = dsp::kDefaultFs;
constexpr double kPi = std::numbers::pi;
constexpr double kHop = dsp::kWindowSeconds - dsp::kOverlapSeconds;
}  // namespace

SubjectProfile make_profile(std::uint64_t corpus_seed, std::uint32_t subject_id, double noise_level) {
  if (!(noise_level >= 0.0)) throw ConfigError("synth: noise_level must be >= 0");
  Rng rng(mix_seed(corpus_seed, subject_id, 0x51));
  SubjectProfile p;
  p.subject_id = subject_id;
  p.hr_base = rng.uniform(60.0, 90.0);
  p.width_scale = rng.uniform(0.85, 1.15);
  p.dicrotic_gain = rng.uniform(0.85, 1.15);
  p.phase_offset = rng.uniform(-0.02, 0.02);
  const double magnitude = rng.uniform(4.0, 12.0);
  p.sbp_bias = rng.below(2) == 0 ? -magnitude : magnitude;
  p.trajectory_phase = rng.uniform();
  p.noise_level = noise_level;
  p.noise_seed = mix_seed(corpus_seed, subject_id, 0x4e);
  return p;
}

double warp_to_sbp(double u, const data::SegmentationScheme& scheme) {
  const std::size_t n = scheme.n_bins();
  u = std::clamp(u, 0.0, static_cast<double>(n));
  const std::size_t k = std::min(static_cast<std::size_t>(u), n - 1);
  const double frac = u - static_cast<double>(k);
  return scheme.edges[k] + frac * (scheme.edges[k + 1] - scheme.edges[k]);
}

double trajectory_sbp(double t, double duration_s, const SubjectProfile& profile,
                      const data::SegmentationScheme& scheme) {
  double x = t / duration_s + profile.trajectory_phase;
  x -= std::floor(x);
  const double tri = 1.0 - std::abs(2.0 * x - 1.0);
  const double n = static_cast<double>(scheme.n_bins());
  return warp_to_sbp(n * (0.002 + 0.996 * tri), scheme);
}

BeatShape beat_shape(double sbp, double period_s, const SubjectProfile& profile) {
  const double s = std::clamp((sbp + profile.sbp_bias - data::kSbpMin) / (data::kSbpMax - data::kSbpMin), -0.3, 1.3);
  BeatShape b;
  b.systolic_center = (0.15 + profile.phase_offset) * period_s;
  b.systolic_width = profile.width_scale * (0.060 - 0.020 * s) * period_s;
  b.dicrotic_delay = (0.30 - 0.10 * s) * period_s;
  b.dicrotic_width = profile.width_scale * 0.070 * period_s;
  b.dicrotic_ratio = profile.dicrotic_gain * (0.25 + 0.45 * s);
  return b;
}

data::SubjectRecord generate_subject(const SubjectProfile& profile, double duration_s,
                                     const data::SegmentationScheme& scheme) {
  if (!(duration_s > 0.0)) throw ConfigError("synth: duration must be positive");
  if (scheme.n_bins() < 1) throw ConfigError("synth: scheme has no bins");
  const auto n = static_cast<std::size_t>(std::llround(duration_s * kFs));

  data::SubjectRecord rec;
  rec.subject_id = profile.subject_id;
  rec.fs = static_cast<float>(kFs);
  std::vector<double> ppg(n, 0.0), abp(n, 0.0);

  const double hrv_phase = 2.0 * kPi * profile.trajectory_phase * 7.0;
  std::size_t onset = 0;
  while (onset < n) {
    const double t0 = static_cast<double>(onset) / kFs;
    const double hr = profile.hr_base * (1.0 + 0.04 * std::sin(2.0 * kPi * t0 / 20.0 + hrv_phase));
    const auto period = static_cast<std::size_t>(std::llround(60.0 / hr * kFs));
    const double period_s = static_cast<double>(period) / kFs;
    const std::size_t peak = std::max<std::size_t>(2, static_cast<std::size_t>(std::llround(0.15 * period)));
    const double sbp = trajectory_sbp(static_cast<double>(onset + peak) / kFs, duration_s, profile, scheme);
    const double dbp = 0.55 * sbp + 10.0;

    for (std::size_t tau = 0; tau < period && onset + tau < n; ++tau) {
      double shape;
      if (tau <= peak) {
        shape = 0.5 * (1.0 - std::cos(kPi * static_cast<double>(tau) / static_cast<double>(peak)));
      } else {
        const double q = static_cast<double>(tau - peak) / static_cast<double>(period - peak);
        shape = (1.0 - q) * (1.0 - q);
      }
      abp[onset + tau] = tau == peak ? sbp : dbp + (sbp - dbp) * shape;
    }

    const BeatShape b = beat_shape(sbp, period_s, profile);
    const auto lo = static_cast<std::ptrdiff_t>(onset) - static_cast<std::ptrdiff_t>(period / 2);
    const auto hi = std::min<std::ptrdiff_t>(static_cast<std::ptrdiff_t>(n),
                                             static_cast<std::ptrdiff_t>(onset + 2 * period));
    const double c1 = t0 + b.systolic_center;
    const double c2 = c1 + b.dicrotic_delay;
    for (std::ptrdiff_t i = std::max<std::ptrdiff_t>(0, lo); i < hi; ++i) {
      const double t = static_cast<double>(i) / kFs;
      const double z1 = (t - c1) / b.systolic_width;
      const double z2 = (t - c2) / b.dicrotic_width;
      ppg[static_cast<std::size_t>(i)] += std::exp(-0.5 * z1 * z1) + b.dicrotic_ratio * std::exp(-0.5 * z2 * z2);
    }
    onset += period;
  }

  if (profile.noise_level > 0.0 && n > 1) {
    double mean = 0.0;
    for (double v : ppg) mean += v;
    mean /= static_cast<double>(n);
    double var = 0.0;
    for (double v : ppg) var += (v - mean) * (v - mean);
    const double sigma = profile.noise_level * std::sqrt(var / static_cast<double>(n));
    Rng rng(profile.noise_seed);
    for (double& v : ppg) v += sigma * rng.normal();
  }

  rec.ppg.assign(ppg.begin(), ppg.end());
  rec.abp.assign(abp.begin(), abp.end());
  return rec;
}

data::SubjectRecord generate_subject(std::uint64_t corpus_seed, std::uint32_t subject_id, double duration_s,
                                     const data::SegmentationScheme& scheme, double noise_level) {
  return generate_subject(make_profile(corpus_seed, subject_id, noise_level), duration_s, scheme);
}

double corpus_duration(const data::SegmentationScheme& scheme, std::size_t windows_per_bin_target) {
  return static_cast<double>(scheme.n_bins() * windows_per_bin_target) * kHop * kOversample +
         dsp::kWindowSeconds;
}

std::vector<data::SubjectRecord> generate_corpus(std::uint64_t corpus_seed, std::size_t n_subjects,
                                                 const data::SegmentationScheme& scheme,
                                                 std::size_t windows_per_bin_target, double noise_level) {
  if (n_subjects < 5) throw ConfigError("synth: a corpus needs at least 5 subjects");
  if (windows_per_bin_target < 1) throw ConfigError("synth: windows_per_bin_target must be >= 1");
  const double duration = corpus_duration(scheme, windows_per_bin_target);
  std::vector<data::SubjectRecord> out;
  out.reserve(n_subjects);
  for (std::size_t i = 1; i <= n_subjects; ++i)
    out.push_back(generate_subject(corpus_seed, static_cast<std::uint32_t>(i), duration, scheme, noise_level));
  return out;
}

}  // namespace ppgbp::synth
