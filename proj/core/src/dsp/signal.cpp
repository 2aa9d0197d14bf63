#include "ppgbp/dsp/signal.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <numeric>
#include <string>

#include "ppgbp/common/error.hpp"

namespace ppgbp::dsp {

std::vector<Window> segment_windows(std::span<const double> signal, double fs, double window_s,
                                    double overlap_s) {
  if (!(fs > 0.0)) throw ConfigError("windowing: sampling rate must be positive");
  if (!(window_s > overlap_s) || overlap_s < 0.0)
    throw ConfigError("windowing: require window > overlap >= 0");
  const auto n = static_cast<std::size_t>(std::llround(fs * window_s));
  const auto hop = static_cast<std::size_t>(std::floor(fs * (window_s - overlap_s)));
  if (n == 0 || hop == 0) throw ConfigError("windowing: window or hop rounds to zero samples");

  std::vector<Window> out;
  if (signal.size() < n) return out;
  const std::size_t count = (signal.size() - n) / hop + 1;
  out.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    const std::size_t off = k * hop;
    out.push_back({std::vector<double>(signal.begin() + off, signal.begin() + off + n), fs, off});
  }
  return out;
}

double compute_snr(const Window& window) {
  const auto& x = window.samples;
  const std::size_t n = x.size();
  if (n < 128) throw RejectionError("snr: window needs >= 128 samples, got " + std::to_string(n));
  for (double v : x)
    if (!std::isfinite(v)) throw RejectionError("snr: non-finite sample");

  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  const double df = window.fs / static_cast<double>(n);

  // one-sided periodogram restricted to the analysis band
  constexpr double band_lo = 0.1, band_hi = 10.0, half_width = 0.2, tol = 1e-9;
  std::vector<double> cos_table(n), sin_table(n);
  for (std::size_t m = 0; m < n; ++m) {
    const double ph = 2.0 * std::numbers::pi * static_cast<double>(m) / static_cast<double>(n);
    cos_table[m] = std::cos(ph);
    sin_table[m] = std::sin(ph);
  }
  std::vector<double> freq, power;
  for (std::size_t k = 1; k <= n / 2; ++k) {
    const double f = df * static_cast<double>(k);
    if (f < band_lo - tol) continue;
    if (f > band_hi + tol) break;
    double re = 0.0, im = 0.0;
    std::size_t m = 0;
    for (std::size_t t = 0; t < n; ++t) {
      const double v = x[t] - mean;
      re += v * cos_table[m];
      im -= v * sin_table[m];
      m += k;
      if (m >= n) m -= n;
    }
    freq.push_back(f);
    power.push_back(re * re + im * im);
  }

  double f0 = -1.0, best = -1.0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    if (freq[i] >= 0.7 - tol && freq[i] <= 2.5 + tol && power[i] > best) {
      best = power[i];
      f0 = freq[i];
    }
  }
  if (f0 < 0.0) return kSnrFloor;

  double p_sig = 0.0, p_noise = 0.0;
  for (std::size_t i = 0; i < freq.size(); ++i) {
    const bool in_signal = std::abs(freq[i] - f0) <= half_width + tol ||
                           std::abs(freq[i] - 2.0 * f0) <= half_width + tol;
    (in_signal ? p_sig : p_noise) += power[i];
  }
  // relative floor: anything below rounding noise of the total counts as zero
  const double total = p_sig + p_noise;
  if (!(total > 0.0) || p_sig <= total * 1e-24) return kSnrFloor;
  if (p_noise <= total * 1e-24) return std::numeric_limits<double>::max();
  return 10.0 * std::log10(p_sig / p_noise);
}

std::vector<std::size_t> detect_peaks(const Window& abp, const PeakOptions& options) {
  const auto& x = abp.samples;
  std::vector<std::size_t> cand;
  for (std::size_t i = 1; i + 1 < x.size(); ++i)
    if (x[i] > x[i - 1] && x[i] > x[i + 1]) cand.push_back(i);
  if (cand.empty()) return cand;

  const auto min_dist = static_cast<std::size_t>(std::floor(options.min_distance_s * abp.fs));
  if (min_dist > 1) {
    std::vector<std::size_t> order(cand.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return x[cand[a]] > x[cand[b]]; });
    std::vector<bool> keep(cand.size(), true);
    for (std::size_t oi : order) {
      if (!keep[oi]) continue;
      for (std::size_t j = oi; j-- > 0 && cand[oi] - cand[j] < min_dist;) keep[j] = false;
      for (std::size_t j = oi + 1; j < cand.size() && cand[j] - cand[oi] < min_dist; ++j)
        keep[j] = false;
    }
    std::vector<std::size_t> kept;
    for (std::size_t i = 0; i < cand.size(); ++i)
      if (keep[i]) kept.push_back(cand[i]);
    cand.swap(kept);
  }

  const auto [lo, hi] = std::minmax_element(x.begin(), x.end());
  const double min_prom = options.min_relative_prominence * (*hi - *lo);
  std::vector<std::size_t> out;
  for (std::size_t p : cand) {
    double left_min = x[p];
    for (std::size_t i = p; i-- > 0;) {
      if (x[i] > x[p]) break;
      left_min = std::min(left_min, x[i]);
    }
    double right_min = x[p];
    for (std::size_t i = p + 1; i < x.size(); ++i) {
      if (x[i] > x[p]) break;
      right_min = std::min(right_min, x[i]);
    }
    const double prominence = x[p] - std::max(left_min, right_min);
    if (prominence >= min_prom && prominence > 0.0) out.push_back(p);
  }
  return out;
}

std::optional<double> median(std::vector<double> values) {
  if (values.empty()) return std::nullopt;
  std::sort(values.begin(), values.end());
  const std::size_t m = values.size() / 2;
  if (values.size() % 2 == 1) return values[m];
  return 0.5 * (values[m - 1] + values[m]);
}

std::optional<double> derive_sbp(const Window& abp, std::span<const std::size_t> peaks) {
  std::vector<double> amps;
  amps.reserve(peaks.size());
  for (std::size_t p : peaks) amps.push_back(abp.samples.at(p));
  return median(std::move(amps));
}

std::optional<double> derive_hr(std::span<const std::size_t> peaks, double fs) {
  if (peaks.size() < 2) return std::nullopt;
  std::vector<double> intervals;
  for (std::size_t i = 1; i < peaks.size(); ++i)
    intervals.push_back(static_cast<double>(peaks[i]) - static_cast<double>(peaks[i - 1]));
  const double med = *median(std::move(intervals));
  if (!(med > 0.0)) return std::nullopt;
  return 60.0 * fs / med;
}

std::optional<Window> normalize(const Window& window) {
  const auto& x = window.samples;
  const std::size_t n = x.size();
  if (n < 2) return std::nullopt;
  const double mean = std::accumulate(x.begin(), x.end(), 0.0) / static_cast<double>(n);
  double ss = 0.0;
  for (double v : x) ss += (v - mean) * (v - mean);
  const double sample_std = std::sqrt(ss / static_cast<double>(n - 1));
  if (!(sample_std > 1e-8)) return std::nullopt;
  const double pop_std = std::sqrt(ss / static_cast<double>(n));

  Window out{std::vector<double>(n), window.fs, window.source_offset};
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = (x[i] - mean) / pop_std;
  return out;
}

}  // namespace ppgbp::dsp
