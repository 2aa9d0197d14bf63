#include "ppgbp/data/preprocess.hpp"

#include <numeric>
#include <string>

#include "ppgbp/common/error.hpp"

namespace ppgbp::data {

std::size_t QualityCounts::total() const {
  return std::accumulate(by_reason.begin(), by_reason.end(), std::size_t{0});
}

QualityCounts& QualityCounts::operator+=(const QualityCounts& other) {
  for (std::size_t i = 0; i < by_reason.size(); ++i) by_reason[i] += other.by_reason[i];
  return *this;
}

PreprocessResult preprocess_record(const SubjectRecord& record, const PreprocessConfig& config) {
  if (record.ppg.size() != record.abp.size())
    throw StructuralError("record " + std::to_string(record.subject_id) +
                          ": PPG and ABP lengths differ");
  const double fs = record.fs;
  dsp::FilterSpec spec = config.filter;
  spec.fs = fs;
  const auto coeffs = dsp::design_bandpass(spec);

  const std::vector<double> ppg_raw(record.ppg.begin(), record.ppg.end());
  const std::vector<double> abp(record.abp.begin(), record.abp.end());
  PreprocessResult out;
  if (ppg_raw.size() <= 3 * static_cast<std::size_t>(coeffs.total_order())) return out;
  const auto ppg = dsp::apply_filter(ppg_raw, coeffs);

  const auto ppg_windows = dsp::segment_windows(ppg, fs, config.window_s, config.overlap_s);
  const auto raw_windows = dsp::segment_windows(ppg_raw, fs, config.window_s, config.overlap_s);
  const auto abp_windows = dsp::segment_windows(abp, fs, config.window_s, config.overlap_s);

  for (std::size_t k = 0; k < ppg_windows.size(); ++k) {
    const auto& pw = ppg_windows[k];
    const auto& aw = abp_windows[k];
    auto tally = [&](dsp::Reason r) { ++out.counts.by_reason[static_cast<std::size_t>(r)]; };

    const double snr = dsp::compute_snr(raw_windows[k]);
    if (!(snr >= config.thresholds.snr_min_db)) {
      tally(dsp::Reason::low_snr);
      continue;
    }
    const auto peaks = dsp::detect_peaks(aw, config.peaks);
    const auto sbp = dsp::derive_sbp(aw, peaks);
    const auto hr = dsp::derive_hr(peaks, fs);
    if (!sbp || !hr) {
      tally(dsp::Reason::no_peaks);
      continue;
    }
    const auto verdict = dsp::quality_gate(snr, *sbp, *hr, config.thresholds);
    if (!verdict.accepted) {
      tally(verdict.reason);
      continue;
    }
    const auto norm = dsp::normalize(pw);
    if (!norm) {
      tally(dsp::Reason::low_snr);
      continue;
    }
    tally(dsp::Reason::ok);

    WindowSample s;
    s.subject_id = record.subject_id;
    s.window_index = static_cast<std::uint32_t>(k);
    s.sbp = static_cast<float>(*sbp);
    s.hr = static_cast<float>(*hr);
    s.snr = static_cast<float>(snr);
    s.ppg.assign(norm->samples.begin(), norm->samples.end());
    out.samples.push_back(std::move(s));
  }
  return out;
}

}  // namespace ppgbp::data
