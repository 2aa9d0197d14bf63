#pragma once

#include <array>
#include <cstddef>
#include <vector>

#include "ppgbp/data/types.hpp"
#include "ppgbp/dsp/filter.hpp"
#include "ppgbp/dsp/quality.hpp"
#include "ppgbp/dsp/signal.hpp"

namespace ppgbp::data {

struct PreprocessConfig {
  dsp::FilterSpec filter{};  // fs is taken from each record
  double window_s = dsp::kWindowSeconds;
  double overlap_s = dsp::kOverlapSeconds;
  dsp::QualityThresholds thresholds{};
  dsp::PeakOptions peaks{};
};

/// Window counts per verdict reason, indexed by dsp::Reason.
struct QualityCounts {
  std::array<std::size_t, 5> by_reason{};
  std::size_t total() const;
  std::size_t accepted() const { return by_reason[0]; }
  QualityCounts& operator+=(const QualityCounts& other);
};

struct PreprocessResult {
  std::vector<WindowSample> samples;
  QualityCounts counts;
};

/// Filters the whole PPG record, windows PPG and ABP together, labels each window
/// from the ABP peaks and keeps windows that pass the quality gate. SNR is measured
/// on the unfiltered PPG window.
PreprocessResult preprocess_record(const SubjectRecord& record, const PreprocessConfig& config = {});

}  // namespace ppgbp::data
