#pragma once

#include <cstdint>
#include <vector>

namespace ppgbp::data {

/// One subject's synchronized PPG/ABP pair.
struct SubjectRecord {
  std::uint32_t subject_id = 0;
  float fs = 125.0f;
  std::vector<float> ppg;
  std::vector<float> abp;  // mmHg

  bool operator==(const SubjectRecord&) const = default;
};

/// Preprocessed 5 s PPG window with its labels.
struct WindowSample {
  std::uint32_t subject_id = 0;
  std::uint32_t window_index = 0;
  float sbp = 0.0f;  // mmHg
  float hr = 0.0f;   // bpm
  float snr = 0.0f;  // dB
  std::vector<float> ppg;

  bool operator==(const WindowSample&) const = default;
};

}  // namespace ppgbp::data
