#pragma once

#include <string_view>

namespace ppgbp::dsp {

enum class Reason { ok, low_snr, sbp_out_of_range, hr_out_of_range, no_peaks };

std::string_view to_string(Reason reason);

struct QualityVerdict {
  bool accepted = true;
  Reason reason = Reason::ok;

  static QualityVerdict reject(Reason r) { return {false, r}; }
};

struct QualityThresholds {
  double snr_min_db = -7.0;
  double sbp_min = 80.0;
  double sbp_max = 180.0;
  double hr_min = 50.0;
  double hr_max = 140.0;
};

/// First failing check in the order snr -> sbp -> hr decides the reason.
QualityVerdict quality_gate(double snr_db, double sbp, double hr,
                            const QualityThresholds& thresholds = {});

}  // namespace ppgbp::dsp
