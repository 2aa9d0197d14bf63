#include "ppgbp/dsp/quality.hpp"

namespace ppgbp::dsp {

std::string_view to_string(Reason reason) {
  switch (reason) {
    case Reason::ok: return "ok";
    case Reason::low_snr: return "low_snr";
    case Reason::sbp_out_of_range: return "sbp_out_of_range";
    case Reason::hr_out_of_range: return "hr_out_of_range";
    case Reason::no_peaks: return "no_peaks";
  }
  return "unknown";
}

QualityVerdict quality_gate(double snr_db, double sbp, double hr, const QualityThresholds& t) {
  if (!(snr_db >= t.snr_min_db)) return QualityVerdict::reject(Reason::low_snr);
  if (!(sbp >= t.sbp_min && sbp <= t.sbp_max)) return QualityVerdict::reject(Reason::sbp_out_of_range);
  if (!(hr >= t.hr_min && hr <= t.hr_max)) return QualityVerdict::reject(Reason::hr_out_of_range);
  return {};
}

}  // namespace ppgbp::dsp
