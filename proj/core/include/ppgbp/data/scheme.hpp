#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace ppgbp::data {

inline constexpr double kSbpMin = 80.0;
inline constexpr double kSbpMax = 180.0;

/// Ordered SBP bin edges over [80, 180] mmHg. Bins are [e_i, e_{i+1}) except the
/// last, which is closed.
struct SegmentationScheme {
  std::string name;
  std::vector<double> edges;

  std::size_t n_bins() const { return edges.empty() ? 0 : edges.size() - 1; }
  bool operator==(const SegmentationScheme&) const = default;
};

/// hph, even4, dgk, even10. Throws ConfigError for anything else.
SegmentationScheme make_scheme(std::string_view name);

/// Validates a user-supplied edge list (strictly increasing, 80 first, 180 last, >= 2 bins).
SegmentationScheme make_custom_scheme(std::string name, std::vector<double> edges);

const std::vector<std::string>& known_scheme_names();

/// Bin index of an SBP value. Values below 80 clamp to bin 0, values at or
/// above 180 to the last bin. NaN maps to bin 0.
std::size_t assign_bin(double sbp, const SegmentationScheme& scheme);

}  // namespace ppgbp::data
