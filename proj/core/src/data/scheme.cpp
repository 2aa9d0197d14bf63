#include "ppgbp/data/scheme.hpp"

#include <algorithm>

#include "ppgbp/common/error.hpp"

namespace ppgbp::data {

const std::vector<std::string>& known_scheme_names() {
  static const std::vector<std::string> names{"hph", "even4", "dgk", "even10"};
  return names;
}

SegmentationScheme make_scheme(std::string_view name) {
  if (name == "hph") return {"hph", {80, 100, 140, 180}};
  if (name == "even4") return {"even4", {80, 105, 130, 155, 180}};
  if (name == "dgk") return {"dgk", {80, 100, 120, 130, 140, 160, 180}};
  if (name == "even10") return {"even10", {80, 90, 100, 110, 120, 130, 140, 150, 160, 170, 180}};
  throw ConfigError("unknown segmentation scheme '" + std::string(name) +
                    "' (expected hph, even4, dgk or even10)");
}

SegmentationScheme make_custom_scheme(std::string name, std::vector<double> edges) {
  if (edges.size() < 3) throw ConfigError("scheme '" + name + "' needs at least 2 bins");
  if (edges.front() != kSbpMin || edges.back() != kSbpMax)
    throw ConfigError("scheme '" + name + "' must start at 80 and end at 180 mmHg");
  if (std::adjacent_find(edges.begin(), edges.end(), std::greater_equal<>()) != edges.end())
    throw ConfigError("scheme '" + name + "' edges must be strictly increasing");
  return {std::move(name), std::move(edges)};
}

std::size_t assign_bin(double sbp, const SegmentationScheme& scheme) {
  const std::size_t bins = scheme.n_bins();
  if (!(sbp >= scheme.edges.front())) return 0;
  // first edge strictly greater than sbp closes the bin
  const auto it = std::upper_bound(scheme.edges.begin(), scheme.edges.end(), sbp);
  const auto idx = static_cast<std::size_t>(it - scheme.edges.begin());
  return std::min(idx - 1, bins - 1);
}

}  // namespace ppgbp::data
