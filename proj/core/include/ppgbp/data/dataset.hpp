#pragma once

#include <array>
#include <cstdint>
#include <filesystem>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "ppgbp/data/scheme.hpp"
#include "ppgbp/data/types.hpp"

namespace ppgbp::data {

enum class Split { train, val, test };
std::string to_string(Split split);
Split split_from_string(const std::string& name);

/// Valid-window counts for one subject under a scheme.
struct SubjectStats {
  std::uint32_t subject_id = 0;
  std::size_t total = 0;
  std::vector<std::size_t> per_bin;
};

/// Per-subject statistics in ascending subject_id order.
std::vector<SubjectStats> compute_stats(std::span<const WindowSample> samples,
                                        const SegmentationScheme& scheme);

/// Subjects with >= min_windows valid windows and >= quota windows in every bin.
std::vector<std::uint32_t> eligible_subjects(std::span<const SubjectStats> stats,
                                             const SegmentationScheme& scheme,
                                             std::size_t min_windows, std::size_t quota);

/// Draws exactly `quota` windows per (subject, bin) without replacement. Output is
/// ordered by subject, bin, window_index. Throws std::logic_error if a group is short.
std::vector<WindowSample> balance(std::span<const WindowSample> samples,
                                  std::span<const std::uint32_t> subjects,
                                  const SegmentationScheme& scheme, std::size_t quota,
                                  std::uint64_t seed);

struct SubjectSplit {
  std::vector<std::uint32_t> train;
  std::vector<std::uint32_t> val;
  std::vector<std::uint32_t> test;
};

inline constexpr std::array<double, 3> kDefaultSplitFractions{0.70, 0.225, 0.075};

/// Seeded shuffle, then contiguous partition with round(f * N) subjects for train
/// and val and the remainder for test. Each set is returned in ascending order.
SubjectSplit split_subjects(std::span<const std::uint32_t> subjects,
                            std::span<const double> fractions, std::uint64_t seed);

/// Indices into the subject's sample list.
struct PersonalizationSplit {
  std::vector<std::size_t> finetune;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

/// Sort by SBP (ties by window_index); every take_every-th sorted sample goes to
/// finetune, the rest alternate val/test. Requires >= 2 * take_every samples.
PersonalizationSplit personalization_split(std::span<const WindowSample> subject_samples,
                                           std::size_t take_every = 10);

struct BalancedDataset {
  SegmentationScheme scheme;
  std::size_t quota = 1000;
  std::size_t min_windows = 1000;
  std::uint64_t seed = 0;
  std::array<double, 3> fractions = kDefaultSplitFractions;
  std::vector<WindowSample> samples;
  std::map<std::uint32_t, Split> split_assignment;

  std::vector<WindowSample> samples_of(Split split) const;
  std::vector<WindowSample> samples_of_subject(std::uint32_t subject_id) const;
  std::vector<std::uint32_t> subjects_of(Split split) const;
  std::size_t n_subjects() const { return split_assignment.size(); }
};

struct DatasetOptions {
  std::size_t quota = 1000;
  std::size_t min_windows = 1000;
  std::array<double, 3> fractions = kDefaultSplitFractions;
  std::uint64_t seed = 0;
};

/// Eligibility, balancing and subject-disjoint splitting in one pass.
BalancedDataset build_dataset(std::span<const WindowSample> samples, const SegmentationScheme& scheme,
                              const DatasetOptions& options);

/// Writes <dir>/samples.ppgw and the sidecar <dir>/manifest.json.
void save_dataset(const BalancedDataset& dataset, const std::filesystem::path& dir);
BalancedDataset load_dataset(const std::filesystem::path& dir);

std::string manifest_json(const BalancedDataset& dataset);

}  // namespace ppgbp::data
