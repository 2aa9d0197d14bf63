#pragma once

#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "ppgbp/eval/metrics.hpp"

namespace ppgbp::eval {

inline constexpr const char* kGridHeader = "scheme,architecture,task,split,n,accuracy,mean_abs_bin_distance";
inline constexpr const char* kPersonalizationHeader =
    "scheme,architecture,task,subject_id,pre_accuracy,post_accuracy,retention_accuracy";

/// Table-2 style row (one evaluated run).
struct GridRow {
  std::string scheme, architecture, task, split;
  std::size_t n = 0;
  double accuracy = 0.0;
  double mean_abs_bin_distance = 0.0;
  std::size_t n_bins = 0;  // 0 when unknown (read back from CSV)
};

GridRow to_grid_row(const EvalReport& report);

/// Per-subject accuracy on the personalization test half before and after
/// fine-tuning; retention is accuracy on the original test split without the
/// subject (NaN when not measured).
struct PersonalizationRecord {
  std::string scheme, architecture, task;
  std::uint32_t subject_id = 0;
  double pre_accuracy = 0.0;
  double post_accuracy = 0.0;
  double retention_accuracy = 0.0;
};

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;  // population standard deviation
  std::size_t n = 0;
};

MeanStd mean_std(std::span<const double> values);

struct PersonalizationSummary {
  std::string scheme, architecture, task;
  MeanStd pre, post;
};

/// Accuracy averaged over architectures for one (scheme, task, split).
struct ArchitectureAverage {
  std::string scheme, task, split;
  MeanStd accuracy;
  MeanStd pre, post;  // n == 0 when no personalization records exist
};

struct SummaryTables {
  std::vector<GridRow> grid;
  std::vector<PersonalizationSummary> personalization;
  std::vector<ArchitectureAverage> architecture_averages;
};

/// Groups rows by (scheme, architecture, task, split) and records by
/// (scheme, architecture, task). Throws ConfigError when the input is empty or
/// one scheme name appears with different bin counts.
SummaryTables aggregate_report(std::span<const GridRow> rows, std::span<const PersonalizationRecord> records);

std::string grid_csv(std::span<const GridRow> rows);
std::vector<GridRow> parse_grid_csv(const std::string& text);
std::string personalization_csv(std::span<const PersonalizationRecord> records);
std::vector<PersonalizationRecord> parse_personalization_csv(const std::string& text);

/// n_bins-line CSV blocks (normalized, then raw counts) with a header naming the run.
/// Rows are ground truth, columns predictions; the trailing column flags empty rows.
std::string confusion_csv(const EvalReport& report);

std::string personalization_summary_csv(std::span<const PersonalizationSummary> rows);
std::string architecture_average_csv(std::span<const ArchitectureAverage> rows);
/// Structured summary with the published reference accuracies as footnotes.
std::string summary_json(const SummaryTables& tables);
/// Declarative plot descriptions (grouped bars) for the grid and personalization.
std::string plot_spec_json(const SummaryTables& tables);

/// Published test accuracies for (scheme, architecture, task); NaN when absent.
/// Reference only; they require the original clinical data.
double reference_accuracy(const std::string& scheme, const std::string& architecture, const std::string& task);

std::string format_double(double v, int precision = 6);

}  // namespace ppgbp::eval
