#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "ppgbp/data/scheme.hpp"
#include "ppgbp/data/types.hpp"
#include "ppgbp/nn/checkpoint.hpp"
#include "ppgbp/nn/network.hpp"

namespace ppgbp::eval {

/// Stacks samples into a [n, 1, n_samp] input tensor.
nn::Tensor<float> batch_input(std::span<const data::WindowSample> samples);

/// Eval-mode forward pass over all samples in chunks of `batch_size`.
nn::Tensor<float> predict_outputs(nn::Network<float>& net, std::span<const data::WindowSample> samples,
                                  std::size_t batch_size = 128);

/// Head outputs -> bin indices. Classification: argmax (lowest index on ties).
/// Regression: assign_bin of the predicted mmHg value (clamped to the end bins).
/// Throws StructuralError if a classification head width differs from the scheme.
std::vector<std::size_t> predict_bins(const nn::Tensor<float>& outputs, nn::Task task,
                                      const data::SegmentationScheme& scheme);

std::vector<std::size_t> true_bins(std::span<const data::WindowSample> samples,
                                   const data::SegmentationScheme& scheme);

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

/// Rows are ground truth, columns predictions.
struct ConfusionMatrix {
  std::size_t n_bins = 0;
  std::vector<std::vector<std::size_t>> raw;
  std::vector<std::vector<double>> normalized;  // row-normalized; empty rows stay zero
  std::vector<bool> empty_row;

  std::size_t total() const;
  std::size_t trace() const;
};

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> truth, std::size_t n_bins);

double mean_abs_bin_distance(std::span<const std::size_t> predicted, std::span<const std::size_t> truth);

struct EvalReport {
  std::string run_id;
  std::string scheme;
  std::string architecture;
  std::string task;
  std::string split;
  std::size_t n_samples = 0;
  double accuracy = 0.0;
  double mean_abs_bin_distance = 0.0;
  ConfusionMatrix confusion;
};

/// Checks that the checkpoint was trained for `scheme` (head width / stored edges).
void check_compatible(const nn::ModelCheckpoint& ckpt, const data::SegmentationScheme& scheme);

EvalReport evaluate(const nn::ModelCheckpoint& ckpt, std::span<const data::WindowSample> samples,
                    const data::SegmentationScheme& scheme, const std::string& split,
                    const std::string& run_id = "");

EvalReport evaluate(nn::Network<float>& net, std::span<const data::WindowSample> samples,
                    const data::SegmentationScheme& scheme, const std::string& split,
                    const std::string& run_id = "");

}  // namespace ppgbp::eval
