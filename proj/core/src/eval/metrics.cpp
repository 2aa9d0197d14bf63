#include "ppgbp/eval/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "ppgbp/common/error.hpp"

namespace ppgbp::eval {

nn::Tensor<float> batch_input(std::span<const data::WindowSample> samples) {
  if (samples.empty()) return nn::Tensor<float>({0, 1, 0});
  const std::size_t len = samples.front().ppg.size();
  nn::Tensor<float> x({samples.size(), 1, len});
  for (std::size_t i = 0; i < samples.size(); ++i) {
    if (samples[i].ppg.size() != len) throw StructuralError("batch: windows of different length");
    std::copy(samples[i].ppg.begin(), samples[i].ppg.end(), x.data() + i * len);
  }
  return x;
}

nn::Tensor<float> predict_outputs(nn::Network<float>& net, std::span<const data::WindowSample> samples,
                                  std::size_t batch_size) {
  const std::size_t width = net.config().head.width();
  nn::Tensor<float> out({samples.size(), width});
  for (std::size_t start = 0; start < samples.size(); start += batch_size) {
    const std::size_t n = std::min(batch_size, samples.size() - start);
    const auto y = net.forward(batch_input(samples.subspan(start, n)), nn::Mode::eval);
    std::copy(y.data(), y.data() + y.size(), out.data() + start * width);
  }
  return out;
}

std::vector<std::size_t> predict_bins(const nn::Tensor<float>& outputs, nn::Task task,
                                      const data::SegmentationScheme& scheme) {
  if (outputs.rank() != 2) throw StructuralError("predict_bins: expected [n, width] outputs");
  const std::size_t n = outputs.dim(0), width = outputs.dim(1);
  std::vector<std::size_t> bins(n);
  if (task == nn::Task::classification) {
    if (width != scheme.n_bins())
      throw StructuralError("classification head has " + std::to_string(width) + " outputs but scheme " +
                            scheme.name + " has " + std::to_string(scheme.n_bins()) + " bins");
    for (std::size_t i = 0; i < n; ++i) {
      const float* row = outputs.data() + i * width;
      bins[i] = static_cast<std::size_t>(std::max_element(row, row + width) - row);
    }
  } else {
    if (width != 1) throw StructuralError("regression head must have a single output");
    for (std::size_t i = 0; i < n; ++i) bins[i] = data::assign_bin(outputs[i], scheme);
  }
  return bins;
}

std::vector<std::size_t> true_bins(std::span<const data::WindowSample> samples,
                                   const data::SegmentationScheme& scheme) {
  std::vector<std::size_t> out;
  out.reserve(samples.size());
  for (const auto& s : samples) out.push_back(data::assign_bin(s.sbp, scheme));
  return out;
}

double accuracy(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw StructuralError("accuracy: length mismatch");
  if (predicted.empty()) throw ConfigError("accuracy: no samples");
  std::size_t hits = 0;
  for (std::size_t i = 0; i < predicted.size(); ++i) hits += predicted[i] == truth[i];
  return static_cast<double>(hits) / static_cast<double>(predicted.size());
}

std::size_t ConfusionMatrix::total() const {
  std::size_t t = 0;
  for (const auto& row : raw)
    for (auto v : row) t += v;
  return t;
}

std::size_t ConfusionMatrix::trace() const {
  std::size_t t = 0;
  for (std::size_t i = 0; i < n_bins; ++i) t += raw[i][i];
  return t;
}

ConfusionMatrix confusion_matrix(std::span<const std::size_t> predicted,
                                 std::span<const std::size_t> truth, std::size_t n_bins) {
  if (predicted.size() != truth.size()) throw StructuralError("confusion: length mismatch");
  ConfusionMatrix cm;
  cm.n_bins = n_bins;
  cm.raw.assign(n_bins, std::vector<std::size_t>(n_bins, 0));
  for (std::size_t i = 0; i < predicted.size(); ++i) {
    if (predicted[i] >= n_bins || truth[i] >= n_bins)
      throw StructuralError("confusion: bin index out of range [0, " + std::to_string(n_bins) + ")");
    ++cm.raw[truth[i]][predicted[i]];
  }
  cm.normalized.assign(n_bins, std::vector<double>(n_bins, 0.0));
  cm.empty_row.assign(n_bins, false);
  for (std::size_t t = 0; t < n_bins; ++t) {
    std::size_t sum = 0;
    for (auto v : cm.raw[t]) sum += v;
    if (sum == 0) {
      cm.empty_row[t] = true;
      continue;
    }
    for (std::size_t p = 0; p < n_bins; ++p)
      cm.normalized[t][p] = static_cast<double>(cm.raw[t][p]) / static_cast<double>(sum);
  }
  return cm;
}

double mean_abs_bin_distance(std::span<const std::size_t> predicted, std::span<const std::size_t> truth) {
  if (predicted.size() != truth.size()) throw StructuralError("bin distance: length mismatch");
  if (predicted.empty()) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < predicted.size(); ++i)
    s += std::abs(static_cast<double>(predicted[i]) - static_cast<double>(truth[i]));
  return s / static_cast<double>(predicted.size());
}

void check_compatible(const nn::ModelCheckpoint& ckpt, const data::SegmentationScheme& scheme) {
  if (ckpt.arch.head.task == nn::Task::classification && ckpt.arch.head.n_bins != scheme.n_bins())
    throw StructuralError("checkpoint head has " + std::to_string(ckpt.arch.head.n_bins) +
                          " classes but dataset scheme " + scheme.name + " has " +
                          std::to_string(scheme.n_bins()) + " bins");
  if (!ckpt.meta.scheme_edges.empty() && ckpt.meta.scheme_edges != scheme.edges)
    throw StructuralError("checkpoint was trained on scheme " + ckpt.meta.scheme_name +
                          ", dataset uses " + scheme.name);
}

EvalReport evaluate(nn::Network<float>& net, std::span<const data::WindowSample> samples,
                    const data::SegmentationScheme& scheme, const std::string& split,
                    const std::string& run_id) {
  const auto& arch = net.config();
  const auto outputs = predict_outputs(net, samples);
  const auto pred = predict_bins(outputs, arch.head.task, scheme);
  const auto truth = true_bins(samples, scheme);

  EvalReport r;
  r.run_id = run_id;
  r.scheme = scheme.name;
  r.architecture = arch.name;
  r.task = nn::to_string(arch.head.task);
  r.split = split;
  r.n_samples = samples.size();
  r.accuracy = accuracy(pred, truth);
  r.mean_abs_bin_distance = mean_abs_bin_distance(pred, truth);
  r.confusion = confusion_matrix(pred, truth, scheme.n_bins());
  return r;
}

EvalReport evaluate(const nn::ModelCheckpoint& ckpt, std::span<const data::WindowSample> samples,
                    const data::SegmentationScheme& scheme, const std::string& split,
                    const std::string& run_id) {
  check_compatible(ckpt, scheme);
  auto net = nn::instantiate(ckpt);
  return evaluate(net, samples, scheme, split, run_id);
}

}  // namespace ppgbp::eval
