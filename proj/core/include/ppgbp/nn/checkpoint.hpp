#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "ppgbp/nn/architecture.hpp"
#include "ppgbp/nn/network.hpp"
#include "ppgbp/nn/optim.hpp"

namespace ppgbp::nn {

struct TrainingMeta {
  std::uint64_t seed = 0;
  std::int64_t epoch = -1;        // 0-based epoch the parameters come from
  double best_metric = 0.0;       // val loss (pretraining) or val accuracy (personalization)
  std::uint64_t forward_count = 0;  // training forward passes so far (dropout stream)
  std::string scheme_name;
  std::vector<double> scheme_edges;
  std::string stage = "pretrain";

  bool operator==(const TrainingMeta&) const = default;
};

/// Architecture, parameters, running statistics and optimizer state.
struct ModelCheckpoint {
  ArchitectureConfig arch;
  TrainingMeta meta;
  AdamOptions adam;
  std::uint64_t adam_step = 0;
  std::vector<Tensor<float>> parameters;
  std::vector<Tensor<float>> buffers;
  std::vector<Tensor<float>> adam_m;
  std::vector<Tensor<float>> adam_v;

  bool operator==(const ModelCheckpoint& o) const;
};

ModelCheckpoint capture(Network<float>& net, const Adam<float>& optimizer, const TrainingMeta& meta);

/// Copies parameters and buffers into `net` (shapes must match) and, when given,
/// restores the optimizer state.
void restore(const ModelCheckpoint& ckpt, Network<float>& net, Adam<float>* optimizer = nullptr);

/// Fresh network carrying the checkpoint's weights.
Network<float> instantiate(const ModelCheckpoint& ckpt);

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& ckpt);
ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes);
void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path);
ModelCheckpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace ppgbp::nn
