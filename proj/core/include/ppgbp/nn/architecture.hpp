#pragma once

#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

#include "ppgbp/nn/layers.hpp"

namespace ppgbp::nn {

enum class Task { classification, regression };
enum class Profile { full, desk };

enum class LayerKind {
  conv1d,
  batchnorm,
  relu,
  maxpool1d,
  globalavgpool,
  dense,
  dropout,
  residual_basic,
  residual_bottleneck,
  softmax_head,
  linear_head,
};

std::string to_string(Task task);
std::string to_string(Profile profile);
std::string to_string(LayerKind kind);
Task task_from_string(std::string_view s);
Profile profile_from_string(std::string_view s);
LayerKind layer_kind_from_string(std::string_view s);

/// One entry of a sequential architecture. Fields unused by a kind stay at defaults.
struct LayerSpec {
  LayerKind kind = LayerKind::relu;
  std::size_t units = 0;  // conv/dense/head width, residual base width
  std::size_t kernel = 0;
  std::size_t stride = 1;
  Padding padding = Padding::valid;
  double rate = 0.0;
  bool projection = false;

  bool operator==(const LayerSpec&) const = default;
};

struct HeadSpec {
  Task task = Task::classification;
  std::size_t n_bins = 0;
  // linear head output = center + scale * z (mmHg)
  double center = 130.0;
  double scale = 50.0;

  std::size_t width() const { return task == Task::classification ? n_bins : 1; }
  bool operator==(const HeadSpec&) const = default;
};

struct ArchitectureConfig {
  std::string name;
  Profile profile = Profile::desk;
  std::size_t input_length = 625;
  HeadSpec head;
  std::vector<LayerSpec> layers;

  bool operator==(const ArchitectureConfig&) const = default;
};

/// alexnet, resnet18, resnet34 or resnet50 in 1D form. The desk profile divides
/// every channel and dense width by 4 (minimum 8).
ArchitectureConfig build_architecture(std::string_view name, Task task, std::size_t n_bins,
                                      Profile profile = Profile::full, std::size_t input_length = 625);

const std::vector<std::string>& known_architectures();

/// Per-layer output shape (without the batch dimension); validates the chain and
/// the head. Throws StructuralError.
std::vector<Shape> infer_shapes(const ArchitectureConfig& config);

std::string to_json(const ArchitectureConfig& config);
ArchitectureConfig architecture_from_json(std::string_view text);

}  // namespace ppgbp::nn
