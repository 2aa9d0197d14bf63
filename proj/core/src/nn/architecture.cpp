#include "ppgbp/nn/architecture.hpp"

#include <algorithm>
#include <array>

#include <json.hpp>

#include "ppgbp/common/error.hpp"

namespace ppgbp::nn {

using nlohmann::json;

std::string to_string(Task task) { return task == Task::classification ? "classification" : "regression"; }
std::string to_string(Profile profile) { return profile == Profile::full ? "full" : "desk"; }

Task task_from_string(std::string_view s) {
  if (s == "classification") return Task::classification;
  if (s == "regression") return Task::regression;
  throw ConfigError("unknown task '" + std::string(s) + "' (expected classification or regression)");
}

Profile profile_from_string(std::string_view s) {
  if (s == "full") return Profile::full;
  if (s == "desk") return Profile::desk;
  throw ConfigError("unknown profile '" + std::string(s) + "' (expected full or desk)");
}

namespace {
constexpr std::array<std::pair<LayerKind, std::string_view>, 11> kKindNames{{
    {LayerKind::conv1d, "conv1d"},
    {LayerKind::batchnorm, "batchnorm"},
    {LayerKind::relu, "relu"},
    {LayerKind::maxpool1d, "maxpool1d"},
    {LayerKind::globalavgpool, "globalavgpool"},
    {LayerKind::dense, "dense"},
    {LayerKind::dropout, "dropout"},
    {LayerKind::residual_basic, "residual_basic"},
    {LayerKind::residual_bottleneck, "residual_bottleneck"},
    {LayerKind::softmax_head, "softmax_head"},
    {LayerKind::linear_head, "linear_head"},
}};
}  // namespace

std::string to_string(LayerKind kind) {
  for (const auto& [k, n] : kKindNames)
    if (k == kind) return std::string(n);
  return "unknown";
}

LayerKind layer_kind_from_string(std::string_view s) {
  for (const auto& [k, n] : kKindNames)
    if (n == s) return k;
  throw FormatError("unknown layer kind '" + std::string(s) + "'", 0);
}

const std::vector<std::string>& known_architectures() {
  static const std::vector<std::string> names{"alexnet", "resnet18", "resnet34", "resnet50"};
  return names;
}

namespace {

LayerSpec conv(std::size_t ch, std::size_t k, std::size_t s, Padding p) {
  return {LayerKind::conv1d, ch, k, s, p, 0.0, false};
}
LayerSpec simple(LayerKind kind) { return {kind, 0, 0, 1, Padding::valid, 0.0, false}; }
LayerSpec pool(std::size_t k, std::size_t s, Padding p) { return {LayerKind::maxpool1d, 0, k, s, p, 0.0, false}; }
LayerSpec dense(std::size_t n) { return {LayerKind::dense, n, 0, 1, Padding::valid, 0.0, false}; }
LayerSpec dropout(double rate) { return {LayerKind::dropout, 0, 0, 1, Padding::valid, rate, false}; }

}  // namespace

ArchitectureConfig build_architecture(std::string_view name, Task task, std::size_t n_bins,
                                      Profile profile, std::size_t input_length) {
  if (task == Task::classification && n_bins < 2)
    throw ConfigError("classification head needs at least 2 bins");
  auto w = [profile](std::size_t width) {
    return profile == Profile::full ? width : std::max<std::size_t>(8, width / 4);
  };

  ArchitectureConfig cfg;
  cfg.name = std::string(name);
  cfg.profile = profile;
  cfg.input_length = input_length;
  cfg.head.task = task;
  cfg.head.n_bins = task == Task::classification ? n_bins : 0;
  auto& L = cfg.layers;

  if (name == "alexnet") {
    L.push_back(conv(w(96), 11, 4, Padding::valid));
    L.push_back(simple(LayerKind::relu));
    L.push_back(pool(3, 2, Padding::valid));
    L.push_back(conv(w(256), 5, 1, Padding::same));
    L.push_back(simple(LayerKind::relu));
    L.push_back(pool(3, 2, Padding::valid));
    L.push_back(conv(w(384), 3, 1, Padding::same));
    L.push_back(simple(LayerKind::relu));
    L.push_back(conv(w(384), 3, 1, Padding::same));
    L.push_back(simple(LayerKind::relu));
    L.push_back(conv(w(256), 3, 1, Padding::same));
    L.push_back(simple(LayerKind::relu));
    L.push_back(pool(3, 2, Padding::valid));
    for (int i = 0; i < 2; ++i) {
      L.push_back(dense(w(4096)));
      L.push_back(simple(LayerKind::relu));
      L.push_back(dropout(0.5));
    }
  } else if (name == "resnet18" || name == "resnet34" || name == "resnet50") {
    const bool bottleneck = name == "resnet50";
    const std::array<std::size_t, 4> blocks =
        name == "resnet18" ? std::array<std::size_t, 4>{2, 2, 2, 2} : std::array<std::size_t, 4>{3, 4, 6, 3};
    const std::array<std::size_t, 4> widths{64, 128, 256, 512};
    L.push_back(conv(w(64), 7, 2, Padding::same));
    L.push_back(simple(LayerKind::batchnorm));
    L.push_back(simple(LayerKind::relu));
    L.push_back(pool(3, 2, Padding::same));
    std::size_t channels = w(64);
    for (std::size_t stage = 0; stage < 4; ++stage) {
      const std::size_t base = w(widths[stage]);
      const std::size_t out = bottleneck ? base * ResidualBlock<float>::kExpansion : base;
      for (std::size_t b = 0; b < blocks[stage]; ++b) {
        LayerSpec spec;
        spec.kind = bottleneck ? LayerKind::residual_bottleneck : LayerKind::residual_basic;
        spec.units = base;
        spec.stride = (stage > 0 && b == 0) ? 2 : 1;
        spec.projection = spec.stride != 1 || channels != out;
        L.push_back(spec);
        channels = out;
      }
    }
    L.push_back(simple(LayerKind::globalavgpool));
  } else {
    throw ConfigError("unknown architecture '" + std::string(name) +
                      "' (expected alexnet, resnet18, resnet34 or resnet50)");
  }

  LayerSpec head;
  head.kind = task == Task::classification ? LayerKind::softmax_head : LayerKind::linear_head;
  head.units = cfg.head.width();
  L.push_back(head);
  infer_shapes(cfg);
  return cfg;
}

std::vector<Shape> infer_shapes(const ArchitectureConfig& config) {
  std::vector<Shape> out;
  Shape s{1, config.input_length};
  auto fail = [&](std::size_t i, const std::string& what) -> void {
    throw StructuralError("architecture " + config.name + ", layer " + std::to_string(i) + " (" +
                          to_string(config.layers[i].kind) + "): " + what + ", input " + shape_string(s));
  };
  auto conv_len = [](std::size_t len, std::size_t k, std::size_t st, std::size_t pad) -> std::size_t {
    if (len + 2 * pad < k) return 0;
    return (len + 2 * pad - k) / st + 1;
  };

  for (std::size_t i = 0; i < config.layers.size(); ++i) {
    const auto& l = config.layers[i];
    const bool last = i + 1 == config.layers.size();
    switch (l.kind) {
      case LayerKind::conv1d:
      case LayerKind::maxpool1d: {
        if (s.size() != 2) fail(i, "needs [channels, length] input");
        if (l.kernel == 0 || l.stride == 0) fail(i, "kernel and stride must be positive");
        const std::size_t pad = l.padding == Padding::same ? (l.kernel - 1) / 2 : 0;
        const std::size_t len = conv_len(s[1], l.kernel, l.stride, pad);
        if (len == 0) fail(i, "input shorter than kernel");
        if (l.kind == LayerKind::conv1d && l.units == 0) fail(i, "zero output channels");
        s = {l.kind == LayerKind::conv1d ? l.units : s[0], len};
        break;
      }
      case LayerKind::batchnorm:
      case LayerKind::relu:
      case LayerKind::dropout:
        break;
      case LayerKind::globalavgpool:
        if (s.size() != 2) fail(i, "needs [channels, length] input");
        s = {s[0]};
        break;
      case LayerKind::dense:
        if (l.units == 0) fail(i, "zero units");
        s = {l.units};
        break;
      case LayerKind::residual_basic:
      case LayerKind::residual_bottleneck: {
        if (s.size() != 2) fail(i, "needs [channels, length] input");
        const std::size_t out = l.kind == LayerKind::residual_basic
                                    ? l.units
                                    : l.units * ResidualBlock<float>::kExpansion;
        if (!l.projection && (l.stride != 1 || s[0] != out)) fail(i, "channel or stride change without projection");
        const std::size_t len = conv_len(s[1], 1, l.stride, 0);
        s = {out, len};
        break;
      }
      case LayerKind::softmax_head:
      case LayerKind::linear_head: {
        if (!last) fail(i, "head must be the final layer");
        const Task t = l.kind == LayerKind::softmax_head ? Task::classification : Task::regression;
        if (t != config.head.task) fail(i, "head kind does not match task " + to_string(config.head.task));
        if (l.units != config.head.width())
          fail(i, "head width " + std::to_string(l.units) + " != expected " + std::to_string(config.head.width()));
        s = {l.units};
        break;
      }
    }
    out.push_back(s);
  }
  if (config.layers.empty() || (config.layers.back().kind != LayerKind::softmax_head &&
                                config.layers.back().kind != LayerKind::linear_head))
    throw StructuralError("architecture " + config.name + " has no output head");
  return out;
}

std::string to_json(const ArchitectureConfig& c) {
  json j;
  j["name"] = c.name;
  j["profile"] = to_string(c.profile);
  j["input_length"] = c.input_length;
  j["head"] = {{"task", to_string(c.head.task)},
               {"n_bins", c.head.n_bins},
               {"center", c.head.center},
               {"scale", c.head.scale}};
  json layers = json::array();
  for (const auto& l : c.layers) {
    layers.push_back({{"kind", to_string(l.kind)},
                      {"units", l.units},
                      {"kernel", l.kernel},
                      {"stride", l.stride},
                      {"padding", l.padding == Padding::same ? "same" : "valid"},
                      {"rate", l.rate},
                      {"projection", l.projection}});
  }
  j["layers"] = layers;
  return j.dump();
}

ArchitectureConfig architecture_from_json(std::string_view text) {
  try {
    const json j = json::parse(text);
    ArchitectureConfig c;
    c.name = j.at("name").get<std::string>();
    c.profile = profile_from_string(j.at("profile").get<std::string>());
    c.input_length = j.at("input_length").get<std::size_t>();
    const auto& h = j.at("head");
    c.head.task = task_from_string(h.at("task").get<std::string>());
    c.head.n_bins = h.at("n_bins").get<std::size_t>();
    c.head.center = h.at("center").get<double>();
    c.head.scale = h.at("scale").get<double>();
    for (const auto& l : j.at("layers")) {
      LayerSpec s;
      s.kind = layer_kind_from_string(l.at("kind").get<std::string>());
      s.units = l.at("units").get<std::size_t>();
      s.kernel = l.at("kernel").get<std::size_t>();
      s.stride = l.at("stride").get<std::size_t>();
      s.padding = l.at("padding").get<std::string>() == "same" ? Padding::same : Padding::valid;
      s.rate = l.at("rate").get<double>();
      s.projection = l.at("projection").get<bool>();
      c.layers.push_back(s);
    }
    infer_shapes(c);
    return c;
  } catch (const json::exception& e) {
    throw FormatError(std::string("architecture config: ") + e.what(), 0);
  } catch (const ConfigError& e) {
    throw FormatError(std::string("architecture config: ") + e.what(), 0);
  }
}

}  // namespace ppgbp::nn
