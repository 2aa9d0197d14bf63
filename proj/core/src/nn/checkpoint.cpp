#include "ppgbp/nn/checkpoint.hpp"

#include <cstring>

#include <json.hpp>

#include "ppgbp/common/bytes.hpp"
#include "ppgbp/common/error.hpp"

namespace ppgbp::nn {

using nlohmann::json;

namespace {

constexpr std::uint16_t kCheckpointVersion = 1;

bool bit_equal(const std::vector<Tensor<float>>& a, const std::vector<Tensor<float>>& b) {
  if (a.size() != b.size()) return false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    if (a[i].shape() != b[i].shape()) return false;
    if (std::memcmp(a[i].data(), b[i].data(), a[i].size() * sizeof(float)) != 0) return false;
  }
  return true;
}

void put_tensors(ByteWriter& w, const std::vector<Tensor<float>>& ts) {
  w.put<std::uint32_t>(static_cast<std::uint32_t>(ts.size()));
  for (const auto& t : ts) {
    w.put<std::uint32_t>(static_cast<std::uint32_t>(t.rank()));
    for (auto d : t.shape()) w.put<std::uint32_t>(static_cast<std::uint32_t>(d));
    w.put_floats(t.values());
  }
}

std::vector<Tensor<float>> get_tensors(ByteReader& r) {
  const auto n = r.get<std::uint32_t>();
  std::vector<Tensor<float>> out;
  for (std::uint32_t i = 0; i < n; ++i) {
    const auto rank = r.get<std::uint32_t>();
    if (rank > 8) r.fail("implausible tensor rank " + std::to_string(rank));
    Shape shape(rank);
    for (auto& d : shape) d = r.get<std::uint32_t>();
    const std::size_t count = element_count(shape);
    if (count > r.remaining() / sizeof(float)) r.fail("truncated tensor data");
    std::vector<float> values(count);
    r.get_floats(values);
    out.emplace_back(std::move(shape), std::move(values));
  }
  return out;
}

json meta_json(const ModelCheckpoint& c) {
  return {{"seed", c.meta.seed},
          {"epoch", c.meta.epoch},
          {"best_metric", c.meta.best_metric},
          {"forward_count", c.meta.forward_count},
          {"scheme", {{"name", c.meta.scheme_name}, {"edges", c.meta.scheme_edges}}},
          {"stage", c.meta.stage},
          {"adam", {{"lr", c.adam.lr}, {"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"eps", c.adam.eps},
                    {"step", c.adam_step}}}};
}

}  // namespace

bool ModelCheckpoint::operator==(const ModelCheckpoint& o) const {
  return arch == o.arch && meta == o.meta && adam.lr == o.adam.lr && adam.beta1 == o.adam.beta1 &&
         adam.beta2 == o.adam.beta2 && adam.eps == o.adam.eps && adam_step == o.adam_step &&
         bit_equal(parameters, o.parameters) && bit_equal(buffers, o.buffers) &&
         bit_equal(adam_m, o.adam_m) && bit_equal(adam_v, o.adam_v);
}

ModelCheckpoint capture(Network<float>& net, const Adam<float>& optimizer, const TrainingMeta& meta) {
  ModelCheckpoint c;
  c.arch = net.config();
  c.meta = meta;
  c.adam = optimizer.options();
  c.adam_step = optimizer.step_count();
  for (auto* p : net.parameters()) c.parameters.push_back(p->value);
  for (auto* b : net.buffers()) c.buffers.push_back(*b);
  c.adam_m = optimizer.first_moments();
  c.adam_v = optimizer.second_moments();
  return c;
}

void restore(const ModelCheckpoint& ckpt, Network<float>& net, Adam<float>* optimizer) {
  auto params = net.parameters();
  auto bufs = net.buffers();
  if (params.size() != ckpt.parameters.size() || bufs.size() != ckpt.buffers.size())
    throw StructuralError("checkpoint: tensor count does not match architecture " + net.config().name);
  for (std::size_t i = 0; i < params.size(); ++i) {
    if (params[i]->value.shape() != ckpt.parameters[i].shape())
      throw StructuralError("checkpoint: parameter " + std::to_string(i) + " shape " +
                            shape_string(ckpt.parameters[i].shape()) + " vs " +
                            shape_string(params[i]->value.shape()));
    params[i]->value = ckpt.parameters[i];
    params[i]->grad.fill(0.0f);
  }
  for (std::size_t i = 0; i < bufs.size(); ++i) {
    if (bufs[i]->shape() != ckpt.buffers[i].shape())
      throw StructuralError("checkpoint: buffer " + std::to_string(i) + " shape mismatch");
    *bufs[i] = ckpt.buffers[i];
  }
  if (optimizer) {
    optimizer->options() = ckpt.adam;
    if (!ckpt.adam_m.empty() && ckpt.adam_m.size() != params.size())
      throw StructuralError("checkpoint: optimizer state does not match parameters");
    optimizer->restore(ckpt.adam_step, ckpt.adam_m, ckpt.adam_v);
  }
}

Network<float> instantiate(const ModelCheckpoint& ckpt) {
  Network<float> net(ckpt.arch, ckpt.meta.seed);
  restore(ckpt, net, nullptr);
  return net;
}

std::vector<std::uint8_t> encode_checkpoint(const ModelCheckpoint& c) {
  json header;
  header["architecture"] = json::parse(to_json(c.arch));
  header["meta"] = meta_json(c);
  const std::string text = header.dump();

  ByteWriter w;
  w.put_bytes("PPGM");
  w.put<std::uint16_t>(kCheckpointVersion);
  w.put<std::uint32_t>(static_cast<std::uint32_t>(text.size()));
  w.put_bytes(text);
  put_tensors(w, c.parameters);
  put_tensors(w, c.buffers);
  put_tensors(w, c.adam_m);
  put_tensors(w, c.adam_v);
  return std::move(w.bytes());
}

ModelCheckpoint decode_checkpoint(std::span<const std::uint8_t> bytes) {
  ByteReader r(bytes, "checkpoint");
  if (r.get_string(4) != "PPGM") {
    ByteReader at_start(bytes, "checkpoint");
    at_start.fail("bad magic, expected PPGM");
  }
  if (const auto v = r.get<std::uint16_t>(); v != kCheckpointVersion)
    r.fail("unsupported version " + std::to_string(v));
  const auto len = r.get<std::uint32_t>();
  const std::size_t text_at = r.offset();
  const std::string text = r.get_string(len);

  ModelCheckpoint c;
  try {
    const json header = json::parse(text);
    c.arch = architecture_from_json(header.at("architecture").dump());
    const auto& m = header.at("meta");
    c.meta.seed = m.at("seed").get<std::uint64_t>();
    c.meta.epoch = m.at("epoch").get<std::int64_t>();
    c.meta.best_metric = m.at("best_metric").get<double>();
    c.meta.forward_count = m.at("forward_count").get<std::uint64_t>();
    c.meta.scheme_name = m.at("scheme").at("name").get<std::string>();
    c.meta.scheme_edges = m.at("scheme").at("edges").get<std::vector<double>>();
    c.meta.stage = m.at("stage").get<std::string>();
    const auto& a = m.at("adam");
    c.adam = {a.at("lr").get<double>(), a.at("beta1").get<double>(), a.at("beta2").get<double>(),
              a.at("eps").get<double>()};
    c.adam_step = a.at("step").get<std::uint64_t>();
  } catch (const json::exception& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what(), text_at);
  }
  c.parameters = get_tensors(r);
  c.buffers = get_tensors(r);
  c.adam_m = get_tensors(r);
  c.adam_v = get_tensors(r);
  if (r.remaining() != 0) r.fail("trailing bytes");
  return c;
}

void save_checkpoint(const ModelCheckpoint& ckpt, const std::filesystem::path& path) {
  write_file(path, encode_checkpoint(ckpt));
}

ModelCheckpoint load_checkpoint(const std::filesystem::path& path) {
  return decode_checkpoint(read_file(path));
}

}  // namespace ppgbp::nn
