#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <memory>
#include <string>
#include <vector>

#include "ppgbp/common/random.hpp"
#include "ppgbp/nn/architecture.hpp"
#include "ppgbp/nn/layers.hpp"
#include "ppgbp/nn/loss.hpp"
#include "ppgbp/nn/network.hpp"

namespace ppgbp::test {

using nn::Tensor;

inline constexpr double kStep = 1e-4;
inline constexpr double kTolerance = 1e-4;
inline constexpr std::size_t kMaxProbes = 300;

struct GradResult {
  std::string what;
  double rel_error = 0.0;
  // central differences at h and h/100 disagree: a ReLU or max switch lies inside the step
  bool kink = false;
};

inline double rel_error(const std::vector<double>& a, const std::vector<double>& n) {
  double diff = 0.0, na = 0.0, nn_ = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    diff += (a[i] - n[i]) * (a[i] - n[i]);
    na += a[i] * a[i];
    nn_ += n[i] * n[i];
  }
  return std::sqrt(diff) / std::max({std::sqrt(na), std::sqrt(nn_), 1e-10});
}

inline std::vector<std::size_t> probes(std::size_t n, Rng& rng) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  if (n > kMaxProbes) {
    rng.shuffle(idx);
    idx.resize(kMaxProbes);
  }
  return idx;
}

inline Tensor<double> random_tensor(nn::Shape shape, Rng& rng, double scale = 1.0) {
  Tensor<double> t(std::move(shape));
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

/// Central differences of a scalar function of `values` at the probed indices.
inline std::vector<double> numeric(std::vector<double*> targets, const std::function<double()>& f,
                                   double h = kStep) {
  std::vector<double> out;
  for (double* p : targets) {
    const double keep = *p;
    *p = keep + h;
    const double up = f();
    *p = keep - h;
    const double down = f();
    *p = keep;
    out.push_back((up - down) / (2.0 * h));
  }
  return out;
}

inline GradResult compare(std::string what, const std::vector<double>& analytic, std::vector<double*> targets,
                          const std::function<double()>& f) {
  const auto coarse = numeric(targets, f);
  const auto fine = numeric(targets, f, kStep / 100.0);
  return {std::move(what), rel_error(analytic, coarse), rel_error(coarse, fine) > 0.1 * kTolerance};
}

/// Checks d(sum(r * layer(x)))/dx and d/dparams against central differences.
inline std::vector<GradResult> check_layer(nn::Layer<double>& layer, Tensor<double> x, Rng& rng,
                                           nn::Mode mode = nn::Mode::train) {
  const auto y0 = layer.forward(x, mode);
  const auto r = random_tensor(y0.shape(), rng);
  auto objective = [&]() {
    const auto y = layer.forward(x, mode);
    double s = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) s += r[i] * y[i];
    return s;
  };
  std::vector<nn::Parameter<double>*> params;
  layer.collect_parameters(params);
  for (auto* p : params) p->grad.fill(0.0);
  layer.forward(x, mode);
  const auto dx = layer.backward(r);

  std::vector<GradResult> out;
  {
    const auto idx = probes(x.size(), rng);
    std::vector<double*> targets;
    std::vector<double> analytic;
    for (auto i : idx) {
      targets.push_back(&x[i]);
      analytic.push_back(dx[i]);
    }
    out.push_back(compare(layer.name() + ".input", analytic, targets, objective));
  }
  for (auto* p : params) {
    const auto idx = probes(p->value.size(), rng);
    std::vector<double*> targets;
    std::vector<double> analytic;
    for (auto i : idx) {
      targets.push_back(&p->value[i]);
      analytic.push_back(p->grad[i]);
    }
    out.push_back(compare(layer.name() + "." + p->name, analytic, targets, objective));
  }
  return out;
}

/// Network + loss: checks d loss / d params and d loss / d input.
inline std::vector<GradResult> check_network(nn::Network<double>& net, Tensor<double> x,
                                             const std::function<nn::LossResult<double>(const Tensor<double>&)>& loss,
                                             Rng& rng) {
  auto objective = [&]() {
    net.reseed(77);
    return loss(net.forward(x, nn::Mode::train)).loss;
  };
  net.zero_grad();
  net.reseed(77);
  const auto lr = loss(net.forward(x, nn::Mode::train));
  const auto dx = net.backward(lr.grad);
  std::vector<GradResult> out;
  std::vector<double*> targets;
  std::vector<double> analytic;
  for (auto i : probes(x.size(), rng)) {
    targets.push_back(&x[i]);
    analytic.push_back(dx[i]);
  }
  out.push_back(compare("network.input", analytic, targets, objective));
  targets.clear();
  analytic.clear();
  // one pooled check over a sample of all parameter elements
  for (auto* p : net.parameters())
    for (std::size_t k = 0; k < std::min<std::size_t>(p->value.size(), 12); ++k) {
      const auto i = static_cast<std::size_t>(rng.below(p->value.size()));
      targets.push_back(&p->value[i]);
      analytic.push_back(p->grad[i]);
    }
  out.push_back(compare("network.parameters", analytic, targets, objective));
  return out;
}

/// Inputs with distinct values at least 0.05 apart so max selections are stable under +-h.
inline Tensor<double> spaced_tensor(nn::Shape shape, Rng& rng) {
  Tensor<double> t(std::move(shape));
  std::vector<double> v(t.size());
  for (std::size_t i = 0; i < v.size(); ++i) v[i] = 0.05 * static_cast<double>(i) - 0.025 * static_cast<double>(v.size());
  rng.shuffle(v);
  for (std::size_t i = 0; i < v.size(); ++i) t[i] = v[i] + 0.001 * rng.uniform();
  return t;
}

/// Reruns a check on fresh random inputs while any probe straddles a kink.
inline std::vector<GradResult> redraw_until_smooth(const std::function<std::vector<GradResult>()>& check,
                                                   int attempts = 20) {
  auto r = check();
  for (int i = 1; i < attempts && std::any_of(r.begin(), r.end(), [](const GradResult& g) { return g.kink; }); ++i)
    r = check();
  return r;
}

/// All layer kinds, losses and small networks over `seeds` random configurations.
inline std::vector<GradResult> full_gradient_suite(std::size_t seeds) {
  using namespace nn;
  std::vector<GradResult> all;
  auto add = [&](std::vector<GradResult> r, const std::string& tag) {
    for (auto& g : r) {
      g.what = tag + " " + g.what;
      all.push_back(g);
    }
  };
  for (std::size_t s = 0; s < seeds; ++s) {
    Rng rng(mix_seed(2024, s));
    const std::string tag = "seed" + std::to_string(s);
    const std::size_t batch = 2 + rng.below(2);

    {
      const std::size_t cin = 1 + rng.below(4), cout = 1 + rng.below(5), k = 1 + rng.below(7);
      const std::size_t stride = 1 + rng.below(3);
      const auto pad = rng.below(2) ? Padding::same : Padding::valid;
      Conv1d<double> conv(cin, cout, k, stride, pad, rng.below(2) == 0);
      for (std::size_t i = 0; i < conv.weight().value.size(); ++i) conv.weight().value[i] = rng.normal();
      for (std::size_t i = 0; i < conv.bias().value.size(); ++i) conv.bias().value[i] = rng.normal();
      add(check_layer(conv, random_tensor({batch, cin, k + 5 + rng.below(20)}, rng), rng), tag);
    }
    {
      const std::size_t c = 1 + rng.below(4);
      BatchNorm<double> bn(c);
      for (std::size_t i = 0; i < c; ++i) {
        bn.gamma().value[i] = rng.uniform(0.5, 1.5);
        bn.beta().value[i] = rng.normal();
      }
      add(check_layer(bn, random_tensor({batch, c, 3 + rng.below(10)}, rng), rng), tag + " rank3");
      BatchNorm<double> bn2(c);
      add(check_layer(bn2, random_tensor({batch + 2, c}, rng), rng), tag + " rank2");
      BatchNorm<double> bn3(c);
      for (std::size_t i = 0; i < c; ++i) {
        bn3.running_mean()[i] = rng.normal();
        bn3.running_var()[i] = rng.uniform(0.5, 2.0);
      }
      add(check_layer(bn3, random_tensor({batch, c, 5}, rng), rng, Mode::eval), tag + " eval");
    }
    {
      Relu<double> relu;
      auto x = random_tensor({batch, 3, 10}, rng);
      for (std::size_t i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) < 0.01) x[i] = 0.5;
      add(check_layer(relu, x, rng), tag);
    }
    {
      const std::size_t k = 2 + rng.below(3), stride = 1 + rng.below(3), pad = rng.below(k / 2 + 1);
      MaxPool1d<double> pool(k, stride, pad);
      add(check_layer(pool, spaced_tensor({batch, 2, k + 6 + rng.below(10)}, rng), rng), tag);
    }
    {
      GlobalAvgPool<double> gap;
      add(check_layer(gap, random_tensor({batch, 3, 4 + rng.below(10)}, rng), rng), tag);
    }
    {
      const std::size_t c = 1 + rng.below(3), l = 1 + rng.below(5), out = 1 + rng.below(6);
      Dense<double> dense(c * l, out);
      for (std::size_t i = 0; i < dense.weight().value.size(); ++i) dense.weight().value[i] = rng.normal();
      for (std::size_t i = 0; i < dense.bias().value.size(); ++i) dense.bias().value[i] = rng.normal();
      add(check_layer(dense, random_tensor({batch, c, l}, rng), rng), tag + " rank3");
    }
    {
      Dropout<double> drop(rng.uniform(0.2, 0.7));
      drop.reseed(s + 1);
      add(check_layer(drop, random_tensor({batch, 2, 8}, rng), rng), tag);
    }
    {
      ScaleShift<double> ss(rng.uniform(1, 60), rng.uniform(-10, 140));
      add(check_layer(ss, random_tensor({batch, 1}, rng), rng), tag);
    }
    {
      const auto variant = s % 2 ? ResidualVariant::bottleneck : ResidualVariant::basic;
      const std::size_t ch = 2 + rng.below(3);
      const std::size_t stride = 1 + rng.below(2);
      const std::size_t out_ch = variant == ResidualVariant::bottleneck ? ch * 4 : ch;
      const std::size_t in_ch = stride == 1 && rng.below(2) ? out_ch : 1 + rng.below(4);
      const bool projection = stride != 1 || in_ch != out_ch;
      ResidualBlock<double> block(variant, in_ch, ch, stride, projection);
      std::vector<Parameter<double>*> ps;
      block.collect_parameters(ps);
      for (auto* p : ps)
        if (p->name == "weight")
          for (std::size_t i = 0; i < p->value.size(); ++i) p->value[i] = 0.5 * rng.normal();
      const std::size_t length = 8 + rng.below(8);
      add(redraw_until_smooth([&] { return check_layer(block, random_tensor({batch, in_ch, length}, rng), rng); }),
          tag + (variant == ResidualVariant::basic ? " basic" : " bottleneck"));
    }
    {
      const std::size_t classes = 2 + rng.below(9);
      auto logits = random_tensor({batch + 1, classes}, rng, 2.0);
      std::vector<std::size_t> labels(batch + 1);
      for (auto& l : labels) l = rng.below(classes);
      const auto analytic = softmax_cross_entropy(logits, labels).grad;
      std::vector<double*> targets;
      std::vector<double> a;
      for (std::size_t i = 0; i < logits.size(); ++i) {
        targets.push_back(&logits[i]);
        a.push_back(analytic[i]);
      }
      all.push_back({tag + " softmax_cross_entropy",
                     rel_error(a, numeric(targets, [&] { return softmax_cross_entropy(logits, labels).loss; }))});
    }
    {
      auto pred = random_tensor({batch + 1, 1}, rng, 30.0);
      std::vector<double> target(batch + 1);
      for (auto& t : target) t = rng.uniform(80, 180);
      const auto analytic = mean_squared_error(pred, target).grad;
      std::vector<double*> targets;
      std::vector<double> a;
      for (std::size_t i = 0; i < pred.size(); ++i) {
        targets.push_back(&pred[i]);
        a.push_back(analytic[i]);
      }
      all.push_back({tag + " mean_squared_error",
                     rel_error(a, numeric(targets, [&] { return mean_squared_error(pred, target).loss; }))});
    }
    if (s < 4) {
      // whole networks with dropout, pooling and both heads
      ArchitectureConfig cfg;
      cfg.name = "gradcheck";
      cfg.input_length = 32;
      const bool regression = s % 2 == 1;
      cfg.head = {regression ? Task::regression : Task::classification, 3};
      cfg.layers = {{LayerKind::conv1d, 4, 5, 2, Padding::same},
                    {LayerKind::batchnorm},
                    {LayerKind::relu},
                    {LayerKind::maxpool1d, 0, 3, 2, Padding::same},
                    {LayerKind::residual_basic, 4, 0, 1},
                    {LayerKind::dense, 6},
                    {LayerKind::relu},
                    {LayerKind::dropout, 0, 0, 1, Padding::valid, 0.3},
                    {regression ? LayerKind::linear_head : LayerKind::softmax_head, cfg.head.width()}};
      Network<double> net(cfg, s);
      std::vector<std::size_t> labels{0, 2, 1};
      std::vector<double> targets{95.0, 150.0, 121.0};
      auto loss = [&](const Tensor<double>& out) {
        return regression ? mean_squared_error(out, targets) : softmax_cross_entropy(out, labels);
      };
      add(redraw_until_smooth([&] { return check_network(net, random_tensor({3, 1, 32}, rng), loss, rng); }),
          tag + (regression ? " regression" : " classification"));
    }
  }
  return all;
}

}  // namespace ppgbp::test
