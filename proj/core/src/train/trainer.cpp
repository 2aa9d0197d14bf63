#include "ppgbp/train/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <numeric>

#include "ppgbp/common/error.hpp"
#include "ppgbp/common/random.hpp"
#include "ppgbp/eval/metrics.hpp"
#include "ppgbp/nn/loss.hpp"

namespace ppgbp::train {

using data::WindowSample;

void TrainConfig::validate() const {
  if (batch_size < 2) throw ConfigError("train: batch_size must be >= 2 (batch normalization)");
  if (patience < 1) throw ConfigError("train: patience must be >= 1");
  if (max_epochs < 1) throw ConfigError("train: max_epochs must be >= 1");
  if (!(lr > 0.0)) throw ConfigError("train: learning rate must be positive");
}

std::string TrainLog::to_text() const {
  std::string out = "# stage=" + stage + " best_epoch=" + std::to_string(best_epoch) + "\n";
  char buf[256];
  for (const auto& e : epochs) {
    std::snprintf(buf, sizeof buf, "epoch=%zu train_loss=%.6f val_loss=%.6f val_acc=%.6f seconds=%.3f\n", e.epoch,
                  e.train_loss, e.val_loss, e.val_accuracy, e.seconds);
    out += buf;
  }
  return out;
}

EarlyStopping::EarlyStopping(std::size_t patience) : patience_(patience) {
  if (patience < 1) throw ConfigError("early stopping: patience must be >= 1");
}

bool EarlyStopping::update(double val_loss) {
  const std::size_t epoch = epoch_++;
  if (best_epoch_ < 0 || val_loss < best_) {
    best_ = val_loss;
    best_epoch_ = static_cast<std::int64_t>(epoch);
    since_best_ = 0;
    return true;
  }
  ++since_best_;
  return false;
}

std::size_t select_best_accuracy(std::span<const double> val_accuracies) {
  if (val_accuracies.empty()) throw ConfigError("select_best_accuracy: no epochs");
  return static_cast<std::size_t>(std::max_element(val_accuracies.begin(), val_accuracies.end()) -
                                  val_accuracies.begin());
}

namespace {

nn::LossResult<float> batch_loss(const nn::Tensor<float>& outputs, std::span<const WindowSample> batch,
                                 nn::Task task, const data::SegmentationScheme& scheme) {
  if (task == nn::Task::classification) {
    std::vector<std::size_t> labels(batch.size());
    for (std::size_t i = 0; i < batch.size(); ++i) labels[i] = data::assign_bin(batch[i].sbp, scheme);
    return nn::softmax_cross_entropy(outputs, labels);
  }
  std::vector<double> targets(batch.size());
  for (std::size_t i = 0; i < batch.size(); ++i) targets[i] = batch[i].sbp;
  return nn::mean_squared_error(outputs, targets);
}

struct SplitScore {
  double loss = 0.0;
  double accuracy = 0.0;
};

SplitScore score(nn::Network<float>& net, std::span<const WindowSample> samples,
                 const data::SegmentationScheme& scheme) {
  const auto task = net.config().head.task;
  const auto outputs = eval::predict_outputs(net, samples);
  const auto pred = eval::predict_bins(outputs, task, scheme);
  const auto truth = eval::true_bins(samples, scheme);
  return {batch_loss(outputs, samples, task, scheme).loss, eval::accuracy(pred, truth)};
}

double train_epoch(nn::Network<float>& net, nn::Adam<float>& opt, std::span<const WindowSample> samples,
                   std::size_t batch_size, const data::SegmentationScheme& scheme, std::uint64_t seed,
                   std::size_t epoch, std::uint64_t& forward_count) {
  std::vector<std::size_t> order(samples.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed, 0x5f, epoch));
  rng.shuffle(order);

  auto params = net.parameters();
  const auto task = net.config().head.task;
  const std::size_t n_batches = samples.size() / batch_size;
  double total = 0.0;
  std::vector<WindowSample> batch(batch_size);
  for (std::size_t b = 0; b < n_batches; ++b) {
    for (std::size_t i = 0; i < batch_size; ++i) batch[i] = samples[order[b * batch_size + i]];
    net.reseed(mix_seed(seed, 0xd0, forward_count++));
    const auto out = net.forward(eval::batch_input(batch), nn::Mode::train);
    auto loss = batch_loss(out, batch, task, scheme);
    if (!std::isfinite(loss.loss))
      throw DivergenceError("training loss became non-finite at epoch " + std::to_string(epoch) + ", batch " +
                            std::to_string(b));
    net.backward(loss.grad);
    opt.step(params);
    total += loss.loss;
  }
  return total / static_cast<double>(n_batches);
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

}  // namespace

TrainResult pretrain(const data::BalancedDataset& dataset, const TrainConfig& config, const EpochCallback& on_epoch) {
  config.validate();
  const auto train = dataset.samples_of(data::Split::train);
  const auto val = dataset.samples_of(data::Split::val);
  if (train.empty() || val.empty()) throw ConfigError("pretrain: train and val splits must be nonempty");
  if (train.size() < config.batch_size)
    throw ConfigError("pretrain: train split has " + std::to_string(train.size()) +
                      " samples, fewer than one batch of " + std::to_string(config.batch_size));

  const auto& scheme = dataset.scheme;
  const auto arch = nn::build_architecture(config.architecture, config.task, scheme.n_bins(), config.profile,
                                           train.front().ppg.size());
  nn::Network<float> net(arch, mix_seed(config.seed, 0x1a));
  nn::Adam<float> opt({config.lr});

  nn::TrainingMeta meta;
  meta.seed = config.seed;
  meta.scheme_name = scheme.name;
  meta.scheme_edges = scheme.edges;
  meta.stage = "pretrain";

  TrainResult result;
  result.log.stage = "pretrain";
  EarlyStopping stopper(config.patience);
  std::uint64_t forward_count = 0;

  for (std::size_t epoch = 0; epoch < config.max_epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_epoch(net, opt, train, config.batch_size, scheme, config.seed, epoch, forward_count);
    const auto s = score(net, val, scheme);
    if (!std::isfinite(s.loss))
      throw DivergenceError("validation loss became non-finite at epoch " + std::to_string(epoch));
    rec.val_loss = s.loss;
    rec.val_accuracy = s.accuracy;
    if (stopper.update(s.loss)) {
      meta.epoch = static_cast<std::int64_t>(epoch);
      meta.best_metric = s.loss;
      meta.forward_count = forward_count;
      result.checkpoint = nn::capture(net, opt, meta);
    }
    rec.seconds = seconds_since(t0);
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
    if (stopper.should_stop()) break;
  }
  result.log.best_epoch = stopper.best_epoch();
  return result;
}

PersonalizationResult personalize(const nn::ModelCheckpoint& pretrained,
                                  std::span<const WindowSample> subject_samples,
                                  const data::SegmentationScheme& scheme, const PersonalizeConfig& config,
                                  const EpochCallback& on_epoch) {
  if (config.epochs < 1) throw ConfigError("personalize: epochs must be >= 1");
  if (!(config.lr > 0.0)) throw ConfigError("personalize: learning rate must be positive");
  eval::check_compatible(pretrained, scheme);

  PersonalizationResult result;
  result.split = data::personalization_split(subject_samples, config.take_every);
  auto gather = [&](const std::vector<std::size_t>& idx) {
    std::vector<WindowSample> out;
    out.reserve(idx.size());
    for (auto i : idx) out.push_back(subject_samples[i]);
    return out;
  };
  const auto finetune = gather(result.split.finetune);
  const auto val = gather(result.split.val);
  const auto test = gather(result.split.test);
  const std::size_t batch_size = std::min(config.batch_size, finetune.size());
  if (batch_size < 2) throw RejectionError("personalize: finetune split needs at least 2 samples");

  auto net = nn::instantiate(pretrained);
  result.pre_accuracy = score(net, test, scheme).accuracy;

  nn::Adam<float> opt({config.lr});
  if (config.resume_optimizer) {
    nn::restore(pretrained, net, &opt);
    opt.options().lr = config.lr;
  }
  nn::TrainingMeta meta = pretrained.meta;
  meta.seed = config.seed;
  meta.stage = "personalize";
  meta.scheme_name = scheme.name;
  meta.scheme_edges = scheme.edges;

  result.log.stage = "personalize";
  std::vector<double> accs;
  std::uint64_t forward_count = 0;
  for (std::size_t epoch = 0; epoch < config.epochs; ++epoch) {
    const auto t0 = std::chrono::steady_clock::now();
    EpochRecord rec;
    rec.epoch = epoch;
    rec.train_loss = train_epoch(net, opt, finetune, batch_size, scheme, config.seed, epoch, forward_count);
    const auto s = score(net, val, scheme);
    if (!std::isfinite(s.loss))
      throw DivergenceError("validation loss became non-finite at epoch " + std::to_string(epoch));
    rec.val_loss = s.loss;
    rec.val_accuracy = s.accuracy;
    accs.push_back(s.accuracy);
    if (select_best_accuracy(accs) == epoch) {
      meta.epoch = static_cast<std::int64_t>(epoch);
      meta.best_metric = s.accuracy;
      meta.forward_count = forward_count;
      result.checkpoint = nn::capture(net, opt, meta);
    }
    rec.seconds = seconds_since(t0);
    result.log.epochs.push_back(rec);
    if (on_epoch) on_epoch(rec);
  }
  result.log.best_epoch = static_cast<std::int64_t>(select_best_accuracy(accs));

  auto best = nn::instantiate(result.checkpoint);
  result.post_accuracy = score(best, test, scheme).accuracy;
  return result;
}

std::vector<std::uint32_t> select_personalization_subjects(std::span<const std::uint32_t> test_subjects,
                                                           std::size_t n, std::uint64_t seed) {
  std::vector<std::uint32_t> pool(test_subjects.begin(), test_subjects.end());
  std::sort(pool.begin(), pool.end());
  pool.erase(std::unique(pool.begin(), pool.end()), pool.end());
  if (pool.size() < n)
    throw ConfigError("personalization needs " + std::to_string(n) + " test subjects, split has " +
                      std::to_string(pool.size()));
  Rng rng(mix_seed(seed, 0x9e));
  rng.shuffle(pool);
  pool.resize(n);
  std::sort(pool.begin(), pool.end());
  return pool;
}

}  // namespace ppgbp::train
