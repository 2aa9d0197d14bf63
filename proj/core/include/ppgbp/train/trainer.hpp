#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "ppgbp/data/dataset.hpp"
#include "ppgbp/nn/checkpoint.hpp"

namespace ppgbp::train {

struct TrainConfig {
  nn::Task task = nn::Task::classification;
  std::string architecture = "resnet18";
  nn::Profile profile = nn::Profile::desk;
  double lr = 0.001;
  std::size_t batch_size = 128;
  std::size_t patience = 10;
  std::size_t max_epochs = 200;
  std::uint64_t seed = 0;

  /// Throws ConfigError on batch_size < 2, patience < 1, max_epochs < 1 or lr <= 0.
  void validate() const;
};

struct EpochRecord {
  std::size_t epoch = 0;
  double train_loss = 0.0;
  double val_loss = 0.0;
  double val_accuracy = 0.0;
  double seconds = 0.0;
};

struct TrainLog {
  std::string stage;
  std::vector<EpochRecord> epochs;
  std::int64_t best_epoch = -1;

  /// One `epoch=.. train_loss=.. val_loss=.. val_acc=.. seconds=..` line per epoch.
  std::string to_text() const;
};

/// Tracks the lowest validation loss. Improvement means strictly lower.
class EarlyStopping {
 public:
  explicit EarlyStopping(std::size_t patience);

  /// Feeds the next epoch's loss; returns true when it is a new best.
  bool update(double val_loss);
  bool should_stop() const { return since_best_ >= patience_; }
  std::int64_t best_epoch() const { return best_epoch_; }
  double best_value() const { return best_; }

 private:
  std::size_t patience_;
  std::size_t epoch_ = 0;
  std::size_t since_best_ = 0;
  std::int64_t best_epoch_ = -1;
  double best_ = 0.0;
};

/// Index of the first maximum (personalization model selection).
std::size_t select_best_accuracy(std::span<const double> val_accuracies);

using EpochCallback = std::function<void(const EpochRecord&)>;

struct TrainResult {
  nn::ModelCheckpoint checkpoint;
  TrainLog log;
};

/// Trains from a Glorot init on the train split with early stopping on the val
/// split. Throws DivergenceError on a non-finite loss.
TrainResult pretrain(const data::BalancedDataset& dataset, const TrainConfig& config,
                     const EpochCallback& on_epoch = {});

struct PersonalizeConfig {
  std::size_t take_every = 10;
  std::size_t epochs = 100;
  double lr = 0.001;
  std::size_t batch_size = 128;
  std::uint64_t seed = 0;
  /// Continue from the pretrained Adam moments instead of a fresh optimizer.
  bool resume_optimizer = true;
};

struct PersonalizationResult {
  nn::ModelCheckpoint checkpoint;
  TrainLog log;
  data::PersonalizationSplit split;
  double pre_accuracy = 0.0;   // pretrained model on the personalization test half
  double post_accuracy = 0.0;  // personalized model on the same half
};

/// Fine-tunes every parameter on the subject's finetune split for exactly
/// `epochs` epochs and keeps the epoch with the best validation accuracy.
/// The batch size is capped at the finetune set size.
PersonalizationResult personalize(const nn::ModelCheckpoint& pretrained,
                                  std::span<const data::WindowSample> subject_samples,
                                  const data::SegmentationScheme& scheme, const PersonalizeConfig& config,
                                  const EpochCallback& on_epoch = {});

/// Seeded draw of n distinct subjects, returned in ascending order.
std::vector<std::uint32_t> select_personalization_subjects(std::span<const std::uint32_t> test_subjects,
                                                           std::size_t n, std::uint64_t seed);

}  // namespace ppgbp::train
