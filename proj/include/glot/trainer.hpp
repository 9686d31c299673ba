#pragma once

#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glot/dataset.hpp"
#include "glot/diagnostic.hpp"
#include "glot/metrics.hpp"
#include "glot/model.hpp"
#include "glot/optim.hpp"

namespace glot {

struct TrainConfig {
  std::size_t epochs = 2;
  std::size_t train_batch = 32;
  std::size_t eval_batch = 64;
  std::uint64_t seed = 42;
  AdamConfig adam;
  std::size_t max_seq_len = 128;
  bool shuffle = true;

  void validate() const;
};

/// Items resolved to in-memory hidden states. Sentences hold valid rows
/// only; items reference them by index.
struct EncodedDataset {
  TaskKind task = TaskKind::single;
  std::size_t num_classes = 2;
  std::vector<Matrix> sentences;
  std::vector<std::vector<std::size_t>> items;
  std::vector<double> labels;

  std::size_t size() const noexcept { return items.size(); }
  std::size_t dim() const noexcept { return sentences.empty() ? 0 : sentences.front().cols(); }
  std::size_t sides() const noexcept { return items.empty() ? 0 : items.front().size(); }
  void validate() const;
};

/// Each token side becomes one sentence embedded through the backbone.
EncodedDataset encode_with_backbone(const LabeledDataset& ds, const ToyBackbone& backbone,
                                    std::size_t num_classes);
/// Items reference cached sentences; sentences longer than max_seq_len are
/// cut to their first max_seq_len rows.
EncodedDataset attach_cache(const LabeledDataset& ds, std::vector<Matrix> cache,
                            std::size_t num_classes, std::size_t max_seq_len = 128);

/// Fills the data-dependent fields (input dimension, sides) of a spec.
ModelSpec resolve_spec(ModelSpec spec, const EncodedDataset& data);

struct BatchRecord {
  std::size_t epoch = 0;
  std::size_t batch = 0;
  std::size_t step = 0;
  std::size_t size = 0;
  double loss = 0.0;
};

struct TrainReport {
  std::vector<BatchRecord> batches;
  /// Size-weighted mean loss per epoch.
  std::vector<double> epoch_loss;
  double batch_ms_mean = 0.0;
  double batch_ms_std = 0.0;
  std::map<std::string, double> metrics;
  std::size_t trainable_params = 0;
  std::size_t steps = 0;
};

nlohmann::ordered_json to_json(const TrainReport& r);
/// "epoch,batch,step,size,loss" rows.
void write_loss_csv(const TrainReport& r, std::ostream& os);

struct TrainResult {
  Model model;
  TrainReport report;
};

std::vector<std::string> default_metrics(TaskKind task, std::size_t num_classes);

/// Mini-batch Adam training. Final metrics are computed on `eval` when
/// given, otherwise on the training set.
TrainResult train(const ModelSpec& spec, const EncodedDataset& data, const TrainConfig& cfg,
                  const EncodedDataset* eval = nullptr, std::vector<std::string> metrics = {});

/// Metric values on `data`; retrieval scores in-batch top-1 accuracy.
std::map<std::string, double> evaluate(Model& model, const EncodedDataset& data,
                                       std::span<const std::string> metrics,
                                       std::size_t eval_batch = 64);

/// Predicted class ids (or scores for regression) and gold labels.
PredictionDump predict(Model& model, const EncodedDataset& data, std::size_t eval_batch = 64);

}  // namespace glot
