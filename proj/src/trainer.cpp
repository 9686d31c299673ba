#include "glot/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>
#include <sstream>

#include <spdlog/spdlog.h>

#include "glot/error.hpp"
#include "glot/random.hpp"

namespace glot {

using nlohmann::ordered_json;

void TrainConfig::validate() const {
  if (epochs == 0) throw InvalidArgument("train: epochs must be >= 1");
  if (train_batch == 0 || eval_batch == 0) throw InvalidArgument("train: batch sizes must be >= 1");
  if (max_seq_len == 0) throw InvalidArgument("train: max_seq_len must be >= 1");
  adam.validate();
}

void EncodedDataset::validate() const {
  if (items.empty()) throw DataError("dataset is empty");
  if (labels.size() != items.size()) throw DataError("dataset: one label per item required");
  const std::size_t s = items.front().size();
  const std::size_t d = dim();
  if (d == 0) throw DataError("dataset: sentences have zero width");
  for (const Matrix& m : sentences) {
    if (m.rows() == 0) throw DataError("dataset: empty sentence");
    if (m.cols() != d) throw DataError("dataset: inconsistent hidden-state width");
  }
  for (const auto& it : items) {
    if (it.size() != s) throw DataError("dataset: items disagree on sentences per item");
    for (std::size_t r : it)
      if (r >= sentences.size())
        throw DataError("dataset: sentence reference " + std::to_string(r) + " outside cache of " +
                        std::to_string(sentences.size()));
  }
  if (task == TaskKind::single || task == TaskKind::pair) {
    for (double l : labels)
      if (l < 0 || l >= static_cast<double>(num_classes) || l != std::floor(l))
        throw DataError("dataset: label outside declared classes");
  }
}

EncodedDataset encode_with_backbone(const LabeledDataset& ds, const ToyBackbone& backbone,
                                    std::size_t num_classes) {
  EncodedDataset out;
  out.task = ds.task;
  out.num_classes = num_classes;
  for (const DatasetItem& it : ds.items) {
    if (it.tokens.empty()) throw DataError("dataset holds cache references, not token ids");
    std::vector<std::size_t> refs;
    for (const auto& side : it.tokens) {
      if (side.empty()) throw DataError("dataset: empty token sequence");
      refs.push_back(out.sentences.size());
      out.sentences.push_back(embed(side, backbone));
    }
    out.items.push_back(std::move(refs));
    out.labels.push_back(it.label);
  }
  out.validate();
  return out;
}

EncodedDataset attach_cache(const LabeledDataset& ds, std::vector<Matrix> cache,
                            std::size_t num_classes, std::size_t max_seq_len) {
  EncodedDataset out;
  out.task = ds.task;
  out.num_classes = num_classes;
  for (Matrix& m : cache)
    if (m.rows() > max_seq_len) m = m.row_block(0, max_seq_len);
  out.sentences = std::move(cache);
  for (const DatasetItem& it : ds.items) {
    if (it.refs.empty()) throw DataError("dataset holds token ids, not cache references");
    out.items.push_back(it.refs);
    out.labels.push_back(it.label);
  }
  out.validate();
  return out;
}

ModelSpec resolve_spec(ModelSpec spec, const EncodedDataset& data) {
  spec.task = data.task;
  spec.num_classes = data.num_classes;
  spec.gnn.input_dim = data.dim();
  spec.sides = data.sides();
  spec.validate();
  return spec;
}

ordered_json to_json(const TrainReport& r) {
  ordered_json j;
  j["schema"] = "glot.train_report/1";
  j["trainable_params"] = r.trainable_params;
  j["steps"] = r.steps;
  j["epoch_loss"] = r.epoch_loss;
  j["batch_ms"] = {{"mean", r.batch_ms_mean}, {"std", r.batch_ms_std}};
  j["metrics"] = r.metrics;
  ordered_json curve = ordered_json::array();
  for (const BatchRecord& b : r.batches)
    curve.push_back({{"epoch", b.epoch}, {"batch", b.batch}, {"loss", b.loss}});
  j["loss_curve"] = std::move(curve);
  return j;
}

void write_loss_csv(const TrainReport& r, std::ostream& os) {
  os << "epoch,batch,step,size,loss\n";
  std::ostringstream line;
  line.precision(17);
  for (const BatchRecord& b : r.batches) {
    line.str("");
    line << b.epoch << ',' << b.batch << ',' << b.step << ',' << b.size << ',' << b.loss << '\n';
    os << line.str();
  }
}

std::vector<std::string> default_metrics(TaskKind task, std::size_t num_classes) {
  switch (task) {
    case TaskKind::regression: return {"spearman"};
    case TaskKind::retrieval: return {"accuracy"};
    default: break;
  }
  if (num_classes == 2) return {"accuracy", "f1", "mcc"};
  return {"accuracy"};
}

namespace {

/// Token graphs of every sentence, built once per dataset.
std::vector<TokenGraph> prepare_graphs(const ModelSpec& spec, const EncodedDataset& data) {
  std::vector<TokenGraph> graphs;
  if (spec.pooler != PoolerKind::glot) return graphs;
  graphs.reserve(data.sentences.size());
  for (const Matrix& s : data.sentences) graphs.push_back(build_token_graph(s, spec.graph));
  return graphs;
}

/// Forward pass of one batch; returns one embedding Var per side.
std::vector<Var> encode_batch(Tape& tape, Model& model, const EncodedDataset& data,
                              const std::vector<TokenGraph>& graphs,
                              std::span<const std::size_t> batch) {
  std::vector<Var> out;
  for (std::size_t side = 0; side < data.sides(); ++side) {
    std::vector<const Matrix*> sents;
    std::vector<const TokenGraph*> gs;
    for (std::size_t i : batch) {
      const std::size_t ref = data.items[i][side];
      sents.push_back(&data.sentences[ref]);
      if (!graphs.empty()) gs.push_back(&graphs[ref]);
    }
    out.push_back(encode(tape, model, sents, gs));
  }
  return out;
}

Var head_input(std::span<const Var> z) { return z.size() == 1 ? z[0] : ad::concat_cols(z); }

Var batch_loss(Tape& tape, Model& model, const EncodedDataset& data,
               const std::vector<TokenGraph>& graphs, std::span<const std::size_t> batch) {
  const std::vector<Var> z = encode_batch(tape, model, data, graphs, batch);
  const ModelSpec& spec = model.spec;
  if (spec.task == TaskKind::retrieval) return symmetric_infonce(z[0], z[1], spec.temperature);
  Var logits = head_logits(head_input(z), tape.param(model.head.w), tape.param(model.head.b));
  if (spec.task == TaskKind::regression) {
    Matrix target(batch.size(), 1);
    for (std::size_t k = 0; k < batch.size(); ++k) target(k, 0) = data.labels[batch[k]];
    return mse_loss(logits, target);
  }
  std::vector<std::size_t> labels;
  for (std::size_t i : batch) labels.push_back(static_cast<std::size_t>(data.labels[i]));
  return cross_entropy_loss(ad::row_softmax(logits), std::move(labels));
}

std::vector<std::vector<std::size_t>> make_batches(std::vector<std::size_t> order, std::size_t size,
                                                   bool contrastive) {
  std::vector<std::vector<std::size_t>> out;
  for (std::size_t b = 0; b < order.size(); b += size) {
    const std::size_t e = std::min(order.size(), b + size);
    out.emplace_back(order.begin() + static_cast<std::ptrdiff_t>(b),
                     order.begin() + static_cast<std::ptrdiff_t>(e));
  }
  // In-batch negatives need two rows; a trailing singleton joins its neighbour.
  if (contrastive && out.size() > 1 && out.back().size() == 1) {
    out[out.size() - 2].push_back(out.back().front());
    out.pop_back();
  }
  return out;
}

std::string parameter_norms(Model& model) {
  std::string s;
  for (const Parameter* p : model.all()) {
    if (!s.empty()) s += ", ";
    s += p->name + "=" + std::to_string(frobenius_norm(p->value));
  }
  return s;
}

}  // namespace

TrainResult train(const ModelSpec& spec_in, const EncodedDataset& data, const TrainConfig& cfg,
                  const EncodedDataset* eval, std::vector<std::string> metrics) {
  cfg.validate();
  data.validate();
  if (data.task == TaskKind::retrieval && data.size() < 2)
    throw DataError("retrieval training needs at least two pairs");
  const ModelSpec spec = resolve_spec(spec_in, data);
  if (metrics.empty()) metrics = default_metrics(spec.task, spec.num_classes);
  for (const std::string& m : metrics)
    if (!is_known_metric(m)) throw InvalidArgument("unknown metric '" + m + "'");
  if (eval) {
    eval->validate();
    if (eval->task != data.task || eval->dim() != data.dim() || eval->sides() != data.sides())
      throw DataError("evaluation data does not match the training data layout");
  }

  TrainResult res{init_model(spec), {}};
  Model& model = res.model;
  const std::vector<Parameter*> trainable = model.trainable();
  std::vector<Parameter*> frozen;
  for (Parameter* p : model.all())
    if (std::find(trainable.begin(), trainable.end(), p) == trainable.end()) frozen.push_back(p);
  for (const Parameter* p : trainable) res.report.trainable_params += p->scalar_count();

  const std::vector<TokenGraph> graphs = prepare_graphs(spec, data);
  std::vector<double> batch_ms;
  std::size_t step = 0;
  for (std::size_t epoch = 0; epoch < cfg.epochs; ++epoch) {
    std::vector<std::size_t> order(data.size());
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (cfg.shuffle) {
      CounterRng rng(cfg.seed, "shuffle", epoch);
      for (std::size_t k = order.size(); k-- > 1;) std::swap(order[k], order[rng.below(k + 1)]);
    }
    double loss_sum = 0.0;
    const auto batches = make_batches(std::move(order), cfg.train_batch,
                                      spec.task == TaskKind::retrieval);
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto t0 = std::chrono::steady_clock::now();
      auto abort = [&](const std::string& what) {
        return NumericError(what + " at epoch " + std::to_string(epoch) + " batch " +
                            std::to_string(b) + " (step " + std::to_string(step) +
                            "); parameter norms: " + parameter_norms(model));
      };
      Tape tape;
      double value = 0.0;
      bool finite = true;
      try {
        Var loss = batch_loss(tape, model, data, graphs, batches[b]);
        value = loss.value()(0, 0);
        finite = std::isfinite(value);
        if (finite) tape.backward(loss);
      } catch (const NumericError& e) {
        throw abort(std::string("non-finite value (") + e.what() + ")");
      }
      if (!finite) throw abort("non-finite loss");
      for (Parameter* p : frozen) p->zero_grad();
      adam_step(trainable, cfg.adam);
      const auto t1 = std::chrono::steady_clock::now();
      batch_ms.push_back(std::chrono::duration<double, std::milli>(t1 - t0).count());
      res.report.batches.push_back({epoch, b, step, batches[b].size(), value});
      loss_sum += value * static_cast<double>(batches[b].size());
      ++step;
    }
    res.report.epoch_loss.push_back(loss_sum / static_cast<double>(data.size()));
    spdlog::debug("epoch {} mean loss {:.6f}", epoch, res.report.epoch_loss.back());
  }
  res.report.steps = step;
  if (!batch_ms.empty()) {
    const double n = static_cast<double>(batch_ms.size());
    const double mean = std::accumulate(batch_ms.begin(), batch_ms.end(), 0.0) / n;
    double var = 0.0;
    for (double t : batch_ms) var += (t - mean) * (t - mean);
    res.report.batch_ms_mean = mean;
    res.report.batch_ms_std = batch_ms.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0;
    if (batch_ms.size() < 10)
      spdlog::warn("batch timing summarises only {} batches", batch_ms.size());
  }
  res.report.metrics = evaluate(model, eval ? *eval : data, metrics, cfg.eval_batch);
  return res;
}

PredictionDump predict(Model& model, const EncodedDataset& data, std::size_t eval_batch) {
  data.validate();
  if (eval_batch == 0) throw InvalidArgument("eval batch must be >= 1");
  const ModelSpec& spec = model.spec;
  if (data.dim() != spec.input_dim() || data.sides() != spec.sides || data.task != spec.task)
    throw DataError("dataset does not match the model (width, sides or task)");
  const std::vector<TokenGraph> graphs = prepare_graphs(spec, data);
  std::vector<std::size_t> order(data.size());
  std::iota(order.begin(), order.end(), std::size_t{0});

  PredictionDump dump;
  for (const auto& batch : make_batches(order, eval_batch, spec.task == TaskKind::retrieval)) {
    Tape tape;
    const std::vector<Var> z = encode_batch(tape, model, data, graphs, batch);
    if (spec.task == TaskKind::retrieval) {
      if (batch.size() < 2) throw DataError("retrieval evaluation needs at least two pairs");
      const Matrix s = matmul_nt(ad::normalize_rows(z[0]).value(), ad::normalize_rows(z[1]).value());
      for (std::size_t i = 0; i < s.rows(); ++i) {
        const auto r = s.row(i);
        dump.predicted.push_back(static_cast<double>(std::max_element(r.begin(), r.end()) - r.begin()));
        dump.gold.push_back(static_cast<double>(i));
      }
      continue;
    }
    const Matrix logits =
        head_logits(head_input(z), tape.param(model.head.w), tape.param(model.head.b)).value();
    for (std::size_t k = 0; k < batch.size(); ++k) {
      const auto r = logits.row(k);
      dump.predicted.push_back(spec.task == TaskKind::regression
                                   ? r[0]
                                   : static_cast<double>(std::max_element(r.begin(), r.end()) - r.begin()));
      dump.gold.push_back(data.labels[batch[k]]);
    }
  }
  return dump;
}

std::map<std::string, double> evaluate(Model& model, const EncodedDataset& data,
                                       std::span<const std::string> metrics,
                                       std::size_t eval_batch) {
  for (const std::string& m : metrics)
    if (!is_known_metric(m)) throw InvalidArgument("unknown metric '" + m + "'");
  const PredictionDump dump = predict(model, data, eval_batch);
  std::map<std::string, double> out;
  for (const std::string& m : metrics) out[m] = compute_metric(m, dump);
  return out;
}

}  // namespace glot
