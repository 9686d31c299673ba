#pragma once

#include <cstdint>
#include <span>
#include <string_view>
#include <vector>

#include <nlohmann/json.hpp>

#include "glot/dataset.hpp"
#include "glot/graph.hpp"
#include "glot/heads.hpp"
#include "glot/pooling.hpp"

namespace glot {

enum class PoolerKind { glot, mean, max, boundary_first, boundary_last, adapool };

std::string_view to_string(PoolerKind k);
/// Accepts glot|mean|max|boundary|cls|first|last|adapool ("boundary" = last).
PoolerKind parse_pooler(std::string_view s);

struct ModelSpec {
  PoolerKind pooler = PoolerKind::glot;
  GraphConfig graph;
  /// gnn.input_dim is the hidden-state width d of the data.
  GnnConfig gnn;
  std::size_t readout_hidden = 128;
  std::size_t adapool_hidden = 128;
  TaskKind task = TaskKind::single;
  std::size_t num_classes = 2;
  /// Sentences per item: 1 for single, 2 for pair and retrieval, either
  /// for regression.
  std::size_t sides = 1;
  /// Readout held at v = 0 (uniform weights) and excluded from training.
  bool freeze_readout = false;
  /// W_in held at the identity; requires hidden_dim == input_dim.
  bool identity_input = false;
  double temperature = 0.07;
  std::uint64_t seed = 42;

  std::size_t input_dim() const noexcept { return gnn.input_dim; }
  /// Width of the sentence embedding z.
  std::size_t embedding_dim() const noexcept;
  bool has_head() const noexcept { return task != TaskKind::retrieval; }
  std::size_t head_inputs() const noexcept;
  std::size_t head_outputs() const noexcept;
  void validate() const;
};

nlohmann::ordered_json to_json(const ModelSpec& spec);
/// `check` runs validate(); unresolved specs (input_dim 0) need it off.
ModelSpec model_spec_from_json(const nlohmann::json& j, bool check = true);

struct Model {
  ModelSpec spec;
  GlotParams glot;
  AdaPoolParams adapool;
  HeadParams head;

  /// Parameters the optimizer updates, in a fixed order.
  std::vector<Parameter*> trainable();
  /// Every parameter that exists for the spec, frozen ones included.
  std::vector<Parameter*> all();
};

Model init_model(const ModelSpec& spec);

/// Exact number of trainable scalars.
std::size_t count_trainable_params(const ModelSpec& spec);

/// Sentence embeddings for the given sentences (each holding only valid
/// rows). `graphs` must hold the matching prebuilt token graphs for the
/// glot pooler and may be empty otherwise.
Var encode(Tape& tape, Model& model, std::span<const Matrix* const> sentences,
           std::span<const TokenGraph* const> graphs);

nlohmann::ordered_json params_to_json(Model& model);
Model model_from_json(const nlohmann::json& j);

}  // namespace glot
