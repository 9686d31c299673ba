#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <optional>
#include <span>
#include <vector>

#include "glot/dataset.hpp"
#include "glot/matrix.hpp"

namespace glot {

struct TemplateToken {
  enum class Kind : std::uint8_t { literal, slot_x, slot_y };
  Kind kind = Kind::literal;
  std::uint32_t id = 0;  // literal token id; unused for slots
};

struct SignalTemplate {
  std::vector<TemplateToken> pattern;
  int label = 0;
};

/// Configuration of the signal-in-distractors generator.
struct DiagnosticSpec {
  std::size_t n_samples = 10000;
  std::size_t seq_len = 256;
  double distractor_ratio = 0.9;
  std::vector<SignalTemplate> templates;
  std::vector<std::uint32_t> distractor_vocab;
  std::vector<std::uint32_t> slot_x_vocab;
  std::vector<std::uint32_t> slot_y_vocab;
  std::uint64_t seed = 42;

  /// floor(seq_len · distractor_ratio).
  std::size_t distractor_count() const;
  std::size_t signal_length() const { return seq_len - distractor_count(); }
  void validate() const;
};

/// Small default vocabulary: literal words, two slot-filler pools and a
/// distractor pool laid out contiguously from id 0.
struct DiagnosticVocabulary {
  std::size_t n_slot_fillers = 32;
  std::size_t n_distractors = 5000;

  std::size_t vocab_size() const;
};

/// Four negation/conjunction templates ("the file has [X] but not [Y]", ...)
/// with balanced labels, ids drawn from `vocab`.
DiagnosticSpec default_diagnostic_spec(const DiagnosticVocabulary& vocab = {});

enum class TokenRole : std::uint8_t { distractor, signal, signal_padding };

struct DiagnosticSample {
  std::vector<std::uint32_t> tokens;
  std::vector<TokenRole> roles;
  int label = 0;
  std::size_t injection_pos = 0;
  double distractor_ratio = 0.0;
};

struct DiagnosticDataset {
  std::vector<DiagnosticSample> samples;
  /// Samples whose instantiated template exceeded the signal block.
  std::size_t truncated_templates = 0;
};

DiagnosticDataset generate_diagnostic(const DiagnosticSpec& spec);

// ---------------------------------------------------------------------------
// Frozen toy backbone

struct PlantedGeometryConfig {
  std::size_t dim = 64;
  std::size_t n_signal = 8;
  std::size_t n_classes = 2;
  std::size_t n_distractor = 512;
  double tau_lo = 0.45;
  double tau_hi = 0.65;
  /// Cosine between class directions.
  double class_cosine = 0.70;
  /// Norm of the per-token perturbation added to its class direction.
  double perturbation = 0.05;
  std::uint64_t seed = 42;
  std::size_t max_retries = 10000;
};

struct GeometryCertificate {
  double min_signal_cosine = 0.0;
  double max_signal_distractor_cosine = 0.0;
  double max_distractor_cosine = 0.0;
  double tau_lo = 0.0;
  double tau_hi = 0.0;

  bool holds() const noexcept {
    return min_signal_cosine > tau_hi && max_signal_distractor_cosine < tau_lo &&
           max_distractor_cosine < tau_lo;
  }
};

struct ToyBackbone {
  Matrix table;  // vocab × d, frozen
  /// Signal class of each token id, -1 for distractors.
  std::vector<int> token_class;
  std::optional<PlantedGeometryConfig> planted;
  GeometryCertificate certificate;

  std::size_t vocab_size() const noexcept { return table.rows(); }
  std::size_t dim() const noexcept { return table.cols(); }
  std::vector<std::uint32_t> ids_of_class(int c) const;
};

/// Gaussian unit rows, no planted structure.
ToyBackbone random_backbone(std::size_t vocab_size, std::size_t dim, std::uint64_t seed);

/// Signal tokens are perturbations of per-class directions sharing a common
/// component; distractors are rejection-sampled unit vectors. The returned
/// certificate has been checked exhaustively.
ToyBackbone build_planted_geometry(const PlantedGeometryConfig& cfg);

/// Brute-force all-pairs cosine check over the table.
GeometryCertificate certify_geometry(const Matrix& table, std::span<const int> token_class,
                                     double tau_lo, double tau_hi);

/// Row i = table[ids[i]].
Matrix embed(std::span<const std::uint32_t> ids, const ToyBackbone& backbone);

struct RelationalXorSpec {
  std::size_t n_samples = 2000;
  std::size_t seq_len = 64;
  double distractor_ratio = 0.9;
  /// Signal tokens contributed by each present class.
  std::size_t tokens_per_class = 2;
  std::uint64_t seed = 42;

  std::size_t distractor_count() const;
};

enum class XorCase : std::uint8_t { neither, a_only, b_only, both };

/// Label 1 iff exactly one of the two signal classes occurs. Cases are drawn
/// uniformly, so labels are balanced in expectation. All distractors within
/// one sequence are distinct ids.
DiagnosticDataset generate_relational_xor(const RelationalXorSpec& spec,
                                          const ToyBackbone& backbone,
                                          std::vector<XorCase>* cases_out = nullptr);

/// {"tokens":[...],"label":l,"meta":{"injection_pos":p,"d_r":r}} per line.
void write_diagnostic_jsonl(const DiagnosticDataset& ds, std::ostream& os);
void write_diagnostic_jsonl(const DiagnosticDataset& ds, const std::filesystem::path& path);

LabeledDataset to_labeled_dataset(const DiagnosticDataset& ds);

}  // namespace glot
