#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "glot/model.hpp"
#include "glot/trainer.hpp"

namespace glot::cli {

inline constexpr const char* kVersion = "0.1.0";
inline constexpr const char* kManifestSchema = "glot.manifest/1";

enum ExitCode : int { ok = 0, usage = 2, data = 3, numeric = 4, internal = 1 };

struct GenDiagnosticOptions {
  std::size_t n_train = 10000;
  std::size_t n_test = 2000;
  std::size_t len = 256;
  double ratio = 0.9;
  std::string mode = "alg2";
  std::uint64_t seed = 42;
  std::size_t dim = 64;
  std::size_t tokens_per_class = 2;
  std::filesystem::path out = "diagnostic";
};

struct GenDiagnosticResult {
  std::size_t train_lines = 0;
  std::size_t test_lines = 0;
  std::size_t truncated_templates = 0;
  std::optional<GeometryCertificate> certificate;
};

GenDiagnosticResult gen_diagnostic(const GenDiagnosticOptions& opt);

/// One training run's inputs. Either `backbone` (token-id datasets) or
/// `cache` (cache-reference datasets) must be set.
struct TrainOptions {
  std::filesystem::path data;
  std::filesystem::path eval_data;
  std::filesystem::path backbone;
  std::filesystem::path cache;
  std::filesystem::path eval_cache;
  std::size_t num_classes = 2;
  ModelSpec model;
  TrainConfig train;
  std::vector<std::string> metrics;
  std::filesystem::path out = "run";
};

nlohmann::ordered_json options_to_json(const TrainOptions& opt);
TrainOptions options_from_json(const nlohmann::json& j);

/// Manifest written before training: resolved options, input digests,
/// output paths, seed and version.
nlohmann::ordered_json make_manifest(const TrainOptions& opt);
/// Options recorded in a manifest; input digests are re-checked.
TrainOptions options_from_manifest(const std::filesystem::path& manifest);

struct LoadedData {
  EncodedDataset train;
  std::optional<EncodedDataset> eval;
};
LoadedData load_training_data(const TrainOptions& opt);

/// Writes manifest.json, params.json, report.json and loss.csv under opt.out.
TrainResult run_train(const TrainOptions& opt);

struct EvalOptions {
  std::filesystem::path params;
  std::filesystem::path data;
  std::filesystem::path backbone;
  std::filesystem::path cache;
  std::vector<std::string> metrics;
  std::size_t eval_batch = 64;
  std::size_t max_seq_len = 128;
  std::filesystem::path weights_out;
};

std::map<std::string, double> run_eval(const EvalOptions& opt);

struct SweepRow {
  double tau = 0.0;
  double metric = 0.0;
  double edge_density = 0.0;
};

/// Retrains the glot pooler once per tau with a fixed seed. Writes
/// sweep.csv (tau,metric,edge_density) under base.out.
std::vector<SweepRow> run_sweep_tau(const TrainOptions& base, const std::vector<double>& grid,
                                    const std::string& metric);

/// Mean non-loop edge density of the sentences' token graphs.
double mean_edge_density(std::span<const Matrix> sentences, const GraphConfig& cfg);

struct BenchOptions {
  std::size_t len = 512;
  std::size_t dim = 768;
  std::size_t repeats = 10;
  std::uint64_t seed = 42;
  GraphConfig graph;
  GnnConfig gnn;
  std::size_t readout_hidden = 128;
};

struct Timing {
  double mean_ms = 0.0;
  double std_ms = 0.0;
};

struct BenchResult {
  Timing graph;
  Timing forward;
  double overhead_percent = 0.0;
  /// Sentence embedding of the benchmark input; identical across repeats.
  Matrix embedding;
};

BenchResult run_bench(const BenchOptions& opt);
nlohmann::ordered_json to_json(const BenchResult& r, const BenchOptions& opt);

Timing summarize(std::span<const double> samples_ms);
std::vector<double> parse_grid(const std::string& s);

/// Full command-line entry point; returns the process exit code.
int run(int argc, char** argv);

}  // namespace glot::cli
