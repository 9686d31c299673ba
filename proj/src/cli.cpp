#include "glot/cli.hpp"

#include <chrono>
#include <cmath>
#include <cstdlib>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <numeric>
#include <sstream>

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include "glot/cache.hpp"
#include "glot/diagnostic.hpp"
#include "glot/error.hpp"
#include "glot/random.hpp"

namespace glot::cli {

namespace fs = std::filesystem;
using nlohmann::json;
using nlohmann::ordered_json;

namespace {

void ensure_dir(const fs::path& dir) {
  std::error_code ec;
  fs::create_directories(dir, ec);
  if (ec) throw DataError("cannot create directory '" + dir.string() + "': " + ec.message());
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw DataError("cannot write '" + path.string() + "'");
  return out;
}

void write_json(const fs::path& path, const ordered_json& j) {
  auto out = open_out(path);
  out << j.dump(2) << '\n';
}

json read_json(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open '" + path.string() + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw DataError(path.string() + ": " + e.what());
  }
}

std::string hex64(std::uint64_t v) {
  std::ostringstream s;
  s << std::hex << std::setw(16) << std::setfill('0') << v;
  return s.str();
}

ordered_json certificate_json(const GeometryCertificate& c) {
  return {{"min_signal_cosine", c.min_signal_cosine},
          {"max_signal_distractor_cosine", c.max_signal_distractor_cosine},
          {"max_distractor_cosine", c.max_distractor_cosine},
          {"tau_lo", c.tau_lo},
          {"tau_hi", c.tau_hi},
          {"holds", c.holds()}};
}

DiagnosticDataset slice(const DiagnosticDataset& ds, std::size_t begin, std::size_t end) {
  DiagnosticDataset out;
  out.samples.assign(ds.samples.begin() + static_cast<std::ptrdiff_t>(begin),
                     ds.samples.begin() + static_cast<std::ptrdiff_t>(end));
  return out;
}

ToyBackbone load_backbone(const fs::path& path) {
  EmbeddingCache c = read_cache(path);
  if (c.sentences.size() != 1)
    throw DataError("backbone file '" + path.string() + "' must hold exactly one table");
  ToyBackbone b;
  b.table = std::move(c.sentences.front());
  b.token_class.assign(b.table.rows(), -1);
  return b;
}

std::size_t label_classes(TaskKind task, std::size_t num_classes) {
  return task == TaskKind::single || task == TaskKind::pair ? num_classes : 0;
}

EncodedDataset load_encoded(const fs::path& data, const fs::path& backbone, const fs::path& cache,
                            TaskKind task, std::size_t num_classes, std::size_t max_seq_len) {
  if (backbone.empty() == cache.empty())
    throw InvalidArgument("exactly one of --backbone or --cache is required");
  LabeledDataset ds = load_jsonl_dataset(data, task, max_seq_len, label_classes(task, num_classes));
  if (ds.truncated > 0)
    spdlog::warn("{}: truncated {} sequences to {} tokens", data.string(), ds.truncated, max_seq_len);
  if (!backbone.empty()) return encode_with_backbone(ds, load_backbone(backbone), num_classes);
  return attach_cache(ds, read_cache(cache).sentences, num_classes, max_seq_len);
}

}  // namespace

// --------------------------------------------------------------------------- gen-diagnostic

GenDiagnosticResult gen_diagnostic(const GenDiagnosticOptions& opt) {
  if (!(opt.ratio > 0.0 && opt.ratio < 1.0))
    throw InvalidArgument("--ratio must lie strictly between 0 and 1");
  if (opt.n_train == 0) throw InvalidArgument("--n must be >= 1");
  if (opt.len == 0) throw InvalidArgument("--len must be >= 1");

  GenDiagnosticResult res;
  DiagnosticDataset all;
  ToyBackbone backbone;
  const std::size_t total = opt.n_train + opt.n_test;
  if (opt.mode == "alg2") {
    const DiagnosticVocabulary vocab;
    DiagnosticSpec spec = default_diagnostic_spec(vocab);
    spec.n_samples = total;
    spec.seq_len = opt.len;
    spec.distractor_ratio = opt.ratio;
    spec.seed = opt.seed;
    all = generate_diagnostic(spec);
    backbone = random_backbone(vocab.vocab_size(), opt.dim, opt.seed);
    res.truncated_templates = all.truncated_templates;
    if (all.truncated_templates > 0)
      spdlog::warn("{} templates were longer than the {}-token signal block and were truncated",
                   all.truncated_templates, spec.signal_length());
  } else if (opt.mode == "xor") {
    PlantedGeometryConfig pg;
    pg.dim = opt.dim;
    pg.seed = opt.seed;
    backbone = build_planted_geometry(pg);
    RelationalXorSpec xs;
    xs.n_samples = total;
    xs.seq_len = opt.len;
    xs.distractor_ratio = opt.ratio;
    xs.tokens_per_class = opt.tokens_per_class;
    xs.seed = opt.seed;
    all = generate_relational_xor(xs, backbone);
  } else {
    throw InvalidArgument("--mode must be alg2 or xor");
  }

  ensure_dir(opt.out);
  write_diagnostic_jsonl(slice(all, 0, opt.n_train), opt.out / "train.jsonl");
  write_diagnostic_jsonl(slice(all, opt.n_train, total), opt.out / "test.jsonl");
  res.train_lines = opt.n_train;
  res.test_lines = opt.n_test;

  const fs::path table_path = opt.out / "backbone.gec";
  write_cache(std::span<const Matrix>(&backbone.table, 1), table_path);
  if (backbone.planted) {
    // Certify what training will read: the float32 table on disk.
    const ToyBackbone stored = load_backbone(table_path);
    const GeometryCertificate cert = certify_geometry(stored.table, backbone.token_class,
                                                      backbone.planted->tau_lo, backbone.planted->tau_hi);
    if (!cert.holds()) throw InvalidArgument("planted geometry does not survive float32 storage");
    res.certificate = cert;
    ordered_json classes = ordered_json::object();
    classes["A"] = backbone.ids_of_class(0);
    classes["B"] = backbone.ids_of_class(1);
    ordered_json j{{"schema", "glot.certificate/1"},
                   {"dim", backbone.dim()},
                   {"vocab_size", backbone.vocab_size()},
                   {"signal_ids", classes},
                   {"class_cosine", backbone.planted->class_cosine},
                   {"perturbation", backbone.planted->perturbation},
                   {"seed", backbone.planted->seed},
                   {"certificate", certificate_json(cert)}};
    write_json(opt.out / "certificate.json", j);
  }
  return res;
}

// --------------------------------------------------------------------------- options / manifest

ordered_json options_to_json(const TrainOptions& opt) {
  const TrainConfig& t = opt.train;
  return {{"data", opt.data.string()},
          {"eval_data", opt.eval_data.string()},
          {"backbone", opt.backbone.string()},
          {"cache", opt.cache.string()},
          {"eval_cache", opt.eval_cache.string()},
          {"num_classes", opt.num_classes},
          {"model", to_json(opt.model)},
          {"train",
           {{"epochs", t.epochs},
            {"train_batch", t.train_batch},
            {"eval_batch", t.eval_batch},
            {"seed", t.seed},
            {"max_seq_len", t.max_seq_len},
            {"shuffle", t.shuffle},
            {"adam",
             {{"learning_rate", t.adam.learning_rate},
              {"beta1", t.adam.beta1},
              {"beta2", t.adam.beta2},
              {"epsilon", t.adam.epsilon},
              {"weight_decay", t.adam.weight_decay}}}}},
          {"metrics", opt.metrics},
          {"out", opt.out.string()}};
}

TrainOptions options_from_json(const json& j) {
  try {
    TrainOptions o;
    o.data = j.at("data").get<std::string>();
    o.eval_data = j.at("eval_data").get<std::string>();
    o.backbone = j.at("backbone").get<std::string>();
    o.cache = j.at("cache").get<std::string>();
    o.eval_cache = j.at("eval_cache").get<std::string>();
    o.num_classes = j.at("num_classes").get<std::size_t>();
    o.model = model_spec_from_json(j.at("model"), false);
    const json& t = j.at("train");
    o.train.epochs = t.at("epochs").get<std::size_t>();
    o.train.train_batch = t.at("train_batch").get<std::size_t>();
    o.train.eval_batch = t.at("eval_batch").get<std::size_t>();
    o.train.seed = t.at("seed").get<std::uint64_t>();
    o.train.max_seq_len = t.at("max_seq_len").get<std::size_t>();
    o.train.shuffle = t.at("shuffle").get<bool>();
    const json& a = t.at("adam");
    o.train.adam.learning_rate = a.at("learning_rate").get<double>();
    o.train.adam.beta1 = a.at("beta1").get<double>();
    o.train.adam.beta2 = a.at("beta2").get<double>();
    o.train.adam.epsilon = a.at("epsilon").get<double>();
    o.train.adam.weight_decay = a.at("weight_decay").get<double>();
    o.metrics = j.at("metrics").get<std::vector<std::string>>();
    o.out = j.at("out").get<std::string>();
    return o;
  } catch (const json::exception& e) {
    throw DataError(std::string("options: ") + e.what());
  }
}

namespace {

std::vector<fs::path> input_files(const TrainOptions& o) {
  std::vector<fs::path> in;
  for (const fs::path& p : {o.data, o.eval_data, o.backbone, o.cache, o.eval_cache})
    if (!p.empty()) in.push_back(p);
  return in;
}

}  // namespace

ordered_json make_manifest(const TrainOptions& opt) {
  ordered_json inputs = ordered_json::array();
  for (const fs::path& p : input_files(opt))
    inputs.push_back({{"path", p.string()}, {"fnv1a64", hex64(file_digest(p))}});
  return {{"schema", kManifestSchema},
          {"version", kVersion},
          {"command", "train"},
          {"seed", opt.train.seed},
          {"options", options_to_json(opt)},
          {"inputs", inputs},
          {"outputs",
           {{"manifest", (opt.out / "manifest.json").string()},
            {"params", (opt.out / "params.json").string()},
            {"report", (opt.out / "report.json").string()},
            {"loss_curve", (opt.out / "loss.csv").string()}}}};
}

TrainOptions options_from_manifest(const fs::path& manifest) {
  const json j = read_json(manifest);
  if (!j.contains("schema") || j["schema"] != kManifestSchema)
    throw DataError(manifest.string() + ": not a " + kManifestSchema + " manifest");
  TrainOptions o = options_from_json(j.at("options"));
  for (const json& in : j.at("inputs")) {
    const fs::path p = in.at("path").get<std::string>();
    const std::string want = in.at("fnv1a64").get<std::string>();
    const std::string got = hex64(file_digest(p));
    if (got != want)
      throw DataError("input '" + p.string() + "' changed since the manifest was written (digest " +
                      got + ", recorded " + want + ")");
  }
  return o;
}

LoadedData load_training_data(const TrainOptions& opt) {
  const TaskKind task = opt.model.task;
  LoadedData d{load_encoded(opt.data, opt.backbone, opt.cache, task, opt.num_classes,
                            opt.train.max_seq_len),
               std::nullopt};
  if (!opt.eval_data.empty()) {
    const fs::path cache = opt.eval_cache.empty() ? opt.cache : opt.eval_cache;
    d.eval = load_encoded(opt.eval_data, opt.backbone, cache, task, opt.num_classes,
                          opt.train.max_seq_len);
  }
  return d;
}

// --------------------------------------------------------------------------- train

TrainResult run_train(const TrainOptions& opt_in) {
  TrainOptions opt = opt_in;
  opt.model.seed = opt.train.seed;
  const LoadedData data = load_training_data(opt);
  opt.model = resolve_spec(opt.model, data.train);
  if (opt.metrics.empty()) opt.metrics = default_metrics(opt.model.task, opt.model.num_classes);
  for (const std::string& m : opt.metrics)
    if (!is_known_metric(m)) throw InvalidArgument("unknown metric '" + m + "'");
  opt.train.validate();

  ensure_dir(opt.out);
  write_json(opt.out / "manifest.json", make_manifest(opt));

  TrainResult res = train(opt.model, data.train, opt.train, data.eval ? &*data.eval : nullptr,
                          opt.metrics);
  {
    auto out = open_out(opt.out / "params.json");
    out << params_to_json(res.model).dump() << '\n';
  }
  write_json(opt.out / "report.json", to_json(res.report));
  auto csv = open_out(opt.out / "loss.csv");
  write_loss_csv(res.report, csv);
  return res;
}

// --------------------------------------------------------------------------- eval

std::map<std::string, double> run_eval(const EvalOptions& opt) {
  Model model = model_from_json(read_json(opt.params));
  const ModelSpec& spec = model.spec;
  std::vector<std::string> metrics = opt.metrics;
  if (metrics.empty()) metrics = default_metrics(spec.task, spec.num_classes);
  for (const std::string& m : metrics)
    if (!is_known_metric(m)) throw InvalidArgument("unknown metric '" + m + "'");
  const EncodedDataset data =
      load_encoded(opt.data, opt.backbone, opt.cache, spec.task, spec.num_classes, opt.max_seq_len);
  auto result = evaluate(model, data, metrics, opt.eval_batch);

  if (!opt.weights_out.empty()) {
    if (spec.pooler != PoolerKind::glot)
      throw InvalidArgument("--weights-out needs a glot model");
    auto out = open_out(opt.weights_out);
    out << "sentence,token_index,weight\n";
    out.precision(17);
    for (std::size_t b = 0; b < data.sentences.size(); b += opt.eval_batch) {
      const std::size_t e = std::min(data.sentences.size(), b + opt.eval_batch);
      const std::span<const Matrix> chunk(data.sentences.data() + b, e - b);
      const GlotOutput g = glot_pool(chunk, {}, spec.graph, spec.gnn, model.glot);
      for (std::size_t s = 0; s < g.token_weights.size(); ++s)
        for (std::size_t i = 0; i < g.token_weights[s].size(); ++i)
          out << b + s << ',' << i << ',' << g.token_weights[s][i] << '\n';
    }
  }
  return result;
}

// --------------------------------------------------------------------------- sweep-tau

double mean_edge_density(std::span<const Matrix> sentences, const GraphConfig& cfg) {
  if (sentences.empty()) throw InvalidArgument("edge density of an empty dataset");
  double sum = 0.0;
  for (const Matrix& s : sentences) sum += edge_density(build_token_graph(s, cfg)).front();
  return sum / static_cast<double>(sentences.size());
}

std::vector<SweepRow> run_sweep_tau(const TrainOptions& base, const std::vector<double>& grid,
                                    const std::string& metric) {
  if (grid.empty()) throw InvalidArgument("--grid is empty");
  if (base.model.pooler != PoolerKind::glot) throw InvalidArgument("sweep-tau needs --pooler glot");
  if (!is_known_metric(metric)) throw InvalidArgument("unknown metric '" + metric + "'");
  TrainOptions opt = base;
  opt.model.seed = opt.train.seed;
  const LoadedData data = load_training_data(opt);
  const ModelSpec resolved = resolve_spec(opt.model, data.train);

  std::vector<SweepRow> rows;
  for (double tau : grid) {
    ModelSpec spec = resolved;
    spec.graph.tau = tau;
    spec.validate();
    TrainResult r = train(spec, data.train, opt.train, data.eval ? &*data.eval : nullptr, {metric});
    rows.push_back({tau, r.report.metrics.at(metric), mean_edge_density(data.train.sentences, spec.graph)});
    spdlog::info("tau={} {}={:.4f} edge_density={:.6f}", tau, metric, rows.back().metric,
                 rows.back().edge_density);
  }
  ensure_dir(opt.out);
  auto out = open_out(opt.out / "sweep.csv");
  out << "tau," << metric << ",edge_density\n";
  out.precision(17);
  for (const SweepRow& r : rows) out << r.tau << ',' << r.metric << ',' << r.edge_density << '\n';
  return rows;
}

std::vector<double> parse_grid(const std::string& s) {
  std::vector<double> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (item.find_first_not_of(" \t") == std::string::npos) continue;
    std::size_t used = 0;
    double v = 0.0;
    try {
      v = std::stod(item, &used);
    } catch (const std::exception&) {
      throw InvalidArgument("--grid: '" + item + "' is not a number");
    }
    if (item.find_first_not_of(" \t", used) != std::string::npos)
      throw InvalidArgument("--grid: '" + item + "' is not a number");
    out.push_back(v);
  }
  if (out.empty()) throw InvalidArgument("--grid is empty");
  return out;
}

// --------------------------------------------------------------------------- bench

Timing summarize(std::span<const double> samples_ms) {
  if (samples_ms.empty()) return {};
  const double n = static_cast<double>(samples_ms.size());
  const double mean = std::accumulate(samples_ms.begin(), samples_ms.end(), 0.0) / n;
  double var = 0.0;
  for (double t : samples_ms) var += (t - mean) * (t - mean);
  return {mean, samples_ms.size() > 1 ? std::sqrt(var / (n - 1.0)) : 0.0};
}

BenchResult run_bench(const BenchOptions& opt) {
  if (opt.len == 0 || opt.dim == 0) throw InvalidArgument("--len and --dim must be >= 1");
  if (opt.repeats == 0) throw InvalidArgument("--repeats must be >= 1");
  CounterRng rng(opt.seed, "bench");
  Matrix states(opt.len, opt.dim);
  for (double& v : states.data()) v = rng.normal();

  GnnConfig gnn = opt.gnn;
  gnn.input_dim = opt.dim;
  GlotParams params = init_glot_params(gnn, opt.readout_hidden, opt.seed);

  using clock = std::chrono::steady_clock;
  auto ms_since = [](clock::time_point t0) {
    return std::chrono::duration<double, std::milli>(clock::now() - t0).count();
  };
  // Warm-up pass, not timed.
  BenchResult res;
  res.embedding = glot_pool(std::span<const Matrix>(&states, 1), {}, opt.graph, gnn, params).embeddings;

  std::vector<double> graph_ms, forward_ms;
  for (std::size_t r = 0; r < opt.repeats; ++r) {
    auto t0 = clock::now();
    const TokenGraph g = build_token_graph(states, opt.graph);
    graph_ms.push_back(ms_since(t0));
    if (g.num_nodes() != opt.len) throw Error("bench: graph lost nodes");

    t0 = clock::now();
    const GlotOutput out = glot_pool(std::span<const Matrix>(&states, 1), {}, opt.graph, gnn, params);
    forward_ms.push_back(ms_since(t0));
    if (!(out.embeddings == res.embedding)) throw Error("bench: forward pass is not deterministic");
  }
  res.graph = summarize(graph_ms);
  res.forward = summarize(forward_ms);
  res.overhead_percent = res.forward.mean_ms > 0.0 ? 100.0 * res.graph.mean_ms / res.forward.mean_ms : 0.0;
  return res;
}

ordered_json to_json(const BenchResult& r, const BenchOptions& opt) {
  return {{"schema", "glot.bench/1"},
          {"len", opt.len},
          {"dim", opt.dim},
          {"repeats", opt.repeats},
          {"tau", opt.graph.tau},
          {"graph_construction_ms", {{"mean", r.graph.mean_ms}, {"std", r.graph.std_ms}}},
          {"glot_forward_ms", {{"mean", r.forward.mean_ms}, {"std", r.forward.std_ms}}},
          {"overhead_percent", r.overhead_percent}};
}

// --------------------------------------------------------------------------- entry point

namespace {

/// String-valued flags resolved after parsing.
struct ModelFlags {
  std::string pooler = "glot";
  std::string variant = "gat";
  std::string jk = "cat";
  std::string aggregate = "mean";
  std::string task = "single";
  std::string metrics;
  bool no_shuffle = false;
};

void add_model_flags(CLI::App* cmd, TrainOptions& o, ModelFlags& f) {
  cmd->add_option("--data", o.data, "Training JSONL")->required();
  cmd->add_option("--eval-data", o.eval_data, "Evaluation JSONL");
  cmd->add_option("--backbone", o.backbone, "Token embedding table (GEC1) for token-id datasets");
  cmd->add_option("--cache", o.cache, "Hidden-state cache (GEC1) for reference datasets");
  cmd->add_option("--eval-cache", o.eval_cache, "Cache for --eval-data (default: --cache)");
  cmd->add_option("--task", f.task, "single|pair|regression|retrieval")->capture_default_str();
  cmd->add_option("--num-classes", o.num_classes, "Classes for classification tasks")->capture_default_str();
  cmd->add_option("--pooler", f.pooler, "glot|mean|max|boundary|cls|adapool")->capture_default_str();
  cmd->add_option("--variant", f.variant, "gat|gcn|gin|sage")->capture_default_str();
  cmd->add_option("--tau", o.model.graph.tau, "Cosine edge threshold")->capture_default_str();
  cmd->add_option("--layers", o.model.gnn.num_layers, "GNN layers K")->capture_default_str();
  cmd->add_option("--hidden", o.model.gnn.hidden_dim, "GNN hidden width p")->capture_default_str();
  cmd->add_option("--jk", f.jk, "cat|max|mean")->capture_default_str();
  cmd->add_option("--aggregate", f.aggregate, "GraphSAGE aggregator: mean|sum")->capture_default_str();
  cmd->add_option("--readout-hidden", o.model.readout_hidden, "Readout width r")->capture_default_str();
  cmd->add_option("--adapool-hidden", o.model.adapool_hidden, "AdaPool MLP width")->capture_default_str();
  cmd->add_option("--temperature", o.model.temperature, "Contrastive temperature")->capture_default_str();
  cmd->add_flag("--freeze-readout", o.model.freeze_readout, "Hold the readout at uniform weights");
  cmd->add_flag("--identity-input", o.model.identity_input, "Hold W_in at the identity");
  cmd->add_option("--epochs", o.train.epochs, "Passes over the training set")->capture_default_str();
  cmd->add_option("--batch", o.train.train_batch, "Training batch size")->capture_default_str();
  cmd->add_option("--eval-batch", o.train.eval_batch, "Evaluation batch size")->capture_default_str();
  cmd->add_option("--lr", o.train.adam.learning_rate, "Adam learning rate")->capture_default_str();
  cmd->add_option("--weight-decay", o.train.adam.weight_decay, "L2 coefficient added to gradients")->capture_default_str();
  cmd->add_option("--max-len", o.train.max_seq_len, "Token truncation length")->capture_default_str();
  cmd->add_option("--seed", o.train.seed, "Seed (GLOT_SEED overrides)")->capture_default_str();
  cmd->add_flag("--no-shuffle", f.no_shuffle, "Keep the file order every epoch");
  cmd->add_option("--metrics", f.metrics, "Comma-separated metric names");
  cmd->add_option("--out", o.out, "Output directory")->capture_default_str();
}

std::vector<std::string> split_list(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

void apply_flags(TrainOptions& o, const ModelFlags& f) {
  o.model.pooler = parse_pooler(f.pooler);
  o.model.gnn.variant = parse_gnn_variant(f.variant);
  o.model.gnn.jk = parse_jk_mode(f.jk);
  o.model.gnn.aggregate = parse_aggregate(f.aggregate);
  o.model.task = parse_task_kind(f.task);
  o.metrics = split_list(f.metrics);
  o.train.shuffle = !f.no_shuffle;
}

std::optional<std::uint64_t> env_seed() {
  const char* s = std::getenv("GLOT_SEED");
  if (!s || !*s) return std::nullopt;
  char* end = nullptr;
  const unsigned long long v = std::strtoull(s, &end, 10);
  if (*end != '\0') throw InvalidArgument("GLOT_SEED must be a non-negative integer");
  return v;
}

void print_json(const ordered_json& j) { std::cout << j.dump(2) << std::endl; }

}  // namespace

int run(int argc, char** argv) {
  if (!spdlog::get("glot")) spdlog::set_default_logger(spdlog::stderr_color_mt("glot"));

  CLI::App app{"Graph-based token pooling over frozen hidden states"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kVersion);
  bool verbose = false;
  app.add_flag("-v,--verbose", verbose, "Debug logging");

  GenDiagnosticOptions gen;
  auto* gen_cmd = app.add_subcommand("gen-diagnostic", "Write a synthetic diagnostic dataset");
  gen_cmd->add_option("--n", gen.n_train, "Training samples")->capture_default_str();
  gen_cmd->add_option("--n-test", gen.n_test, "Test samples")->capture_default_str();
  gen_cmd->add_option("--len", gen.len, "Sequence length L")->capture_default_str();
  gen_cmd->add_option("--ratio", gen.ratio, "Distractor ratio")->capture_default_str();
  gen_cmd->add_option("--mode", gen.mode, "alg2|xor")->capture_default_str();
  gen_cmd->add_option("--dim", gen.dim, "Backbone width")->capture_default_str();
  gen_cmd->add_option("--tokens-per-class", gen.tokens_per_class, "xor mode")->capture_default_str();
  gen_cmd->add_option("--seed", gen.seed)->capture_default_str();
  gen_cmd->add_option("--out", gen.out, "Output directory")->capture_default_str();

  TrainOptions tr;
  ModelFlags tr_flags;
  std::string manifest;
  auto* train_cmd = app.add_subcommand("train", "Train a pooling head");
  add_model_flags(train_cmd, tr, tr_flags);
  train_cmd->get_option("--data")->required(false);
  train_cmd->add_option("--manifest", manifest, "Re-run the recorded configuration")->excludes("--data");

  EvalOptions ev;
  std::string ev_metrics;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate trained parameters");
  eval_cmd->add_option("--params", ev.params)->required();
  eval_cmd->add_option("--data", ev.data)->required();
  eval_cmd->add_option("--backbone", ev.backbone);
  eval_cmd->add_option("--cache", ev.cache);
  eval_cmd->add_option("--metrics", ev_metrics);
  eval_cmd->add_option("--eval-batch", ev.eval_batch)->capture_default_str();
  eval_cmd->add_option("--max-len", ev.max_seq_len)->capture_default_str();
  eval_cmd->add_option("--weights-out", ev.weights_out, "CSV of readout weights per token");

  TrainOptions sw;
  ModelFlags sw_flags;
  std::string grid = "0.0,0.2,0.4,0.6,0.8";
  std::string sweep_metric = "accuracy";
  auto* sweep_cmd = app.add_subcommand("sweep-tau", "Retrain across edge thresholds");
  add_model_flags(sweep_cmd, sw, sw_flags);
  sweep_cmd->add_option("--grid", grid)->capture_default_str();
  sweep_cmd->add_option("--metric", sweep_metric)->capture_default_str();

  BenchOptions bench;
  auto* bench_cmd = app.add_subcommand("bench", "Time graph construction against the full forward pass");
  bench_cmd->add_option("--len", bench.len)->capture_default_str();
  bench_cmd->add_option("--dim", bench.dim)->capture_default_str();
  bench_cmd->add_option("--repeats", bench.repeats)->capture_default_str();
  bench_cmd->add_option("--tau", bench.graph.tau)->capture_default_str();
  bench_cmd->add_option("--seed", bench.seed)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? ExitCode::ok : ExitCode::usage;
  }
  if (verbose) spdlog::set_level(spdlog::level::debug);

  try {
    const auto seed = env_seed();
    if (*gen_cmd) {
      if (seed) gen.seed = *seed;
      const auto r = gen_diagnostic(gen);
      ordered_json j{{"train", (gen.out / "train.jsonl").string()},
                     {"test", (gen.out / "test.jsonl").string()},
                     {"train_lines", r.train_lines},
                     {"test_lines", r.test_lines},
                     {"truncated_templates", r.truncated_templates}};
      if (r.certificate) j["certificate"] = certificate_json(*r.certificate);
      print_json(j);
    } else if (*train_cmd) {
      TrainOptions opt;
      if (!manifest.empty()) {
        opt = options_from_manifest(manifest);
        if (train_cmd->count("--out")) opt.out = tr.out;
      } else {
        if (tr.data.empty()) throw InvalidArgument("train: --data or --manifest is required");
        apply_flags(tr, tr_flags);
        opt = tr;
        if (seed) opt.train.seed = *seed;
      }
      const TrainResult r = run_train(opt);
      print_json({{"out", opt.out.string()},
                  {"trainable_params", r.report.trainable_params},
                  {"steps", r.report.steps},
                  {"metrics", r.report.metrics}});
    } else if (*eval_cmd) {
      ev.metrics = split_list(ev_metrics);
      print_json({{"metrics", run_eval(ev)}});
    } else if (*sweep_cmd) {
      apply_flags(sw, sw_flags);
      if (seed) sw.train.seed = *seed;
      const auto rows = run_sweep_tau(sw, parse_grid(grid), sweep_metric);
      ordered_json arr = ordered_json::array();
      for (const auto& r : rows)
        arr.push_back({{"tau", r.tau}, {sweep_metric, r.metric}, {"edge_density", r.edge_density}});
      print_json({{"csv", (sw.out / "sweep.csv").string()}, {"rows", arr}});
    } else if (*bench_cmd) {
      if (seed) bench.seed = *seed;
      print_json(to_json(run_bench(bench), bench));
    }
  } catch (const InvalidArgument& e) {
    spdlog::error("{}", e.what());
    return ExitCode::usage;
  } catch (const DataError& e) {
    spdlog::error("{}", e.what());
    return ExitCode::data;
  } catch (const NumericError& e) {
    spdlog::error("{}", e.what());
    return ExitCode::numeric;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return ExitCode::internal;
  }
  return ExitCode::ok;
}

}  // namespace glot::cli
