#include "glot/dataset.hpp"

#include <cmath>
#include <fstream>

#include <nlohmann/json.hpp>

#include "glot/error.hpp"

namespace glot {

using nlohmann::json;

std::string_view to_string(TaskKind t) {
  switch (t) {
    case TaskKind::single: return "single";
    case TaskKind::pair: return "pair";
    case TaskKind::regression: return "regression";
    case TaskKind::retrieval: return "retrieval";
  }
  return "?";
}

TaskKind parse_task_kind(std::string_view s) {
  if (s == "single") return TaskKind::single;
  if (s == "pair") return TaskKind::pair;
  if (s == "regression") return TaskKind::regression;
  if (s == "retrieval" || s == "retrieval-pairs") return TaskKind::retrieval;
  throw InvalidArgument("unknown task kind '" + std::string(s) + "'");
}

std::size_t LabeledDataset::num_classes() const {
  if (task == TaskKind::regression || task == TaskKind::retrieval) return 1;
  double mx = 0.0;
  for (const auto& it : items) mx = std::max(mx, it.label);
  return static_cast<std::size_t>(mx) + 1;
}

namespace {

class LineError {
 public:
  LineError(std::string_view source, std::size_t line) : source_(source), line_(line) {}
  [[noreturn]] void fail(const std::string& msg) const {
    throw DataError(std::string(source_) + ":" + std::to_string(line_) + ": " + msg);
  }

 private:
  std::string_view source_;
  std::size_t line_;
};

std::vector<std::uint32_t> read_tokens(const json& obj, const char* key, std::size_t max_len,
                                       std::size_t& truncated, const LineError& err) {
  const json& arr = obj.at(key);
  if (!arr.is_array()) err.fail(std::string("'") + key + "' must be an array of token ids");
  if (arr.empty()) err.fail(std::string("'") + key + "' is empty");
  std::vector<std::uint32_t> out;
  out.reserve(arr.size());
  for (const json& v : arr) {
    if (!v.is_number_unsigned()) err.fail(std::string("'") + key + "' holds a non-integer id");
    out.push_back(v.get<std::uint32_t>());
  }
  if (out.size() > max_len) {
    out.resize(max_len);
    ++truncated;
  }
  return out;
}

std::size_t read_ref(const json& obj, const char* key, const LineError& err) {
  const json& v = obj.at(key);
  if (!v.is_number_unsigned()) err.fail(std::string("'") + key + "' must be a sentence index");
  return v.get<std::size_t>();
}

/// Reads one side group: token keys if present, ref keys otherwise.
void read_sides(const json& obj, std::initializer_list<const char*> token_keys,
                std::initializer_list<const char*> ref_keys, DatasetItem& item,
                std::size_t max_len, std::size_t& truncated, const LineError& err) {
  bool has_tokens = true, has_refs = true;
  for (const char* k : token_keys) has_tokens = has_tokens && obj.contains(k);
  for (const char* k : ref_keys) has_refs = has_refs && obj.contains(k);
  if (has_tokens) {
    for (const char* k : token_keys) item.tokens.push_back(read_tokens(obj, k, max_len, truncated, err));
  } else if (has_refs) {
    for (const char* k : ref_keys) item.refs.push_back(read_ref(obj, k, err));
  } else {
    std::string want;
    for (const char* k : token_keys) want += std::string(want.empty() ? "" : ", ") + k;
    std::string alt;
    for (const char* k : ref_keys) alt += std::string(alt.empty() ? "" : ", ") + k;
    err.fail("missing keys: expected {" + want + "} or {" + alt + "}");
  }
}

}  // namespace

LabeledDataset parse_jsonl_dataset(std::istream& in, TaskKind task, std::size_t max_seq_len,
                                   std::size_t num_classes, std::string_view source) {
  if (max_seq_len == 0) throw InvalidArgument("max_seq_len must be >= 1");
  LabeledDataset ds;
  ds.task = task;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    const LineError err(source, lineno);
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      err.fail(std::string("invalid JSON: ") + e.what());
    }
    if (!obj.is_object()) err.fail("line is not a JSON object");

    DatasetItem item;
    switch (task) {
      case TaskKind::single:
        read_sides(obj, {"tokens"}, {"sentence"}, item, max_seq_len, ds.truncated, err);
        break;
      case TaskKind::pair:
        read_sides(obj, {"tokens_a", "tokens_b"}, {"sentence_a", "sentence_b"}, item, max_seq_len,
                   ds.truncated, err);
        break;
      case TaskKind::regression:
        if (obj.contains("tokens_a") || obj.contains("sentence_a"))
          read_sides(obj, {"tokens_a", "tokens_b"}, {"sentence_a", "sentence_b"}, item,
                     max_seq_len, ds.truncated, err);
        else
          read_sides(obj, {"tokens"}, {"sentence"}, item, max_seq_len, ds.truncated, err);
        break;
      case TaskKind::retrieval:
        read_sides(obj, {"query_tokens", "doc_tokens"}, {"query", "doc"}, item, max_seq_len,
                   ds.truncated, err);
        break;
    }

    if (task != TaskKind::retrieval) {
      if (!obj.contains("label")) err.fail("missing 'label'");
      const json& lab = obj["label"];
      if (task == TaskKind::regression) {
        if (!lab.is_number()) err.fail("'label' must be a number");
        item.label = lab.get<double>();
        if (!std::isfinite(item.label)) err.fail("'label' is not finite");
      } else {
        if (!lab.is_number_unsigned()) err.fail("'label' must be a non-negative class id");
        item.label = static_cast<double>(lab.get<std::uint64_t>());
        if (num_classes != 0 && item.label >= static_cast<double>(num_classes))
          err.fail("'label' " + std::to_string(lab.get<std::uint64_t>()) + " outside " +
                   std::to_string(num_classes) + " declared classes");
      }
    }
    if (!ds.items.empty() && ds.items.front().tokens.empty() != item.tokens.empty())
      err.fail("mixes token-id and cache-reference items");
    ds.items.push_back(std::move(item));
  }
  if (ds.items.empty()) throw DataError(std::string(source) + ": empty dataset");
  return ds;
}

LabeledDataset load_jsonl_dataset(const std::filesystem::path& path, TaskKind task,
                                  std::size_t max_seq_len, std::size_t num_classes) {
  std::ifstream in(path);
  if (!in) throw DataError("cannot open dataset '" + path.string() + "'");
  return parse_jsonl_dataset(in, task, max_seq_len, num_classes, path.string());
}

}  // namespace glot
