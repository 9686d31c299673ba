#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

namespace glot {

enum class TaskKind { single, pair, regression, retrieval };

std::string_view to_string(TaskKind t);
TaskKind parse_task_kind(std::string_view s);

/// One example. Each side is either a token-id sequence (embedded by a
/// toy backbone) or an index into a hidden-state cache.
struct DatasetItem {
  std::vector<std::vector<std::uint32_t>> tokens;
  std::vector<std::size_t> refs;
  double label = 0.0;

  std::size_t sides() const noexcept { return tokens.empty() ? refs.size() : tokens.size(); }
};

struct LabeledDataset {
  TaskKind task = TaskKind::single;
  std::vector<DatasetItem> items;
  /// Token sequences cut down to max_seq_len while loading.
  std::size_t truncated = 0;

  bool uses_tokens() const noexcept { return !items.empty() && !items.front().tokens.empty(); }
  /// 1 + largest label for classification tasks, 1 otherwise.
  std::size_t num_classes() const;
};

// JSON-lines schema, one object per non-blank line:
//   single      {"tokens":[ids]} or {"sentence":i}, "label": class id
//   pair        {"tokens_a","tokens_b"} or {"sentence_a","sentence_b"}, "label"
//   regression  either of the above, "label": number
//   retrieval   {"query_tokens","doc_tokens"} or {"query","doc"}
// Other keys (e.g. "meta") are ignored. Token lists longer than
// max_seq_len are truncated.

LabeledDataset load_jsonl_dataset(const std::filesystem::path& path, TaskKind task,
                                  std::size_t max_seq_len = 128, std::size_t num_classes = 0);
LabeledDataset parse_jsonl_dataset(std::istream& in, TaskKind task, std::size_t max_seq_len,
                                   std::size_t num_classes, std::string_view source);

}  // namespace glot
