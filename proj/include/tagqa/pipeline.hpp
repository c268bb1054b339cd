#pragma once

#include <cstdint>
#include <map>
#include <ostream>
#include <string>
#include <vector>

#include "tagqa/fusion.hpp"
#include "tagqa/gat.hpp"
#include "tagqa/metrics.hpp"
#include "tagqa/retrieval.hpp"
#include "tagqa/selector.hpp"

namespace tagqa {

inline constexpr const char* kToolVersion = "0.3.0";

enum class GenerationMode { Template, Remote };

/// Flat `key = value` configuration. Later `set` calls (command-line
/// flags) override values read from a file.
struct PipelineConfig {
  std::string train_path;
  std::string dev_path;
  std::string test_path;
  std::string corpus_path;
  std::string index_path;       // default: {output_dir}/index.bm25
  std::string checkpoint_path;  // default: {output_dir}/selector.ckpt
  std::string output_dir = "out";

  GatConfig gat;
  TrainOptions train;
  std::size_t cell_cap = kDefaultCellCap;
  Bm25Params bm25;

  GenerationMode mode = GenerationMode::Template;
  std::string endpoint;
  int timeout_ms = 30000;
  int remote_retries = 0;
  GenerationConfig generation;
  int jobs = 1;

  std::uint64_t seed = 13;

  static PipelineConfig load(const std::string& path);
  /// Throws on unknown keys or unparsable values.
  void set(const std::string& key, const std::string& value);
  void parse(std::istream& in, const std::string& source = "<config>");
  std::map<std::string, std::string> snapshot() const;

  std::string resolved_index_path() const;
  std::string resolved_checkpoint_path() const;
  std::string dataset_path(Split split) const;
  /// Rejects remote mode without an endpoint.
  void validate() const;
};

struct SplitStats {
  Split split;
  std::size_t examples = 0;
  std::size_t truncated = 0;
  std::size_t min_cells = 0, max_cells = 0;
  double mean_cells = 0.0, mean_rows = 0.0, mean_cols = 0.0;
  double mean_highlighted = 0.0;
};

std::vector<SplitStats> cmd_ingest(const PipelineConfig& config, std::ostream& log);

struct IndexStats {
  std::string path;
  std::size_t docs = 0;
  std::size_t terms = 0;
  double avg_doc_length = 0.0;
};
IndexStats cmd_build_index(const PipelineConfig& config, std::ostream& log);

/// Writes the checkpoint and a per-epoch log ({output_dir}/train_log.tsv).
std::string cmd_train(const PipelineConfig& config, std::ostream& log);

/// Writes {output_dir}/predictions.{split}.jsonl sorted by example id.
std::string cmd_predict(const PipelineConfig& config, Split split, std::ostream& log);

/// Writes {output_dir}/report.{split}.json.
EvalReport cmd_eval(const PipelineConfig& config, const std::string& predictions_path, Split split,
                    std::ostream& log, std::string* report_path = nullptr);

/// ingest -> build-index -> train -> predict(test) -> eval(test); writes
/// {output_dir}/manifest.json even when a stage fails.
std::string run_pipeline(const PipelineConfig& config, std::ostream& log);

/// One example through selection, retrieval, fusion and generation.
Prediction predict_example(const Checkpoint& ckpt, const InvertedIndex& index, const PipelineConfig& config,
                           const QAExample& example);

std::string sha256_file(const std::string& path);
void write_file_atomic(const std::string& path, const std::string& content);
std::string read_file(const std::string& path);

}  // namespace tagqa
