#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "tagqa/featurizer.hpp"
#include "tagqa/gat.hpp"
#include "tagqa/optimizer.hpp"
#include "tagqa/table.hpp"

namespace tagqa {

/// Indices of the k highest scores, ties broken by lower index.
std::vector<std::size_t> top_k(const Vec& scores, std::size_t k);

/// Data-row cells at the intersection of the top rows and top columns,
/// row-major. The header row is never returned.
std::vector<CellCoord> select_cells(const Vec& row_logits, const Vec& col_logits, const Table& table,
                                    std::size_t k_rows = 3, std::size_t k_cols = 3);

struct CheckpointMeta {
  int epoch = 0;
  double dev_f1 = 0.0;
  std::uint64_t seed = 0;
  friend bool operator==(const CheckpointMeta&, const CheckpointMeta&) = default;
};

struct Checkpoint {
  GatModel model;
  Vocab vocab;
  std::size_t max_tokens = kDefaultMaxTokens;
  CheckpointMeta meta;
};

/// Graph, tokens and labels for one example, built once per run.
struct PreparedExample {
  const QAExample* example = nullptr;
  MessageGraph graph;
  NodeTokens tokens;
  RowColLabels labels;
  bool trainable = false;  // has at least one highlighted cell
};

PreparedExample prepare_example(const QAExample& example, const Vocab& vocab, std::size_t max_tokens);

/// Eval-mode logits for one example.
GatOutput score_example(const GatModel& model, const PreparedExample& prepared);

std::vector<CellCoord> predict_cells(const Checkpoint& ckpt, const QAExample& example);

/// Mean per-example selection F1 in eval mode.
double mean_selection_f1(const GatModel& model, const std::vector<PreparedExample>& examples);

struct TrainOptions {
  int epochs = 50;
  int patience = 10;
  RAdamOptions optimizer;
  std::size_t max_tokens = kDefaultMaxTokens;
  std::size_t min_count = 1;
  std::uint64_t seed = 13;
};

struct EpochLog {
  int epoch;
  double train_loss;
  double dev_f1;
  double best_dev_f1;
  bool improved;
};

/// Batch size 1, reshuffled every epoch, best dev F1 checkpoint kept.
Checkpoint train_selector(const Dataset& train, const Dataset& dev, const GatConfig& config,
                          const TrainOptions& options, const std::function<void(const EpochLog&)>& on_epoch = {});

/// Binary container: magic, version, JSON header (config, vocab, metadata,
/// tensor table), then row-major little-endian float64 tensor data.
void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);
std::string encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::string& bytes);

}  // namespace tagqa
