#include "tagqa/selector.hpp"

#include <algorithm>
#include <numeric>

#include "tagqa/metrics.hpp"

namespace tagqa {

std::vector<std::size_t> top_k(const Vec& scores, std::size_t k) {
  std::vector<std::size_t> idx(static_cast<std::size_t>(scores.size()));
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return scores(static_cast<Eigen::Index>(a)) > scores(static_cast<Eigen::Index>(b));
  });
  idx.resize(std::min(k, idx.size()));
  return idx;
}

std::vector<CellCoord> select_cells(const Vec& row_logits, const Vec& col_logits, const Table& table,
                                    std::size_t k_rows, std::size_t k_cols) {
  if (static_cast<std::size_t>(row_logits.size()) != table.n_rows() ||
      static_cast<std::size_t>(col_logits.size()) != table.n_cols())
    throw Error("logit counts do not match the table shape");
  auto rows = top_k(row_logits, k_rows);
  auto cols = top_k(col_logits, k_cols);
  std::sort(rows.begin(), rows.end());
  std::sort(cols.begin(), cols.end());
  std::vector<CellCoord> out;
  for (auto r : rows) {
    if (r == 0) continue;
    for (auto c : cols) out.push_back({r, c});
  }
  return out;
}

PreparedExample prepare_example(const QAExample& example, const Vocab& vocab, std::size_t max_tokens) {
  PreparedExample p;
  p.example = &example;
  TableGraph g = build_graph(example.table, example.question);
  p.graph = message_graph(g);
  p.tokens = node_tokens(g, vocab, max_tokens);
  p.trainable = !example.gold_cells.empty();
  if (p.trainable) p.labels = derive_row_col_labels(example);
  return p;
}

GatOutput score_example(const GatModel& model, const PreparedExample& prepared) {
  return gat_forward(model, prepared.graph, embed_nodes(prepared.tokens, model.params.embedding), Mode::Eval);
}

std::vector<CellCoord> predict_cells(const Checkpoint& ckpt, const QAExample& example) {
  auto prepared = prepare_example(example, ckpt.vocab, ckpt.max_tokens);
  auto out = score_example(ckpt.model, prepared);
  return select_cells(out.row_logits, out.col_logits, example.table,
                      static_cast<std::size_t>(ckpt.model.config.top_rows),
                      static_cast<std::size_t>(ckpt.model.config.top_cols));
}

double mean_selection_f1(const GatModel& model, const std::vector<PreparedExample>& examples) {
  if (examples.empty()) return 0.0;
  double sum = 0.0;
  for (const auto& p : examples) {
    auto out = score_example(model, p);
    auto cells = select_cells(out.row_logits, out.col_logits, p.example->table,
                              static_cast<std::size_t>(model.config.top_rows),
                              static_cast<std::size_t>(model.config.top_cols));
    sum += selection_prf(cells, p.example->gold_cells).f1;
  }
  return sum / static_cast<double>(examples.size());
}

Checkpoint train_selector(const Dataset& train, const Dataset& dev, const GatConfig& config,
                          const TrainOptions& options, const std::function<void(const EpochLog&)>& on_epoch) {
  if (train.empty()) throw Error("training split is empty");
  if (dev.empty()) throw Error("development split is empty");
  config.validate();

  Checkpoint best;
  best.vocab = build_vocab(train, options.min_count);
  best.max_tokens = options.max_tokens;
  best.meta.seed = options.seed;

  std::vector<PreparedExample> train_set, dev_set;
  for (const auto& ex : train.examples) {
    auto p = prepare_example(ex, best.vocab, options.max_tokens);
    if (p.trainable) train_set.push_back(std::move(p));
  }
  if (train_set.empty()) throw Error("no training example has highlighted cells");
  for (const auto& ex : dev.examples) dev_set.push_back(prepare_example(ex, best.vocab, options.max_tokens));

  std::mt19937_64 rng(options.seed);
  GatModel model = init_model(config, best.vocab.size(), options.seed);
  RAdamState opt_state;
  best.model = model;
  double best_f1 = -1.0;
  int stale = 0;

  std::vector<std::size_t> order(train_set.size());
  std::iota(order.begin(), order.end(), 0);
  for (int epoch = 1; epoch <= options.epochs; ++epoch) {
    std::shuffle(order.begin(), order.end(), rng);
    double loss_sum = 0.0;
    for (auto i : order) {
      const auto& p = train_set[i];
      auto res = compute_gradients(model, p.graph, p.tokens, p.labels.rows, p.labels.cols, Mode::Train, &rng);
      loss_sum += res.loss;
      update_running_stats(model, res.output);
      radam_step(model.params, res.grads, opt_state, options.optimizer);
    }
    const double f1 = mean_selection_f1(model, dev_set);
    const bool improved = f1 > best_f1;
    if (improved) {
      best_f1 = f1;
      best.model = model;
      best.meta.epoch = epoch;
      best.meta.dev_f1 = f1;
      stale = 0;
    } else {
      ++stale;
    }
    if (on_epoch) on_epoch({epoch, loss_sum / static_cast<double>(train_set.size()), f1, best_f1, improved});
    if (options.patience > 0 && stale >= options.patience) break;
  }
  return best;
}

}  // namespace tagqa
