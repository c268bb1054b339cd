#include <gtest/gtest.h>

#include <filesystem>
#include <fstream>

#include "tagqa/metrics.hpp"
#include "tagqa/selector.hpp"
#include "tagqa/synthetic.hpp"

using namespace tagqa;

namespace {

Vec vec(std::initializer_list<double> xs) {
  Vec v(static_cast<Eigen::Index>(xs.size()));
  Eigen::Index i = 0;
  for (double x : xs) v(i++) = x;
  return v;
}

Table blank(std::size_t rows, std::size_t cols) {
  return Table(std::vector<std::vector<std::string>>(rows, std::vector<std::string>(cols, "x")));
}

GatConfig tiny_config() {
  GatConfig c;
  c.layers = 2;
  c.dim = 16;
  c.msg_dim = 16;
  c.type_dim = 8;
  c.dropout = 0.1;
  return c;
}

}  // namespace

TEST(TopK, BreaksTiesByLowerIndex) {
  EXPECT_EQ(top_k(vec({0.5, 0.5, 0.5, 0.5}), 3), (std::vector<std::size_t>{0, 1, 2}));
  EXPECT_EQ(top_k(vec({0.1, 0.9, 0.8, 0.2}), 3), (std::vector<std::size_t>{1, 2, 3}));
  EXPECT_EQ(top_k(vec({1.0, 2.0}), 5), (std::vector<std::size_t>{1, 0}));
}

TEST(SelectCells, HeaderRowIsNeverReturned) {
  auto cells = select_cells(vec({5.0, 1.0}), vec({1.0, 2.0}), blank(2, 2));
  EXPECT_EQ(cells, (std::vector<CellCoord>{{1, 0}, {1, 1}}));
}

TEST(SelectCells, HandComputedIntersection) {
  // Top three rows by score are 1 (0.9), 2 (0.8) and 3 (0.2); both columns
  // fit in k = 3. The header row is not among them.
  auto cells = select_cells(vec({0.1, 0.9, 0.8, 0.2}), vec({0.9, 0.1}), blank(4, 2));
  EXPECT_EQ(cells, (std::vector<CellCoord>{{1, 0}, {1, 1}, {2, 0}, {2, 1}, {3, 0}, {3, 1}}));
}

TEST(SelectCells, HighScoringHeaderRowShrinksTheSelection) {
  auto cells = select_cells(vec({0.95, 0.9, 0.8, 0.2}), vec({0.9, 0.1}), blank(4, 2));
  EXPECT_EQ(cells, (std::vector<CellCoord>{{1, 0}, {1, 1}, {2, 0}, {2, 1}}));
}

TEST(SelectCells, AllEqualPicksLowestIndices) {
  auto cells = select_cells(Vec::Zero(6), Vec::Zero(5), blank(6, 5));
  EXPECT_EQ(cells, (std::vector<CellCoord>{{1, 0}, {1, 1}, {1, 2}, {2, 0}, {2, 1}, {2, 2}}));
}

TEST(SelectCells, SizeBoundAndRowMajor) {
  std::mt19937_64 rng(8);
  std::normal_distribution<double> d;
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t nr = 1 + rng() % 9, nc = 1 + rng() % 7;
    Vec r(static_cast<Eigen::Index>(nr)), c(static_cast<Eigen::Index>(nc));
    for (auto& x : r) x = d(rng);
    for (auto& x : c) x = d(rng);
    auto cells = select_cells(r, c, blank(nr, nc));
    EXPECT_LE(cells.size(), std::min<std::size_t>(3, nr) * std::min<std::size_t>(3, nc));
    EXPECT_TRUE(std::is_sorted(cells.begin(), cells.end()));
    for (auto cc : cells) EXPECT_GE(cc.row, 1u);
  }
  EXPECT_THROW(select_cells(Vec::Zero(3), Vec::Zero(2), blank(4, 2)), Error);
}

TEST(Train, MemorizesASingleExample) {
  Dataset ds;
  QAExample ex;
  ex.id = "only";
  ex.question = "what are the scores of ann bob and cy in math art and gym";
  ex.table = Table({{"math", "history", "art", "gym", "music"},
                    {"10", "11", "12", "13", "14"},
                    {"20", "21", "22", "23", "24"},
                    {"30", "31", "32", "33", "34"},
                    {"40", "41", "42", "43", "44"},
                    {"50", "51", "52", "53", "54"}});
  for (std::size_t r : {2, 4, 5})
    for (std::size_t c : {0, 2, 3}) ex.gold_cells.push_back({r, c});
  ds.examples.push_back(ex);
  TrainOptions opt;
  opt.epochs = 150;
  opt.patience = 150;
  opt.optimizer.lr = 5e-3;
  auto ckpt = train_selector(ds, ds, tiny_config(), opt);
  EXPECT_DOUBLE_EQ(ckpt.meta.dev_f1, 1.0);
  EXPECT_EQ(predict_cells(ckpt, ex), ex.gold_cells);
}

TEST(Train, FixedSeedIsDeterministic) {
  Dataset train = synthetic::header_match_dataset(8, 3, "tr");
  Dataset dev = synthetic::header_match_dataset(4, 4, "dv");
  TrainOptions opt;
  opt.epochs = 3;
  std::vector<double> losses_a, losses_b;
  auto a = train_selector(train, dev, tiny_config(), opt, [&](const EpochLog& l) { losses_a.push_back(l.train_loss); });
  auto b = train_selector(train, dev, tiny_config(), opt, [&](const EpochLog& l) { losses_b.push_back(l.train_loss); });
  EXPECT_EQ(losses_a, losses_b);
  EXPECT_EQ(encode_checkpoint(a), encode_checkpoint(b));
  opt.seed = 99;
  auto c = train_selector(train, dev, tiny_config(), opt);
  EXPECT_NE(encode_checkpoint(a), encode_checkpoint(c));
}

TEST(Train, EmptySplitsFail) {
  Dataset some = synthetic::header_match_dataset(2, 1);
  EXPECT_THROW(train_selector(Dataset{}, some, tiny_config(), TrainOptions{}), Error);
  EXPECT_THROW(train_selector(some, Dataset{}, tiny_config(), TrainOptions{}), Error);
}

TEST(Train, PatienceStopsEarly) {
  Dataset train = synthetic::header_match_dataset(4, 3);
  TrainOptions opt;
  opt.epochs = 40;
  opt.patience = 2;
  int epochs = 0;
  bool improved_last = true;
  train_selector(train, train, tiny_config(), opt, [&](const EpochLog& l) {
    ++epochs;
    improved_last = l.improved;
  });
  EXPECT_LE(epochs, 40);
  if (epochs < 40) EXPECT_FALSE(improved_last);
}

TEST(Checkpoint, RoundTripIsBitExact) {
  Dataset train = synthetic::header_match_dataset(6, 5);
  TrainOptions opt;
  opt.epochs = 2;
  auto ckpt = train_selector(train, train, tiny_config(), opt);
  const std::string bytes = encode_checkpoint(ckpt);
  auto back = decode_checkpoint(bytes);
  EXPECT_EQ(back.model.params, ckpt.model.params);
  EXPECT_EQ(back.model.config, ckpt.model.config);
  EXPECT_EQ(back.vocab, ckpt.vocab);
  EXPECT_EQ(back.meta, ckpt.meta);
  EXPECT_EQ(encode_checkpoint(back), bytes);
  for (std::size_t l = 0; l < ckpt.model.running.size(); ++l) {
    EXPECT_EQ(back.model.running[l].mean, ckpt.model.running[l].mean);
    EXPECT_EQ(back.model.running[l].var, ckpt.model.running[l].var);
  }
  auto path = std::filesystem::temp_directory_path() / "tagqa_test.ckpt";
  save_checkpoint(ckpt, path.string());
  auto loaded = load_checkpoint(path.string());
  for (const auto& ex : train.examples) {
    auto p1 = prepare_example(ex, ckpt.vocab, ckpt.max_tokens);
    auto p2 = prepare_example(ex, loaded.vocab, loaded.max_tokens);
    auto o1 = score_example(ckpt.model, p1);
    auto o2 = score_example(loaded.model, p2);
    EXPECT_EQ(o1.row_logits, o2.row_logits);
    EXPECT_EQ(o1.col_logits, o2.col_logits);
  }
  std::filesystem::remove(path);
}

TEST(Checkpoint, CorruptInputIsRejected) {
  Dataset train = synthetic::header_match_dataset(2, 5);
  TrainOptions opt;
  opt.epochs = 1;
  const std::string bytes = encode_checkpoint(train_selector(train, train, tiny_config(), opt));
  EXPECT_THROW(decode_checkpoint("NOTACKPT" + bytes.substr(8)), Error);
  EXPECT_THROW(decode_checkpoint(bytes.substr(0, bytes.size() - 8)), Error);
  EXPECT_THROW(decode_checkpoint(""), Error);
  EXPECT_THROW(load_checkpoint("/nonexistent/tagqa.ckpt"), Error);
}
