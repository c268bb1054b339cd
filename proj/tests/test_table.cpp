#include <gtest/gtest.h>

#include <random>
#include <sstream>

#include "tagqa/table.hpp"

using namespace tagqa;

namespace {

Table manx_table() {
  return Table({{"Rank", "Rider", "Team", "Speed"},
                {"1", "Northern Ireland Robert D", "Yamaha", "98.41 mph"},
                {"2", "Scotland Steve Hislop", "Yamaha", "98.20 mph"},
                {"3", "Wales Ian Loug", "Honda", "97.83 mph"},
                {"4", "England Mark Lin", "Suzuki", "96.02 mph"}});
}

std::string record(const std::string& id, const std::string& table, const std::string& cells) {
  return R"({"id":")" + id + R"(","question":"q?","table":)" + table + R"(,"highlighted_cells":)" + cells +
         R"(,"answer":"a."})";
}

}  // namespace

TEST(ParseDataset, MapsFieldsDirectly) {
  std::istringstream in(record("e1", R"([["h1","h2"],["a","b"]])", "[[1,0]]"));
  Dataset ds = parse_dataset(in, Split::Train);
  ASSERT_EQ(ds.size(), 1u);
  const auto& ex = ds.examples[0];
  EXPECT_EQ(ex.id, "e1");
  EXPECT_EQ(ex.question, "q?");
  EXPECT_EQ(ex.answer, "a.");
  EXPECT_EQ(ex.gold_cells, (std::vector<CellCoord>{{1, 0}}));
  EXPECT_EQ(ex.table.n_rows(), 2u);
  EXPECT_EQ(ex.table.n_cols(), 2u);
}

TEST(ParseDataset, PadsRaggedRows) {
  std::istringstream in(record("e1", R"([["a","b","c"],["d","e"]])", "[]"));
  Dataset ds = parse_dataset(in, Split::Dev);
  const auto& t = ds.examples[0].table;
  EXPECT_EQ(t.n_cols(), 3u);
  EXPECT_EQ(t.cell(1, 2), "");
  EXPECT_EQ(t.cell(1, 1), "e");
}

TEST(ParseDataset, PreservesOrderAndCountOfLines) {
  std::ostringstream file;
  for (int i = 0; i < 100; ++i) file << record("id" + std::to_string(i), R"([["h"],["v"]])", "[[1,0]]") << "\n";
  const std::string text = file.str();
  const auto lines = static_cast<std::size_t>(std::count(text.begin(), text.end(), '\n'));
  std::istringstream in(text);
  Dataset ds = parse_dataset(in, Split::Test);
  ASSERT_EQ(ds.size(), lines);
  for (std::size_t i = 0; i < ds.size(); ++i) EXPECT_EQ(ds.examples[i].id, "id" + std::to_string(i));
}

TEST(ParseDataset, MalformedRecordReportsLineNumber) {
  std::istringstream in(record("ok", R"([["h"],["v"]])", "[]") + "\n{not json\n");
  try {
    parse_dataset(in, Split::Train);
    FAIL() << "expected ParseError";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(ParseDataset, MissingFieldIsAParseError) {
  std::istringstream in(R"({"id":"x","question":"q","table":[["h"]],"answer":"a"})");
  EXPECT_THROW(parse_dataset(in, Split::Train), ParseError);
}

TEST(ParseDataset, OutOfRangeHighlightNamesExample) {
  std::istringstream in(record("bad-example", R"([["h1","h2"],["a","b"]])", "[[2,0]]"));
  try {
    parse_dataset(in, Split::Train);
    FAIL() << "expected an error";
  } catch (const Error& e) {
    EXPECT_NE(std::string(e.what()).find("bad-example"), std::string::npos);
  }
}

TEST(ParseDataset, DuplicateIdsRejected) {
  std::istringstream in(record("x", R"([["h"]])", "[]") + "\n" + record("x", R"([["h"]])", "[]"));
  EXPECT_THROW(parse_dataset(in, Split::Train), ParseError);
}

TEST(ParseDataset, RoundTripsThroughSerialization) {
  std::mt19937_64 rng(5);
  Dataset ds;
  ds.split = Split::Dev;
  for (int i = 0; i < 25; ++i) {
    QAExample ex;
    ex.id = "r" + std::to_string(i);
    ex.question = "question \"" + std::to_string(i) + "\" with\ttab";
    const std::size_t rows = 1 + rng() % 40, cols = 1 + rng() % 8;
    std::vector<std::vector<std::string>> cells(rows, std::vector<std::string>(cols));
    for (auto& r : cells)
      for (auto& c : r) c = "v" + std::to_string(rng() % 1000) + (rng() % 5 == 0 ? " ünï" : "");
    ex.table = truncate_table(Table(cells));
    ex.gold_cells.push_back({ex.table.n_rows() - 1, rng() % cols});
    ex.answer = "answer " + std::to_string(i);
    if (i % 2) ex.page_title = "page";
    if (i % 3) ex.section_title = "section";
    ds.examples.push_back(ex);
  }
  std::stringstream buf;
  write_dataset(buf, ds);
  Dataset back = parse_dataset(buf, Split::Dev);
  EXPECT_EQ(back, ds);
}

TEST(TruncateTable, UnderCapIsUnchanged) {
  Table t(std::vector<std::vector<std::string>>(10, std::vector<std::string>(10, "x")));
  Table out = truncate_table(t, 200);
  EXPECT_EQ(out.n_rows(), 10u);
  EXPECT_FALSE(out.truncated());
}

TEST(TruncateTable, KeepsLongestRowPrefix) {
  Table t30(std::vector<std::vector<std::string>>(30, std::vector<std::string>(10, "x")));
  EXPECT_EQ(truncate_table(t30, 200).n_rows(), 20u);
  Table t67(std::vector<std::vector<std::string>>(67, std::vector<std::string>(3, "x")));
  Table out = truncate_table(t67, 200);
  EXPECT_EQ(out.n_rows(), 66u);  // 66*3 = 198 <= 200 < 67*3
  EXPECT_TRUE(out.truncated());
}

TEST(TruncateTable, CapBelowColumnCountFails) {
  Table t({{"a", "b", "c"}});
  EXPECT_THROW(truncate_table(t, 2), Error);
}

TEST(TruncateTable, NeverGrowsAndKeepsHeader) {
  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 200; ++trial) {
    const std::size_t rows = 1 + rng() % 80, cols = 1 + rng() % 12;
    std::vector<std::vector<std::string>> cells(rows, std::vector<std::string>(cols));
    for (std::size_t r = 0; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c) cells[r][c] = std::to_string(r) + ":" + std::to_string(c);
    Table t(cells);
    const std::size_t cap = cols + rng() % 250;
    Table out = truncate_table(t, cap);
    EXPECT_LE(out.n_cells(), t.n_cells());
    EXPECT_LE(out.n_cells(), std::max(cap, out.n_cols()));
    EXPECT_EQ(out.rows().front(), t.rows().front());
    EXPECT_EQ(out.n_cols(), t.n_cols());
  }
}

TEST(DeriveLabels, ProjectsGoldCells) {
  QAExample ex;
  ex.id = "x";
  ex.table = Table({{"a", "b"}, {"c", "d"}, {"e", "f"}});
  ex.gold_cells = {{1, 0}, {1, 1}};
  auto l = derive_row_col_labels(ex);
  EXPECT_EQ(l.rows, (std::vector<bool>{false, true, false}));
  EXPECT_EQ(l.cols, (std::vector<bool>{true, true}));

  ex.gold_cells = {{2, 1}};
  l = derive_row_col_labels(ex);
  EXPECT_EQ(std::count(l.rows.begin(), l.rows.end(), true), 1);
  EXPECT_EQ(std::count(l.cols.begin(), l.cols.end(), true), 1);

  ex.gold_cells.clear();
  for (std::size_t r = 0; r < 3; ++r)
    for (std::size_t c = 0; c < 2; ++c) ex.gold_cells.push_back({r, c});
  l = derive_row_col_labels(ex);
  EXPECT_EQ(std::count(l.rows.begin(), l.rows.end(), true), 3);
  EXPECT_EQ(std::count(l.cols.begin(), l.cols.end(), true), 2);
}

TEST(DeriveLabels, EmptyGoldIsAnError) {
  QAExample ex;
  ex.id = "empty";
  ex.table = Table({{"a"}});
  EXPECT_THROW(derive_row_col_labels(ex), Error);
}

TEST(DeriveLabels, PositiveCountsBoundedByGold) {
  std::mt19937_64 rng(3);
  for (int trial = 0; trial < 100; ++trial) {
    QAExample ex;
    const std::size_t rows = 1 + rng() % 10, cols = 1 + rng() % 6;
    ex.table = Table(std::vector<std::vector<std::string>>(rows, std::vector<std::string>(cols, "v")));
    const std::size_t k = 1 + rng() % 6;
    for (std::size_t i = 0; i < k; ++i) ex.gold_cells.push_back({rng() % rows, rng() % cols});
    auto l = derive_row_col_labels(ex);
    auto pr = static_cast<std::size_t>(std::count(l.rows.begin(), l.rows.end(), true));
    auto pc = static_cast<std::size_t>(std::count(l.cols.begin(), l.cols.end(), true));
    EXPECT_GE(pr, 1u);
    EXPECT_LE(pr, k);
    EXPECT_GE(pc, 1u);
    EXPECT_LE(pc, k);
  }
}

TEST(Linearize, ReproducesManxExample) {
  std::vector<CellCoord> gold = {{1, 0}, {1, 1}, {2, 0}, {2, 1}, {3, 0}, {3, 1}};
  EXPECT_EQ(linearize_cells(manx_table(), gold),
            "Rank is 1 [SEP] Rider is Northern Ireland Robert D [SEP] Rank is 2 [SEP] Rider is Scotland Steve "
            "Hislop [SEP] Rank is 3 [SEP] Rider is Wales Ian Loug");
}

TEST(Linearize, EmitsRowMajorRegardlessOfInputOrder) {
  std::vector<CellCoord> shuffled = {{3, 1}, {1, 0}, {2, 1}, {1, 1}, {3, 0}, {2, 0}};
  std::vector<CellCoord> sorted = {{1, 0}, {1, 1}, {2, 0}, {2, 1}, {3, 0}, {3, 1}};
  EXPECT_EQ(linearize_cells(manx_table(), shuffled), linearize_cells(manx_table(), sorted));
}

TEST(Linearize, EmptyAndSingleCell) {
  Table t({{"H0", "H1"}, {"a", "b"}});
  EXPECT_EQ(linearize_cells(t, {}), "");
  EXPECT_EQ(linearize_cells(t, {{1, 1}}), "H1 is b");
}

TEST(Linearize, RejectsHeaderCells) { EXPECT_THROW(linearize_cells(manx_table(), {{0, 1}}), Error); }

TEST(Linearize, SlotAndSeparatorCounts) {
  std::mt19937_64 rng(17);
  auto count = [](const std::string& s, const std::string& needle) {
    std::size_t n = 0;
    for (auto pos = s.find(needle); pos != std::string::npos; pos = s.find(needle, pos + 1)) ++n;
    return n;
  };
  for (int trial = 0; trial < 100; ++trial) {
    const std::size_t rows = 2 + rng() % 8, cols = 1 + rng() % 5;
    std::vector<std::vector<std::string>> cells(rows, std::vector<std::string>(cols));
    for (auto& r : cells)
      for (auto& c : r) c = "w" + std::to_string(rng() % 50);
    Table t(cells);
    std::vector<CellCoord> coords;
    for (std::size_t r = 1; r < rows; ++r)
      for (std::size_t c = 0; c < cols; ++c)
        if (rng() % 2) coords.push_back({r, c});
    auto s = linearize_cells(t, coords);
    EXPECT_EQ(count(s, " is "), coords.size());
    EXPECT_EQ(count(s, " [SEP] "), coords.empty() ? 0 : coords.size() - 1);
  }
}
