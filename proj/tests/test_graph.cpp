#include <gtest/gtest.h>

#include <map>
#include <random>
#include <set>

#include "tagqa/graph.hpp"

using namespace tagqa;

namespace {

Table grid(std::size_t rows, std::size_t cols) {
  std::vector<std::vector<std::string>> cells(rows, std::vector<std::string>(cols));
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) cells[r][c] = "c" + std::to_string(r) + "_" + std::to_string(c);
  return Table(cells);
}

std::size_t choose2(std::size_t n) { return n * (n - 1) / 2; }

// Pairwise relation by definition: returns -1 when the nodes are unrelated.
struct Role {
  bool question = false;
  bool row_header = false;
  std::size_t row = 0, col = 0;
};

int oracle_relation(const Role& a, const Role& b) {
  if (a.question || b.question) {
    if (a.question && b.question) return -1;
    const Role& other = a.question ? b : a;
    return other.row_header ? -1 : static_cast<int>(RelationKind::QuestionToCell);
  }
  if (a.row_header && b.row_header) return -1;
  if (a.row == b.row) return static_cast<int>(RelationKind::SameRow);
  if (!a.row_header && !b.row_header && a.col == b.col) return static_cast<int>(RelationKind::SameColumn);
  return -1;
}

}  // namespace

TEST(BuildGraph, SmallCounts) {
  auto g22 = build_graph(grid(2, 2), "q");
  EXPECT_EQ(g22.num_nodes(), 7u);
  EXPECT_EQ(g22.num_undirected_edges(), 12u);
  auto g11 = build_graph(grid(1, 1), "q");
  EXPECT_EQ(g11.num_nodes(), 3u);
  EXPECT_EQ(g11.num_undirected_edges(), 2u);
  auto g34 = build_graph(grid(3, 4), "q");
  EXPECT_EQ(g34.num_nodes(), 16u);
  EXPECT_EQ(g34.num_undirected_edges(), 54u);
}

TEST(BuildGraph, CountFormulasHoldForAllShapes) {
  for (std::size_t nr = 1; nr <= 12; ++nr) {
    for (std::size_t nc = 1; nc <= 9; ++nc) {
      auto g = build_graph(grid(nr, nc), "what");
      EXPECT_EQ(g.num_nodes(), nr * nc + nr + 1);
      EXPECT_EQ(g.num_undirected_edges(), nr * choose2(nc + 1) + nc * choose2(nr) + nr * nc) << nr << "x" << nc;
    }
  }
}

TEST(BuildGraph, NodeLayoutAndKinds) {
  auto g = build_graph(grid(3, 2), "Who won?");
  EXPECT_EQ(g.nodes()[0].kind, NodeKind::Question);
  EXPECT_EQ(g.nodes()[0].text, "Who won?");
  for (std::size_t r = 0; r < 3; ++r) {
    EXPECT_EQ(g.row_header(r), 1 + r);
    EXPECT_EQ(g.nodes()[g.row_header(r)].kind, NodeKind::RowHeader);
  }
  for (std::size_t c = 0; c < 2; ++c) {
    EXPECT_EQ(g.column_header(c), g.cell_node({0, c}));
    EXPECT_EQ(g.nodes()[g.column_header(c)].kind, NodeKind::ColumnHeader);
  }
  EXPECT_EQ(g.cell_node({0, 0}), 4u);
  EXPECT_EQ(g.cell_node({2, 1}), 9u);
  EXPECT_EQ(g.nodes()[9].kind, NodeKind::DataCell);
  EXPECT_EQ(g.nodes()[9].text, "c2_1");
  ASSERT_TRUE(g.nodes()[9].coord.has_value());
  EXPECT_EQ(*g.nodes()[9].coord, (CellCoord{2, 1}));
}

TEST(BuildGraph, NeighborhoodsOfTwoByTwo) {
  auto g = build_graph(grid(2, 2), "q");
  // ids: q=0, rh0=1, rh1=2, (0,0)=3, (0,1)=4, (1,0)=5, (1,1)=6
  using R = RelationKind;
  EXPECT_EQ(g.neighborhood(0), (std::vector<Neighbor>{{3, R::QuestionToCell},
                                                      {4, R::QuestionToCell},
                                                      {5, R::QuestionToCell},
                                                      {6, R::QuestionToCell}}));
  EXPECT_EQ(g.neighborhood(1), (std::vector<Neighbor>{{3, R::SameRow}, {4, R::SameRow}}));
  EXPECT_EQ(g.neighborhood(3), (std::vector<Neighbor>{{0, R::QuestionToCell},
                                                      {1, R::SameRow},
                                                      {4, R::SameRow},
                                                      {5, R::SameColumn}}));
}

TEST(BuildGraph, MatchesPairwiseDefinitionOracle) {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 30; ++trial) {
    const std::size_t nr = 1 + rng() % 7, nc = 1 + rng() % 6;
    auto g = build_graph(grid(nr, nc), "q");
    std::vector<Role> roles(g.num_nodes());
    roles[0].question = true;
    for (std::size_t r = 0; r < nr; ++r) {
      roles[1 + r].row_header = true;
      roles[1 + r].row = r;
    }
    for (std::size_t r = 0; r < nr; ++r)
      for (std::size_t c = 0; c < nc; ++c) {
        auto& role = roles[1 + nr + r * nc + c];
        role.row = r;
        role.col = c;
      }
    for (NodeId a = 0; a < g.num_nodes(); ++a) {
      std::vector<Neighbor> expected;
      for (NodeId b = 0; b < g.num_nodes(); ++b) {
        if (a == b) continue;
        int rel = oracle_relation(roles[a], roles[b]);
        if (rel >= 0) expected.push_back({b, static_cast<RelationKind>(rel)});
      }
      EXPECT_EQ(g.neighborhood(a), expected) << "node " << a << " in " << nr << "x" << nc;
    }
  }
}

TEST(BuildGraph, EdgesAreSymmetricWithoutSelfLoopsOrDuplicates) {
  auto g = build_graph(grid(5, 4), "q");
  std::set<std::tuple<NodeId, NodeId>> seen;
  std::map<std::pair<NodeId, NodeId>, RelationKind> rel;
  for (const auto& e : g.edges()) {
    EXPECT_NE(e.src, e.dst);
    EXPECT_NE(e.relation, RelationKind::SelfLoop);
    EXPECT_TRUE(seen.insert({e.src, e.dst}).second);
    rel[{e.src, e.dst}] = e.relation;
  }
  for (const auto& [k, r] : rel) {
    auto it = rel.find({k.second, k.first});
    ASSERT_NE(it, rel.end());
    EXPECT_EQ(it->second, r);
  }
}

TEST(BuildGraph, EmptyTableFails) { EXPECT_THROW(build_graph(Table(), "q"), Error); }

TEST(BuildGraph, DebugDumpListsNodesThenEdges) {
  auto g = build_graph(grid(1, 1), "q");
  auto dump = g.debug_dump();
  std::size_t lines = std::count(dump.begin(), dump.end(), '\n');
  EXPECT_EQ(lines, g.num_nodes() + g.edges().size());
  EXPECT_EQ(dump.rfind("0 question", 0), 0u);
}
