#include "tagqa/graph.hpp"

#include <algorithm>
#include <sstream>

namespace tagqa {

const char* to_string(NodeKind k) {
  switch (k) {
    case NodeKind::Question: return "question";
    case NodeKind::RowHeader: return "row_header";
    case NodeKind::ColumnHeader: return "column_header";
    case NodeKind::DataCell: return "cell";
  }
  return "?";
}

const char* to_string(RelationKind r) {
  switch (r) {
    case RelationKind::SameRow: return "same_row";
    case RelationKind::SameColumn: return "same_column";
    case RelationKind::QuestionToCell: return "question_to_cell";
    case RelationKind::SelfLoop: return "self_loop";
  }
  return "?";
}

NodeId TableGraph::cell_node(CellCoord c) const {
  if (c.row >= n_rows() || c.col >= n_cols()) throw Error("cell coordinate outside the graph's table");
  return first_cell_ + c.row * n_cols() + c.col;
}

const std::vector<Neighbor>& TableGraph::neighborhood(NodeId id) const {
  if (id >= adjacency_.size()) throw Error("unknown node id " + std::to_string(id));
  return adjacency_[id];
}

std::string TableGraph::debug_dump() const {
  std::ostringstream os;
  for (const auto& n : nodes_) {
    os << n.id << ' ' << to_string(n.kind) << ' ';
    if (n.coord)
      os << n.coord->row << ' ' << n.coord->col;
    else
      os << "- -";
    os << ' ' << n.text << '\n';
  }
  for (const auto& e : edges_) os << e.src << ' ' << e.dst << ' ' << to_string(e.relation) << '\n';
  return os.str();
}

TableGraph build_graph(const Table& table, const std::string& question) {
  if (table.n_rows() == 0 || table.n_cols() == 0) throw Error("cannot build a graph from an empty table");
  const std::size_t rows = table.n_rows(), cols = table.n_cols();
  TableGraph g;
  g.nodes_.push_back({0, NodeKind::Question, question, std::nullopt});
  for (std::size_t r = 0; r < rows; ++r) {
    g.row_headers_.push_back(g.nodes_.size());
    g.nodes_.push_back({g.nodes_.size(), NodeKind::RowHeader, "row " + std::to_string(r), std::nullopt});
  }
  g.first_cell_ = g.nodes_.size();
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      NodeKind kind = r == 0 ? NodeKind::ColumnHeader : NodeKind::DataCell;
      g.nodes_.push_back({g.nodes_.size(), kind, table.cell(r, c), CellCoord{r, c}});
    }
  }
  for (std::size_t c = 0; c < cols; ++c) g.column_headers_.push_back(g.first_cell_ + c);

  auto add = [&](NodeId a, NodeId b, RelationKind rel) {
    g.edges_.push_back({a, b, rel});
    g.edges_.push_back({b, a, rel});
  };
  auto clique = [&](const std::vector<NodeId>& members, RelationKind rel) {
    for (std::size_t i = 0; i < members.size(); ++i)
      for (std::size_t j = i + 1; j < members.size(); ++j) add(members[i], members[j], rel);
  };

  for (std::size_t r = 0; r < rows; ++r) {
    std::vector<NodeId> members{g.row_headers_[r]};
    for (std::size_t c = 0; c < cols; ++c) members.push_back(g.cell_node({r, c}));
    clique(members, RelationKind::SameRow);
  }
  for (std::size_t c = 0; c < cols; ++c) {
    std::vector<NodeId> members;
    for (std::size_t r = 0; r < rows; ++r) members.push_back(g.cell_node({r, c}));
    clique(members, RelationKind::SameColumn);
  }
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c) add(g.question_id(), g.cell_node({r, c}), RelationKind::QuestionToCell);

  g.adjacency_.assign(g.nodes_.size(), {});
  for (const auto& e : g.edges_) g.adjacency_[e.src].push_back({e.dst, e.relation});
  for (auto& adj : g.adjacency_)
    std::sort(adj.begin(), adj.end(), [](const Neighbor& a, const Neighbor& b) {
      return a.id != b.id ? a.id < b.id : a.relation < b.relation;
    });
  return g;
}

}  // namespace tagqa
