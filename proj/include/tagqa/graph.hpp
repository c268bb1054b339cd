#pragma once

#include <cstddef>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "tagqa/table.hpp"

namespace tagqa {

enum class NodeKind : int { Question = 0, RowHeader = 1, ColumnHeader = 2, DataCell = 3 };
inline constexpr int kNumNodeKinds = 4;

/// SelfLoop never appears in a TableGraph; the attention layer uses it for
/// the (t, t) term of its neighbourhood sum.
enum class RelationKind : int { SameRow = 0, SameColumn = 1, QuestionToCell = 2, SelfLoop = 3 };
inline constexpr int kNumRelations = 4;

const char* to_string(NodeKind k);
const char* to_string(RelationKind r);

using NodeId = std::size_t;

struct GraphNode {
  NodeId id;
  NodeKind kind;
  std::string text;
  std::optional<CellCoord> coord;
};

struct GraphEdge {
  NodeId src;
  NodeId dst;
  RelationKind relation;
};

struct Neighbor {
  NodeId id;
  RelationKind relation;
  friend bool operator==(const Neighbor&, const Neighbor&) = default;
};

/// Node ids: 0 is the question, 1..n_rows are the row headers (row i is
/// 1 + i), then the cells in row-major order. Edges are stored in both
/// directions.
class TableGraph {
 public:
  const std::vector<GraphNode>& nodes() const { return nodes_; }
  const std::vector<GraphEdge>& edges() const { return edges_; }
  std::size_t num_nodes() const { return nodes_.size(); }
  /// Each undirected edge counted once.
  std::size_t num_undirected_edges() const { return edges_.size() / 2; }

  std::size_t n_rows() const { return row_headers_.size(); }
  std::size_t n_cols() const { return column_headers_.size(); }

  NodeId question_id() const { return 0; }
  NodeId row_header(std::size_t row) const { return row_headers_.at(row); }
  NodeId column_header(std::size_t col) const { return column_headers_.at(col); }
  NodeId cell_node(CellCoord c) const;
  const std::vector<NodeId>& row_headers() const { return row_headers_; }
  const std::vector<NodeId>& column_headers() const { return column_headers_; }

  /// Neighbours in ascending id order.
  const std::vector<Neighbor>& neighborhood(NodeId id) const;

  /// One line per node (`id kind row col text`) then one per directed edge
  /// (`src dst relation`).
  std::string debug_dump() const;

  friend TableGraph build_graph(const Table& table, const std::string& question);

 private:
  std::vector<GraphNode> nodes_;
  std::vector<GraphEdge> edges_;
  std::vector<std::vector<Neighbor>> adjacency_;
  std::vector<NodeId> row_headers_;
  std::vector<NodeId> column_headers_;
  std::size_t first_cell_ = 0;
};

TableGraph build_graph(const Table& table, const std::string& question);

}  // namespace tagqa
