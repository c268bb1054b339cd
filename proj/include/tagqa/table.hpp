#pragma once

#include <cstddef>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include "tagqa/text.hpp"

namespace tagqa {

inline constexpr std::size_t kDefaultCellCap = 200;

struct CellCoord {
  std::size_t row = 0;
  std::size_t col = 0;

  friend auto operator<=>(const CellCoord&, const CellCoord&) = default;
};

/// Rectangular grid of cell texts. Row 0 holds the column headers.
class Table {
 public:
  Table() = default;
  /// Pads ragged rows with empty cells up to the widest row.
  explicit Table(std::vector<std::vector<std::string>> rows);

  std::size_t n_rows() const { return cells_.size(); }
  std::size_t n_cols() const { return cells_.empty() ? 0 : cells_.front().size(); }
  std::size_t n_cells() const { return n_rows() * n_cols(); }

  const std::string& cell(std::size_t row, std::size_t col) const { return cells_.at(row).at(col); }
  const std::string& cell(CellCoord c) const { return cell(c.row, c.col); }
  const std::string& header(std::size_t col) const { return cell(0, col); }
  const std::vector<std::vector<std::string>>& rows() const { return cells_; }

  bool contains(CellCoord c) const { return c.row < n_rows() && c.col < n_cols(); }
  bool truncated() const { return truncated_; }
  void set_truncated(bool t) { truncated_ = t; }

  friend bool operator==(const Table& a, const Table& b) {
    return a.cells_ == b.cells_ && a.truncated_ == b.truncated_;
  }

 private:
  std::vector<std::vector<std::string>> cells_;
  bool truncated_ = false;
};

struct QAExample {
  std::string id;
  std::string question;
  Table table;
  std::vector<CellCoord> gold_cells;
  std::string answer;
  std::optional<std::string> page_title;
  std::optional<std::string> section_title;

  friend bool operator==(const QAExample&, const QAExample&) = default;
};

enum class Split { Train, Dev, Test };

std::string to_string(Split s);
Split parse_split(const std::string& s);

struct Dataset {
  Split split = Split::Train;
  std::vector<QAExample> examples;

  std::size_t size() const { return examples.size(); }
  bool empty() const { return examples.empty(); }
  friend bool operator==(const Dataset&, const Dataset&) = default;
};

class ParseError : public Error {
 public:
  ParseError(std::size_t line, const std::string& what);
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Keeps the header row plus the longest prefix of data rows whose total
/// cell count fits in `cap`. Columns are never dropped.
Table truncate_table(const Table& table, std::size_t cap = kDefaultCellCap);

/// Reads one JSON record per line. Blank lines are skipped but still counted
/// for error line numbers. Highlighted cells beyond a truncation are dropped.
Dataset parse_dataset(std::istream& in, Split split, std::size_t cell_cap = kDefaultCellCap);
Dataset load_dataset(const std::string& path, Split split, std::size_t cell_cap = kDefaultCellCap);

std::string serialize_example(const QAExample& ex);
void write_dataset(std::ostream& out, const Dataset& ds);

struct RowColLabels {
  std::vector<bool> rows;
  std::vector<bool> cols;
};

/// Row i (column j) is positive iff some gold cell lies in it.
RowColLabels derive_row_col_labels(const QAExample& example);

/// "{header} is {value}" per cell, row-major, joined with " [SEP] ".
std::string linearize_cells(const Table& table, std::vector<CellCoord> coords);

}  // namespace tagqa
