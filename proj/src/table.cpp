#include "tagqa/table.hpp"

#include <algorithm>
#include <fstream>
#include <set>

#include "json.hpp"

namespace tagqa {

using nlohmann::json;

Table::Table(std::vector<std::vector<std::string>> rows) : cells_(std::move(rows)) {
  std::size_t width = 0;
  for (const auto& r : cells_) width = std::max(width, r.size());
  for (auto& r : cells_) r.resize(width);
}

std::string to_string(Split s) {
  switch (s) {
    case Split::Train: return "train";
    case Split::Dev: return "dev";
    case Split::Test: return "test";
  }
  return "train";
}

Split parse_split(const std::string& s) {
  if (s == "train") return Split::Train;
  if (s == "dev") return Split::Dev;
  if (s == "test") return Split::Test;
  throw Error("unknown split '" + s + "' (expected train, dev or test)");
}

ParseError::ParseError(std::size_t line, const std::string& what)
    : Error("line " + std::to_string(line) + ": " + what), line_(line) {}

Table truncate_table(const Table& table, std::size_t cap) {
  const std::size_t cols = table.n_cols();
  if (cap < cols)
    throw Error("cell cap " + std::to_string(cap) + " is smaller than the column count " +
                std::to_string(cols));
  if (table.n_cells() <= cap) return table;
  const std::size_t keep_rows = cap / cols;
  std::vector<std::vector<std::string>> rows(table.rows().begin(),
                                             table.rows().begin() + static_cast<long>(keep_rows));
  Table out(std::move(rows));
  out.set_truncated(true);
  return out;
}

namespace {

QAExample example_from_json(const json& j, std::size_t line, std::size_t cap) {
  QAExample ex;
  ex.id = j.at("id").get<std::string>();
  ex.question = j.at("question").get<std::string>();
  ex.answer = j.at("answer").get<std::string>();
  auto rows = j.at("table").get<std::vector<std::vector<std::string>>>();
  if (rows.empty()) throw ParseError(line, "example '" + ex.id + "' has an empty table");
  Table full(std::move(rows));
  if (full.n_cols() == 0) throw ParseError(line, "example '" + ex.id + "' has no columns");
  for (const auto& pair : j.at("highlighted_cells")) {
    if (!pair.is_array() || pair.size() != 2)
      throw ParseError(line, "example '" + ex.id + "': highlighted cell must be a [row, col] pair");
    long long r = pair[0].get<long long>();
    long long c = pair[1].get<long long>();
    if (r < 0 || c < 0 || !full.contains({static_cast<std::size_t>(r), static_cast<std::size_t>(c)}))
      throw Error("example '" + ex.id + "': highlighted cell [" + std::to_string(r) + ", " +
                  std::to_string(c) + "] is outside the " + std::to_string(full.n_rows()) + "x" +
                  std::to_string(full.n_cols()) + " table");
    ex.gold_cells.push_back({static_cast<std::size_t>(r), static_cast<std::size_t>(c)});
  }
  ex.table = truncate_table(full, cap);
  if (j.value("truncated", false)) ex.table.set_truncated(true);
  std::erase_if(ex.gold_cells, [&](const CellCoord& cc) { return !ex.table.contains(cc); });
  if (j.contains("page_title")) ex.page_title = j["page_title"].get<std::string>();
  if (j.contains("section_title")) ex.section_title = j["section_title"].get<std::string>();
  return ex;
}

}  // namespace

Dataset parse_dataset(std::istream& in, Split split, std::size_t cell_cap) {
  Dataset ds;
  ds.split = split;
  std::set<std::string> seen;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    QAExample ex;
    try {
      ex = example_from_json(json::parse(line), lineno, cell_cap);
    } catch (const json::exception& e) {
      throw ParseError(lineno, std::string("malformed record: ") + e.what());
    }
    if (!seen.insert(ex.id).second) throw ParseError(lineno, "duplicate example id '" + ex.id + "'");
    ds.examples.push_back(std::move(ex));
  }
  return ds;
}

Dataset load_dataset(const std::string& path, Split split, std::size_t cell_cap) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open dataset file " + path);
  try {
    return parse_dataset(in, split, cell_cap);
  } catch (const ParseError& e) {
    throw Error(path + ": " + e.what());
  }
}

std::string serialize_example(const QAExample& ex) {
  json j;
  j["id"] = ex.id;
  j["question"] = ex.question;
  j["table"] = ex.table.rows();
  json cells = json::array();
  for (const auto& c : ex.gold_cells) cells.push_back({c.row, c.col});
  j["highlighted_cells"] = cells;
  j["answer"] = ex.answer;
  if (ex.page_title) j["page_title"] = *ex.page_title;
  if (ex.section_title) j["section_title"] = *ex.section_title;
  if (ex.table.truncated()) j["truncated"] = true;
  return j.dump();
}

void write_dataset(std::ostream& out, const Dataset& ds) {
  for (const auto& ex : ds.examples) out << serialize_example(ex) << '\n';
}

RowColLabels derive_row_col_labels(const QAExample& example) {
  if (example.gold_cells.empty())
    throw Error("example '" + example.id + "' has no highlighted cells to learn from");
  RowColLabels labels{std::vector<bool>(example.table.n_rows(), false),
                      std::vector<bool>(example.table.n_cols(), false)};
  for (const auto& c : example.gold_cells) {
    labels.rows.at(c.row) = true;
    labels.cols.at(c.col) = true;
  }
  return labels;
}

std::string linearize_cells(const Table& table, std::vector<CellCoord> coords) {
  std::sort(coords.begin(), coords.end());
  std::vector<std::string> slots;
  slots.reserve(coords.size());
  for (const auto& c : coords) {
    if (!table.contains(c))
      throw Error("cell (" + std::to_string(c.row) + ", " + std::to_string(c.col) + ") is out of range");
    if (c.row == 0) throw Error("cannot linearize a header cell (column " + std::to_string(c.col) + ")");
    slots.push_back(table.header(c.col) + " is " + table.cell(c));
  }
  return join(slots, " [SEP] ");
}

}  // namespace tagqa
