#pragma once

#include <string>
#include <utility>
#include <vector>

#include "tagqa/table.hpp"

namespace tagqa {

struct PRF {
  double precision = 0.0;
  double recall = 0.0;
  double f1 = 0.0;

  /// f1 = 2PR/(P+R), or 0 when P+R = 0.
  static PRF from(double precision, double recall);
};

/// Set semantics: duplicates in either list are ignored.
PRF selection_prf(const std::vector<CellCoord>& predicted, const std::vector<CellCoord>& gold);

/// Corpus BLEU-4 on a 0-100 scale. Orders n >= 2 with no clipped match use
/// add-one smoothing so that short answers do not zero the geometric mean.
double bleu4(const std::vector<std::string>& candidates, const std::vector<std::string>& references);

/// LCS-based F1 in [0, 1].
double rouge_l(const std::string& candidate, const std::string& reference);

/// Exact-match METEOR: no stemming or synonyms. The alignment has the
/// maximum number of matches and, among those, the fewest chunks. The chunk
/// search is exact up to a fixed node budget, after which the best alignment
/// found so far (never worse than longest-segment-first) is used.
double meteor_simplified(const std::string& candidate, const std::string& reference);

struct MeteorAlignment {
  std::size_t matches = 0;
  std::size_t chunks = 0;
};
MeteorAlignment meteor_align(const std::vector<std::string>& candidate, const std::vector<std::string>& reference);

/// (header, value) pairs describing the table facts a generated answer may use.
using TableEntries = std::vector<std::pair<std::string, std::string>>;

inline constexpr int kParentMaxOrder = 4;
inline constexpr double kParentLambda = 0.5;

/// PARENT with the word-overlap entailment model. Orders the candidate (or
/// reference) is too short to contain are left out of the geometric means.
PRF parent(const std::string& candidate, const std::string& reference, const TableEntries& table);

/// Table-only PARENT: entailed precision against the table, recall as the
/// fraction of distinct table value tokens mentioned by the candidate.
PRF parent_t(const std::string& candidate, const TableEntries& table);

/// Highlighted cells as (header, value) entries, or every data cell when the
/// example has no highlights.
TableEntries table_entries(const QAExample& example);

struct Prediction {
  std::string id;
  std::vector<CellCoord> selected_cells;
  std::string retrieved;
  std::string answer;
  friend bool operator==(const Prediction&, const Prediction&) = default;
};

std::string serialize_prediction(const Prediction& p);
Prediction parse_prediction(const std::string& line);
std::vector<Prediction> load_predictions(const std::string& path);

struct EvalReport {
  double bleu4 = 0;
  double meteor = 0;
  double rougeL = 0;
  PRF parent;
  PRF parent_t;
  PRF selection;
  std::size_t n_examples = 0;

  /// Flat JSON object with fixed key names.
  std::string to_json() const;
  static EvalReport from_json(const std::string& text);
};

/// Per-example selection PRF averaged over examples; BLEU at corpus level;
/// every other score averaged over examples. Examples are visited in
/// dataset order.
EvalReport evaluate_run(const std::vector<Prediction>& predictions, const Dataset& dataset);

}  // namespace tagqa
