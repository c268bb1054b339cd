#include "tagqa/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <unordered_map>

#include "json.hpp"

namespace tagqa {

using nlohmann::json;

PRF PRF::from(double precision, double recall) {
  PRF r{precision, recall, 0.0};
  if (precision + recall > 0.0) r.f1 = 2.0 * precision * recall / (precision + recall);
  return r;
}

PRF selection_prf(const std::vector<CellCoord>& predicted, const std::vector<CellCoord>& gold) {
  std::set<CellCoord> p(predicted.begin(), predicted.end());
  std::set<CellCoord> g(gold.begin(), gold.end());
  std::size_t hit = 0;
  for (const auto& c : p) hit += g.count(c);
  double prec = p.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(p.size());
  double rec = g.empty() ? 0.0 : static_cast<double>(hit) / static_cast<double>(g.size());
  return PRF::from(prec, rec);
}

namespace {

using Tokens = std::vector<std::string>;
using NgramCounts = std::map<Tokens, std::size_t>;

NgramCounts ngram_counts(const Tokens& toks, std::size_t n) {
  NgramCounts out;
  if (toks.size() < n) return out;
  for (std::size_t i = 0; i + n <= toks.size(); ++i) ++out[Tokens(toks.begin() + static_cast<long>(i),
                                                                  toks.begin() + static_cast<long>(i + n))];
  return out;
}

std::size_t lcs_length(const Tokens& a, const Tokens& b) {
  std::vector<std::size_t> prev(b.size() + 1, 0), cur(b.size() + 1, 0);
  for (std::size_t i = 1; i <= a.size(); ++i) {
    for (std::size_t j = 1; j <= b.size(); ++j)
      cur[j] = a[i - 1] == b[j - 1] ? prev[j - 1] + 1 : std::max(prev[j], cur[j - 1]);
    std::swap(prev, cur);
  }
  return prev[b.size()];
}

double geometric_mean(const std::vector<double>& xs) {
  if (xs.empty()) return 0.0;
  double s = 0.0;
  for (double x : xs) {
    if (x <= 0.0) return 0.0;
    s += std::log(x);
  }
  return std::exp(s / static_cast<double>(xs.size()));
}

struct TableTokens {
  std::set<std::string> values;            // every value token
  std::vector<Tokens> entries;             // value tokens per non-empty entry
};

TableTokens table_tokens(const TableEntries& table) {
  TableTokens t;
  for (const auto& [header, value] : table) {
    auto toks = tokenize(value);
    if (toks.empty()) continue;
    t.values.insert(toks.begin(), toks.end());
    t.entries.push_back(std::move(toks));
  }
  return t;
}

double entailment(const Tokens& ngram, const std::set<std::string>& table_values) {
  std::size_t in = 0;
  for (const auto& tok : ngram) in += table_values.count(tok);
  return static_cast<double>(in) / static_cast<double>(ngram.size());
}

}  // namespace

double bleu4(const std::vector<std::string>& candidates, const std::vector<std::string>& references) {
  if (candidates.size() != references.size())
    throw Error("BLEU needs one reference per candidate (" + std::to_string(candidates.size()) + " vs " +
                std::to_string(references.size()) + ")");
  std::array<double, 4> matches{}, totals{};
  double cand_len = 0, ref_len = 0;
  for (std::size_t i = 0; i < candidates.size(); ++i) {
    auto c = tokenize(candidates[i]);
    auto r = tokenize(references[i]);
    cand_len += static_cast<double>(c.size());
    ref_len += static_cast<double>(r.size());
    for (std::size_t n = 1; n <= 4; ++n) {
      auto cc = ngram_counts(c, n);
      auto rc = ngram_counts(r, n);
      for (const auto& [g, k] : cc) {
        auto it = rc.find(g);
        matches[n - 1] += static_cast<double>(std::min(k, it == rc.end() ? 0 : it->second));
        totals[n - 1] += static_cast<double>(k);
      }
    }
  }
  if (cand_len == 0 || matches[0] == 0) return 0.0;
  double log_sum = std::log(matches[0] / totals[0]);
  for (std::size_t n = 1; n < 4; ++n) {
    double p = matches[n] > 0 ? matches[n] / totals[n] : 1.0 / (totals[n] + 1.0);
    log_sum += std::log(p);
  }
  const double bp = cand_len > ref_len ? 1.0 : std::exp(1.0 - ref_len / cand_len);
  return 100.0 * bp * std::exp(log_sum / 4.0);
}

double rouge_l(const std::string& candidate, const std::string& reference) {
  auto c = tokenize(candidate);
  auto r = tokenize(reference);
  if (c.empty() || r.empty()) return 0.0;
  const double lcs = static_cast<double>(lcs_length(c, r));
  return PRF::from(lcs / static_cast<double>(c.size()), lcs / static_cast<double>(r.size())).f1;
}

namespace {

std::size_t count_chunks(const std::vector<long>& link) {
  std::size_t chunks = 0;
  for (std::size_t i = 0; i < link.size(); ++i)
    if (link[i] >= 0 && (i == 0 || link[i - 1] < 0 || link[i] != link[i - 1] + 1)) ++chunks;
  return chunks;
}

/// Longest shared runs first; always reaches the maximum match count.
std::vector<long> greedy_alignment(const std::vector<int>& cand, const std::vector<int>& ref) {
  std::vector<long> link(cand.size(), -1);
  std::vector<bool> ref_used(ref.size(), false);
  while (true) {
    std::size_t best_len = 0, best_i = 0, best_j = 0;
    for (std::size_t i = 0; i < cand.size(); ++i) {
      if (link[i] >= 0) continue;
      for (std::size_t j = 0; j < ref.size(); ++j) {
        std::size_t len = 0;
        while (i + len < cand.size() && j + len < ref.size() && link[i + len] < 0 && !ref_used[j + len] &&
               cand[i + len] == ref[j + len])
          ++len;
        if (len > best_len) {
          best_len = len;
          best_i = i;
          best_j = j;
        }
      }
    }
    if (best_len == 0) break;
    for (std::size_t k = 0; k < best_len; ++k) {
      link[best_i + k] = static_cast<long>(best_j + k);
      ref_used[best_j + k] = true;
    }
  }
  return link;
}

/// Depth-first search over candidate positions. A token may stay unmatched
/// only while enough later copies remain to use every free reference copy,
/// so every leaf has the maximum match count.
class ChunkSearch {
 public:
  ChunkSearch(const std::vector<int>& cand, const std::vector<int>& ref, std::vector<long> seed)
      : cand_(cand), ref_(ref), best_(std::move(seed)), best_chunks_(count_chunks(best_)),
        link_(cand.size(), -1), used_(ref.size(), false) {
    int vocab = 0;
    for (int t : cand) vocab = std::max(vocab, t + 1);
    for (int t : ref) vocab = std::max(vocab, t + 1);
    cand_left_.assign(static_cast<std::size_t>(vocab), 0);
    ref_free_.assign(static_cast<std::size_t>(vocab), 0);
    positions_.resize(static_cast<std::size_t>(vocab));
    for (int t : cand) ++cand_left_[static_cast<std::size_t>(t)];
    for (std::size_t j = 0; j < ref.size(); ++j) {
      ++ref_free_[static_cast<std::size_t>(ref[j])];
      positions_[static_cast<std::size_t>(ref[j])].push_back(j);
    }
  }

  std::vector<long> run() {
    if (best_chunks_ > 1) visit(0, 0);
    return best_;
  }

 private:
  static constexpr std::size_t kBudget = 2'000'000;

  void visit(std::size_t i, std::size_t chunks) {
    if (++nodes_ > kBudget || chunks >= best_chunks_) return;
    if (i == cand_.size()) {
      best_ = link_;
      best_chunks_ = chunks;
      return;
    }
    const auto w = static_cast<std::size_t>(cand_[i]);
    --cand_left_[w];
    const long prev = i > 0 ? link_[i - 1] : -1;
    // continuing the current chunk first finds good bounds early
    if (prev >= 0 && static_cast<std::size_t>(prev + 1) < ref_.size() && !used_[static_cast<std::size_t>(prev + 1)] &&
        ref_[static_cast<std::size_t>(prev + 1)] == cand_[i])
      take(i, static_cast<std::size_t>(prev + 1), chunks);
    for (std::size_t j : positions_[w]) {
      if (used_[j] || static_cast<long>(j) == prev + 1) continue;
      take(i, j, chunks + 1);
    }
    if (cand_left_[w] >= ref_free_[w]) visit(i + 1, chunks);
    ++cand_left_[w];
  }

  void take(std::size_t i, std::size_t j, std::size_t chunks) {
    const auto w = static_cast<std::size_t>(cand_[i]);
    used_[j] = true;
    --ref_free_[w];
    link_[i] = static_cast<long>(j);
    visit(i + 1, chunks);
    link_[i] = -1;
    ++ref_free_[w];
    used_[j] = false;
  }

  const std::vector<int>& cand_;
  const std::vector<int>& ref_;
  std::vector<long> best_;
  std::size_t best_chunks_;
  std::vector<long> link_;
  std::vector<bool> used_;
  std::vector<std::size_t> cand_left_, ref_free_;
  std::vector<std::vector<std::size_t>> positions_;
  std::size_t nodes_ = 0;
};

}  // namespace

MeteorAlignment meteor_align(const Tokens& cand, const Tokens& ref) {
  std::map<std::string, int> ids;
  auto encode = [&](const Tokens& toks) {
    std::vector<int> out;
    out.reserve(toks.size());
    for (const auto& t : toks) out.push_back(ids.emplace(t, static_cast<int>(ids.size())).first->second);
    return out;
  };
  const auto c = encode(cand);
  const auto r = encode(ref);
  auto link = ChunkSearch(c, r, greedy_alignment(c, r)).run();
  MeteorAlignment a;
  for (long l : link) a.matches += l >= 0;
  a.chunks = count_chunks(link);
  return a;
}

double meteor_simplified(const std::string& candidate, const std::string& reference) {
  auto c = tokenize(candidate);
  auto r = tokenize(reference);
  auto a = meteor_align(c, r);
  if (a.matches == 0) return 0.0;
  const double m = static_cast<double>(a.matches);
  const double p = m / static_cast<double>(c.size());
  const double rec = m / static_cast<double>(r.size());
  const double fmean = 10.0 * p * rec / (rec + 9.0 * p);
  const double penalty = 0.5 * std::pow(static_cast<double>(a.chunks) / m, 3.0);
  return fmean * (1.0 - penalty);
}

PRF parent(const std::string& candidate, const std::string& reference, const TableEntries& table) {
  auto c = tokenize(candidate);
  if (c.empty()) return {};
  auto r = tokenize(reference);
  const auto tt = table_tokens(table);

  std::vector<double> precisions, ref_recalls;
  for (std::size_t n = 1; n <= kParentMaxOrder; ++n) {
    auto cc = ngram_counts(c, n);
    auto rc = ngram_counts(r, n);
    if (!cc.empty()) {
      double num = 0, den = 0;
      for (const auto& [g, k] : cc) {
        auto it = rc.find(g);
        const double in_ref = std::min(1.0, (it == rc.end() ? 0.0 : static_cast<double>(it->second)) /
                                                static_cast<double>(k));
        num += static_cast<double>(k) * (in_ref + (1.0 - in_ref) * entailment(g, tt.values));
        den += static_cast<double>(k);
      }
      precisions.push_back(num / den);
    }
    if (!rc.empty()) {
      double num = 0, den = 0;
      for (const auto& [g, k] : rc) {
        auto it = cc.find(g);
        const double in_cand = std::min(1.0, (it == cc.end() ? 0.0 : static_cast<double>(it->second)) /
                                                 static_cast<double>(k));
        const double w = entailment(g, tt.values);
        num += static_cast<double>(k) * w * in_cand;
        den += static_cast<double>(k) * w;
      }
      ref_recalls.push_back(den > 0 ? num / den : 1.0);
    }
  }
  const double prec = geometric_mean(precisions);
  const double ref_rec = ref_recalls.empty() ? 1.0 : geometric_mean(ref_recalls);

  std::set<std::string> cand_set(c.begin(), c.end());
  double table_rec = 0.0;
  for (const auto& entry : tt.entries) {
    std::size_t hit = 0;
    for (const auto& tok : entry) hit += cand_set.count(tok);
    table_rec += static_cast<double>(hit) / static_cast<double>(entry.size());
  }
  if (!tt.entries.empty()) table_rec /= static_cast<double>(tt.entries.size());

  double rec = 0.0;
  if (ref_rec > 0.0 && table_rec > 0.0)
    rec = std::exp((1.0 - kParentLambda) * std::log(ref_rec) + kParentLambda * std::log(table_rec));
  return PRF::from(prec, rec);
}

PRF parent_t(const std::string& candidate, const TableEntries& table) {
  auto c = tokenize(candidate);
  if (c.empty()) return {};
  const auto tt = table_tokens(table);
  std::vector<double> precisions;
  for (std::size_t n = 1; n <= kParentMaxOrder; ++n) {
    auto cc = ngram_counts(c, n);
    if (cc.empty()) continue;
    double num = 0, den = 0;
    for (const auto& [g, k] : cc) {
      num += static_cast<double>(k) * entailment(g, tt.values);
      den += static_cast<double>(k);
    }
    precisions.push_back(num / den);
  }
  std::set<std::string> cand_set(c.begin(), c.end());
  std::size_t covered = 0;
  for (const auto& tok : tt.values) covered += cand_set.count(tok);
  const double rec = tt.values.empty() ? 0.0 : static_cast<double>(covered) / static_cast<double>(tt.values.size());
  return PRF::from(geometric_mean(precisions), rec);
}

TableEntries table_entries(const QAExample& example) {
  TableEntries out;
  const auto& t = example.table;
  if (!example.gold_cells.empty()) {
    auto cells = example.gold_cells;
    std::sort(cells.begin(), cells.end());
    cells.erase(std::unique(cells.begin(), cells.end()), cells.end());
    for (const auto& c : cells) out.emplace_back(t.header(c.col), t.cell(c));
    return out;
  }
  for (std::size_t r = 1; r < t.n_rows(); ++r)
    for (std::size_t c = 0; c < t.n_cols(); ++c) out.emplace_back(t.header(c), t.cell(r, c));
  return out;
}

std::string serialize_prediction(const Prediction& p) {
  json j;
  j["id"] = p.id;
  json cells = json::array();
  for (const auto& c : p.selected_cells) cells.push_back({c.row, c.col});
  j["selected_cells"] = cells;
  j["retrieved"] = p.retrieved;
  j["answer"] = p.answer;
  return j.dump();
}

Prediction parse_prediction(const std::string& line) {
  try {
    auto j = json::parse(line);
    Prediction p;
    p.id = j.at("id").get<std::string>();
    for (const auto& c : j.at("selected_cells")) p.selected_cells.push_back({c.at(0).get<std::size_t>(), c.at(1).get<std::size_t>()});
    p.retrieved = j.at("retrieved").get<std::string>();
    p.answer = j.at("answer").get<std::string>();
    return p;
  } catch (const json::exception& e) {
    throw Error(std::string("malformed prediction record: ") + e.what());
  }
}

std::vector<Prediction> load_predictions(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open predictions file " + path);
  std::vector<Prediction> out;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      out.push_back(parse_prediction(line));
    } catch (const Error& e) {
      throw Error(path + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
  return out;
}

std::string EvalReport::to_json() const {
  json j = json::object();
  j["bleu4"] = bleu4;
  j["meteor"] = meteor;
  j["rougeL"] = rougeL;
  j["parent_p"] = parent.precision;
  j["parent_r"] = parent.recall;
  j["parent_f"] = parent.f1;
  j["parent_t_p"] = parent_t.precision;
  j["parent_t_r"] = parent_t.recall;
  j["parent_t_f"] = parent_t.f1;
  j["sel_p"] = selection.precision;
  j["sel_r"] = selection.recall;
  j["sel_f"] = selection.f1;
  return j.dump(2);
}

EvalReport EvalReport::from_json(const std::string& text) {
  auto j = json::parse(text);
  EvalReport r;
  r.bleu4 = j.at("bleu4");
  r.meteor = j.at("meteor");
  r.rougeL = j.at("rougeL");
  r.parent = {j.at("parent_p"), j.at("parent_r"), j.at("parent_f")};
  r.parent_t = {j.at("parent_t_p"), j.at("parent_t_r"), j.at("parent_t_f")};
  r.selection = {j.at("sel_p"), j.at("sel_r"), j.at("sel_f")};
  return r;
}

EvalReport evaluate_run(const std::vector<Prediction>& predictions, const Dataset& dataset) {
  if (predictions.empty()) throw Error("no predictions to evaluate");
  std::unordered_map<std::string, const Prediction*> by_id;
  for (const auto& p : predictions)
    if (!by_id.emplace(p.id, &p).second) throw Error("duplicate prediction id '" + p.id + "'");
  std::unordered_map<std::string, std::size_t> known;
  for (std::size_t i = 0; i < dataset.examples.size(); ++i) known.emplace(dataset.examples[i].id, i);
  for (const auto& p : predictions)
    if (!known.count(p.id)) throw Error("prediction id '" + p.id + "' is not in the " + to_string(dataset.split) + " split");

  EvalReport r;
  std::vector<std::string> cands, refs;
  auto add = [](PRF& acc, const PRF& x) {
    acc.precision += x.precision;
    acc.recall += x.recall;
    acc.f1 += x.f1;
  };
  for (const auto& ex : dataset.examples) {
    auto it = by_id.find(ex.id);
    if (it == by_id.end()) continue;
    const Prediction& p = *it->second;
    ++r.n_examples;
    add(r.selection, selection_prf(p.selected_cells, ex.gold_cells));
    cands.push_back(p.answer);
    refs.push_back(ex.answer);
    r.rougeL += rouge_l(p.answer, ex.answer);
    r.meteor += meteor_simplified(p.answer, ex.answer);
    const auto entries = table_entries(ex);
    add(r.parent, parent(p.answer, ex.answer, entries));
    add(r.parent_t, parent_t(p.answer, entries));
  }
  const double n = static_cast<double>(r.n_examples);
  auto scale = [n](PRF& x) {
    x.precision /= n;
    x.recall /= n;
    x.f1 /= n;
  };
  scale(r.selection);
  scale(r.parent);
  scale(r.parent_t);
  r.rougeL /= n;
  r.meteor /= n;
  r.bleu4 = bleu4(cands, refs);
  return r;
}

}  // namespace tagqa
