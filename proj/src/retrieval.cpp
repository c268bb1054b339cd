#include "tagqa/retrieval.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <unordered_map>

#include "json.hpp"

namespace tagqa {

using nlohmann::json;

namespace {
constexpr const char* kIndexMagic = "TAGQA-BM25";
constexpr int kIndexVersion = 1;
}  // namespace

void Bm25Params::validate() const {
  if (!(k1 >= 0.0)) throw Error("BM25 k1 must be non-negative");
  if (!(b >= 0.0 && b <= 1.0)) throw Error("BM25 b must lie in [0, 1]");
}

std::size_t InvertedIndex::doc_frequency(const std::string& term) const {
  auto it = postings_.find(term);
  return it == postings_.end() ? 0 : it->second.size();
}

std::optional<std::size_t> InvertedIndex::ordinal(const std::string& doc_id) const {
  auto it = by_id_.find(doc_id);
  if (it == by_id_.end()) return std::nullopt;
  return it->second;
}

double InvertedIndex::idf(const std::string& term) const {
  const double n = static_cast<double>(docs_.size());
  const double df = static_cast<double>(doc_frequency(term));
  return std::log((n - df + 0.5) / (df + 0.5) + 1.0);
}

void InvertedIndex::finalize() {
  by_id_.clear();
  for (std::size_t i = 0; i < docs_.size(); ++i)
    if (!by_id_.emplace(docs_[i].id, static_cast<std::uint32_t>(i)).second)
      throw Error("duplicate document id '" + docs_[i].id + "'");
  double total = 0.0;
  for (auto len : lengths_) total += len;
  avg_len_ = docs_.empty() ? 0.0 : total / static_cast<double>(docs_.size());
}

InvertedIndex build_index(const std::vector<Document>& corpus, const Bm25Params& params) {
  if (corpus.empty()) throw Error("cannot index an empty corpus");
  params.validate();
  InvertedIndex idx;
  idx.params_ = params;
  idx.docs_ = corpus;
  idx.finalize();
  for (std::size_t d = 0; d < corpus.size(); ++d) {
    auto toks = tokenize(corpus[d].text);
    idx.lengths_.push_back(static_cast<std::uint32_t>(toks.size()));
    std::map<std::string, std::uint32_t> tf;
    for (auto& t : toks) ++tf[t];
    for (auto& [term, n] : tf) idx.postings_[term].push_back({static_cast<std::uint32_t>(d), n});
  }
  idx.finalize();
  return idx;
}

std::vector<Document> load_corpus(std::istream& in) {
  std::vector<Document> docs;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (trim(line).empty()) continue;
    try {
      auto j = json::parse(line);
      Document d{j.at("id").get<std::string>(), j.at("text").get<std::string>(), std::nullopt};
      if (j.contains("title") && !j["title"].is_null()) d.title = j["title"].get<std::string>();
      docs.push_back(std::move(d));
    } catch (const json::exception& e) {
      throw Error("corpus line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return docs;
}

std::vector<Document> load_corpus(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open corpus " + path);
  return load_corpus(in);
}

void InvertedIndex::save(std::ostream& out) const {
  out << kIndexMagic << ' ' << kIndexVersion << '\n';
  json header = {{"k1", params_.k1},
                 {"b", params_.b},
                 {"num_docs", docs_.size()},
                 {"avg_doc_length", avg_len_},
                 {"num_terms", postings_.size()}};
  out << header.dump() << '\n';
  for (std::size_t i = 0; i < docs_.size(); ++i) {
    json d = {{"id", docs_[i].id}, {"length", lengths_[i]}, {"text", docs_[i].text}};
    if (docs_[i].title) d["title"] = *docs_[i].title;
    out << d.dump() << '\n';
  }
  for (const auto& [term, list] : postings_) {
    out << term << '\t' << list.size() << '\t';
    for (std::size_t i = 0; i < list.size(); ++i) out << (i ? " " : "") << list[i].doc << ':' << list[i].tf;
    out << '\n';
  }
}

void InvertedIndex::save(const std::string& path) const {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write index " + tmp);
    save(out);
    if (!out) throw Error("failed writing index " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

InvertedIndex InvertedIndex::load(std::istream& in) {
  std::string line;
  if (!std::getline(in, line)) throw Error("empty index file");
  std::istringstream magic(line);
  std::string tag;
  int version = 0;
  magic >> tag >> version;
  if (tag != kIndexMagic) throw Error("not a BM25 index file");
  if (version != kIndexVersion) throw Error("unsupported index version " + std::to_string(version));
  InvertedIndex idx;
  try {
    if (!std::getline(in, line)) throw Error("index header missing");
    auto header = json::parse(line);
    idx.params_ = {header.at("k1"), header.at("b")};
    const std::size_t n_docs = header.at("num_docs");
    const std::size_t n_terms = header.at("num_terms");
    for (std::size_t i = 0; i < n_docs; ++i) {
      if (!std::getline(in, line)) throw Error("index truncated in document table");
      auto d = json::parse(line);
      Document doc{d.at("id"), d.at("text"), std::nullopt};
      if (d.contains("title")) doc.title = d["title"].get<std::string>();
      idx.docs_.push_back(std::move(doc));
      idx.lengths_.push_back(d.at("length"));
    }
    for (std::size_t i = 0; i < n_terms; ++i) {
      if (!std::getline(in, line)) throw Error("index truncated in postings");
      auto t1 = line.find('\t');
      auto t2 = line.find('\t', t1 + 1);
      if (t1 == std::string::npos || t2 == std::string::npos) throw Error("malformed postings line");
      std::string term = line.substr(0, t1);
      const std::size_t df = std::stoul(line.substr(t1 + 1, t2 - t1 - 1));
      std::istringstream ps(line.substr(t2 + 1));
      std::vector<Posting> list;
      std::string item;
      while (ps >> item) {
        auto colon = item.find(':');
        if (colon == std::string::npos) throw Error("malformed posting '" + item + "'");
        list.push_back({static_cast<std::uint32_t>(std::stoul(item.substr(0, colon))),
                        static_cast<std::uint32_t>(std::stoul(item.substr(colon + 1)))});
        if (list.back().doc >= n_docs) throw Error("posting refers to unknown document");
      }
      if (list.size() != df) throw Error("document frequency mismatch for term '" + term + "'");
      idx.postings_.emplace(std::move(term), std::move(list));
    }
  } catch (const json::exception& e) {
    throw Error(std::string("corrupt index: ") + e.what());
  }
  idx.finalize();
  return idx;
}

InvertedIndex InvertedIndex::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open index " + path);
  return load(in);
}

namespace {

double term_score(const InvertedIndex& index, double idf, std::uint32_t tf, std::uint32_t doc_len) {
  const auto& p = index.params();
  const double t = static_cast<double>(tf);
  const double norm = p.k1 * (1.0 - p.b + p.b * static_cast<double>(doc_len) / index.avg_doc_length());
  return idf * t * (p.k1 + 1.0) / (t + norm);
}

}  // namespace

double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_tokens, const std::string& doc_id) {
  auto ord = index.ordinal(doc_id);
  if (!ord) throw Error("unknown document id '" + doc_id + "'");
  const auto d = static_cast<std::uint32_t>(*ord);
  double score = 0.0;
  for (const auto& term : query_tokens) {
    auto it = index.postings().find(term);
    if (it == index.postings().end()) continue;
    const auto& list = it->second;
    auto pos = std::lower_bound(list.begin(), list.end(), d, [](const Posting& p, std::uint32_t v) { return p.doc < v; });
    if (pos == list.end() || pos->doc != d) continue;
    score += term_score(index, index.idf(term), pos->tf, index.doc_lengths()[d]);
  }
  return score;
}

std::vector<SearchHit> search(const InvertedIndex& index, const std::string& query, std::size_t k) {
  if (k == 0) throw Error("search needs k >= 1");
  std::unordered_map<std::uint32_t, double> acc;
  for (const auto& term : tokenize(query)) {
    auto it = index.postings().find(term);
    if (it == index.postings().end()) continue;
    const double idf = index.idf(term);
    for (const auto& p : it->second) acc[p.doc] += term_score(index, idf, p.tf, index.doc_lengths()[p.doc]);
  }
  std::vector<SearchHit> hits;
  for (const auto& [doc, score] : acc)
    if (score > 0.0) hits.push_back({index.documents()[doc].id, score});
  std::sort(hits.begin(), hits.end(), [](const SearchHit& a, const SearchHit& b) {
    return a.score != b.score ? a.score > b.score : a.doc_id < b.doc_id;
  });
  if (hits.size() > k) hits.resize(k);
  return hits;
}

std::string retrieve_context(const InvertedIndex& index, const std::string& question) {
  auto hits = search(index, question, 1);
  if (hits.empty()) return "";
  const auto ord = *index.ordinal(hits.front().doc_id);
  return first_sentence(trim(index.documents()[ord].text));
}

}  // namespace tagqa
