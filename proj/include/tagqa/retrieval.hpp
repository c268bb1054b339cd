#pragma once

#include <cstdint>
#include <istream>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

#include "tagqa/text.hpp"

namespace tagqa {

struct Document {
  std::string id;
  std::string text;
  std::optional<std::string> title;
  friend bool operator==(const Document&, const Document&) = default;
};

struct Bm25Params {
  double k1 = 0.9;
  double b = 0.4;

  void validate() const;
  friend bool operator==(const Bm25Params&, const Bm25Params&) = default;
};

struct Posting {
  std::uint32_t doc;  // ordinal in corpus order
  std::uint32_t tf;
  friend bool operator==(const Posting&, const Posting&) = default;
};

struct SearchHit {
  std::string doc_id;
  double score;
};

/// Term -> postings with per-document lengths. Documents keep their corpus
/// order as ordinals; postings are sorted by ordinal.
class InvertedIndex {
 public:
  InvertedIndex() = default;

  std::size_t num_docs() const { return docs_.size(); }
  double avg_doc_length() const { return avg_len_; }
  const Bm25Params& params() const { return params_; }
  const std::vector<Document>& documents() const { return docs_; }
  const std::vector<std::uint32_t>& doc_lengths() const { return lengths_; }
  const std::map<std::string, std::vector<Posting>>& postings() const { return postings_; }

  std::size_t doc_frequency(const std::string& term) const;
  std::optional<std::size_t> ordinal(const std::string& doc_id) const;

  /// ln((N - df + 0.5) / (df + 0.5) + 1).
  double idf(const std::string& term) const;

  /// Textual, versioned, byte-stable for identical input.
  void save(std::ostream& out) const;
  void save(const std::string& path) const;
  static InvertedIndex load(std::istream& in);
  static InvertedIndex load(const std::string& path);

  friend InvertedIndex build_index(const std::vector<Document>& corpus, const Bm25Params& params);

 private:
  void finalize();

  Bm25Params params_;
  std::vector<Document> docs_;
  std::vector<std::uint32_t> lengths_;
  std::map<std::string, std::vector<Posting>> postings_;
  std::map<std::string, std::uint32_t> by_id_;
  double avg_len_ = 0.0;
};

InvertedIndex build_index(const std::vector<Document>& corpus, const Bm25Params& params = {});

/// One JSON record {id, text, title?} per line.
std::vector<Document> load_corpus(std::istream& in);
std::vector<Document> load_corpus(const std::string& path);

/// Query keywords may repeat; each occurrence contributes its own term.
double bm25_score(const InvertedIndex& index, const std::vector<std::string>& query_tokens, const std::string& doc_id);

/// Top-k documents with a positive score, highest first, ties by doc id.
std::vector<SearchHit> search(const InvertedIndex& index, const std::string& query, std::size_t k);

/// First sentence of the best-ranked document, or "" when nothing matches.
std::string retrieve_context(const InvertedIndex& index, const std::string& question);

}  // namespace tagqa
