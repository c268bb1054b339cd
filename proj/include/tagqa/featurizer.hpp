#pragma once

#include <cstdint>
#include <random>
#include <string>
#include <unordered_map>
#include <vector>

#include "tagqa/graph.hpp"
#include "tagqa/table.hpp"
#include "tagqa/tensor.hpp"

namespace tagqa {

inline constexpr std::size_t kDefaultMaxTokens = 35;

class Vocab {
 public:
  static constexpr int kUnk = 0;
  static constexpr const char* kUnkToken = "<unk>";

  Vocab();
  /// `tokens[i]` gets id i; tokens[0] must be the UNK token.
  explicit Vocab(std::vector<std::string> tokens);

  int id(const std::string& token) const;
  const std::string& token(int id) const { return tokens_.at(static_cast<std::size_t>(id)); }
  std::size_t size() const { return tokens_.size(); }
  const std::vector<std::string>& tokens() const { return tokens_; }

  /// One `token<TAB>id` line per entry.
  void save(const std::string& path) const;
  static Vocab load(const std::string& path);

  friend bool operator==(const Vocab& a, const Vocab& b) { return a.tokens_ == b.tokens_; }

 private:
  std::vector<std::string> tokens_;
  std::unordered_map<std::string, int> index_;
};

/// Tokens of every question and cell with count >= min_count, ordered by
/// descending frequency then lexicographically.
Vocab build_vocab(const Dataset& dataset, std::size_t min_count = 1);

/// Per-node token ids, truncated to `max_tokens`.
struct NodeTokens {
  std::vector<std::vector<int>> ids;
};

NodeTokens node_tokens(const TableGraph& graph, const Vocab& vocab, std::size_t max_tokens = kDefaultMaxTokens);

/// Uniform in [-0.05, 0.05].
Mat init_embedding(std::size_t vocab_size, int dim, std::mt19937_64& rng);

/// Row i is the mean embedding of node i's tokens (zero for token-less nodes).
Mat embed_nodes(const NodeTokens& tokens, const Mat& embedding);
Mat embed_nodes(const TableGraph& graph, const Mat& embedding, const Vocab& vocab, int expected_dim,
                std::size_t max_tokens = kDefaultMaxTokens);

/// Accumulates d(loss)/d(embedding) given d(loss)/d(features).
void embed_nodes_backward(const NodeTokens& tokens, const Mat& d_features, Mat& d_embedding);

}  // namespace tagqa
