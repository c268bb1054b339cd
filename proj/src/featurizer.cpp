#include "tagqa/featurizer.hpp"

#include <algorithm>
#include <fstream>
#include <map>
#include <sstream>

namespace tagqa {

Vocab::Vocab() : Vocab(std::vector<std::string>{kUnkToken}) {}

Vocab::Vocab(std::vector<std::string> tokens) : tokens_(std::move(tokens)) {
  if (tokens_.empty() || tokens_.front() != kUnkToken) throw Error("vocabulary must start with the UNK token");
  for (std::size_t i = 0; i < tokens_.size(); ++i)
    if (!index_.emplace(tokens_[i], static_cast<int>(i)).second)
      throw Error("duplicate vocabulary token '" + tokens_[i] + "'");
}

int Vocab::id(const std::string& token) const {
  auto it = index_.find(token);
  return it == index_.end() ? kUnk : it->second;
}

void Vocab::save(const std::string& path) const {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write vocabulary " + path);
  for (std::size_t i = 0; i < tokens_.size(); ++i) out << tokens_[i] << '\t' << i << '\n';
}

Vocab Vocab::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open vocabulary " + path);
  std::vector<std::string> tokens;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    auto tab = line.find('\t');
    if (tab == std::string::npos) throw Error("malformed vocabulary line: " + line);
    std::size_t id = std::stoul(line.substr(tab + 1));
    if (id != tokens.size()) throw Error("vocabulary ids must be dense and ascending");
    tokens.push_back(line.substr(0, tab));
  }
  return Vocab(std::move(tokens));
}

Vocab build_vocab(const Dataset& dataset, std::size_t min_count) {
  std::map<std::string, std::size_t> counts;
  auto add = [&](const std::string& text) {
    for (auto& t : tokenize(text)) ++counts[t];
  };
  for (const auto& ex : dataset.examples) {
    add(ex.question);
    for (const auto& row : ex.table.rows())
      for (const auto& cell : row) add(cell);
  }
  std::vector<std::pair<std::string, std::size_t>> kept;
  for (auto& [tok, n] : counts)
    if (n >= min_count && tok != Vocab::kUnkToken) kept.emplace_back(tok, n);
  std::stable_sort(kept.begin(), kept.end(), [](const auto& a, const auto& b) { return a.second > b.second; });
  std::vector<std::string> tokens{Vocab::kUnkToken};
  for (auto& [tok, n] : kept) tokens.push_back(tok);
  return Vocab(std::move(tokens));
}

NodeTokens node_tokens(const TableGraph& graph, const Vocab& vocab, std::size_t max_tokens) {
  NodeTokens out;
  out.ids.reserve(graph.num_nodes());
  for (const auto& node : graph.nodes()) {
    auto toks = tokenize(node.text);
    if (toks.size() > max_tokens) toks.resize(max_tokens);
    std::vector<int> ids;
    ids.reserve(toks.size());
    for (const auto& t : toks) ids.push_back(vocab.id(t));
    out.ids.push_back(std::move(ids));
  }
  return out;
}

Mat init_embedding(std::size_t vocab_size, int dim, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> dist(-0.05, 0.05);
  Mat e(static_cast<Eigen::Index>(vocab_size), dim);
  for (Eigen::Index i = 0; i < e.size(); ++i) e.data()[i] = dist(rng);
  return e;
}

Mat embed_nodes(const NodeTokens& tokens, const Mat& embedding) {
  const auto n = static_cast<Eigen::Index>(tokens.ids.size());
  Mat out = Mat::Zero(n, embedding.cols());
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& ids = tokens.ids[static_cast<std::size_t>(i)];
    if (ids.empty()) continue;
    for (int id : ids) out.row(i) += embedding.row(id);
    out.row(i) /= static_cast<double>(ids.size());
  }
  return out;
}

Mat embed_nodes(const TableGraph& graph, const Mat& embedding, const Vocab& vocab, int expected_dim,
                std::size_t max_tokens) {
  if (embedding.cols() != expected_dim)
    throw Error("embedding width " + std::to_string(embedding.cols()) + " does not match node dimension " +
                std::to_string(expected_dim));
  if (static_cast<std::size_t>(embedding.rows()) != vocab.size())
    throw Error("embedding table has " + std::to_string(embedding.rows()) + " rows for a vocabulary of " +
                std::to_string(vocab.size()));
  return embed_nodes(node_tokens(graph, vocab, max_tokens), embedding);
}

void embed_nodes_backward(const NodeTokens& tokens, const Mat& d_features, Mat& d_embedding) {
  for (std::size_t i = 0; i < tokens.ids.size(); ++i) {
    const auto& ids = tokens.ids[i];
    if (ids.empty()) continue;
    const double scale = 1.0 / static_cast<double>(ids.size());
    for (int id : ids) d_embedding.row(id) += scale * d_features.row(static_cast<Eigen::Index>(i));
  }
}

}  // namespace tagqa
