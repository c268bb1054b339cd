#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tagqa/retrieval.hpp"
#include "tagqa/table.hpp"

namespace tagqa::synthetic {

/// Small-vocabulary tables where the relevant columns are exactly those
/// whose header word appears in the question and the relevant row is the
/// one whose name (first column) appears in it.
Dataset header_match_dataset(std::size_t n, std::uint64_t seed, const std::string& id_prefix = "hm");

/// Dataset records shaped like FeTaQA: multi-domain tables, questions that
/// name entities and attributes, highlighted cells, sentence answers.
Dataset fetaqa_like_dataset(std::size_t n, std::uint64_t seed, const std::string& id_prefix = "ex");

/// Background passages about the entities that appear in the generated
/// tables, plus unrelated filler passages.
std::vector<Document> background_corpus(std::size_t n_docs, std::uint64_t seed);

}  // namespace tagqa::synthetic
