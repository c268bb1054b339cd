#pragma once

#include <atomic>
#include <chrono>
#include <string>
#include <vector>

#include "tagqa/table.hpp"

namespace tagqa {

enum class SourceKind { Table, Passage };

struct SourceBlock {
  SourceKind kind;
  std::string text;
  friend bool operator==(const SourceBlock&, const SourceBlock&) = default;
};

/// Per-source inputs for a fusion-in-decoder generator. The table block,
/// when present, always comes first.
struct FusionInput {
  std::string question;
  std::vector<SourceBlock> blocks;

  /// "question: {question} context: {block text}" for each block.
  std::vector<std::string> rendered() const;
  friend bool operator==(const FusionInput&, const FusionInput&) = default;
};

struct GenerationConfig {
  int beam_size = 3;
  double length_penalty = 1.0;
  int max_tokens = 128;

  void validate() const;
};

FusionInput assemble(const std::string& question, const std::string& linearized_cells, const std::string& retrieved);

struct SelectedCell {
  std::size_t row;
  std::string header;
  std::string value;
};

std::vector<SelectedCell> selected_cells_with_headers(const Table& table, const std::vector<CellCoord>& coords);

/// Rows in order of first appearance, each as comma-joined "{header} {value}"
/// phrases; rows joined by "; " and closed with a period. A non-empty
/// retrieved sentence is prepended followed by a space.
std::string compose_template_answer(const std::string& question, const std::vector<SelectedCell>& cells,
                                    const std::string& retrieved);

/// Errors from the generation service. Each failure mode has its own type.
class RemoteError : public Error {
 public:
  RemoteError(const std::string& example_id, const std::string& what);
  const std::string& example_id() const { return example_id_; }

 private:
  std::string example_id_;
};

class RemoteUnreachable : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class RemoteTimeout : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

class RemoteStatusError : public RemoteError {
 public:
  RemoteStatusError(const std::string& example_id, int status);
  int status() const { return status_; }

 private:
  int status_;
};

class RemoteMalformed : public RemoteError {
 public:
  using RemoteError::RemoteError;
};

/// JSON request body: {blocks, beam_size, length_penalty, max_tokens}.
std::string generation_request_body(const FusionInput& input, const GenerationConfig& config);

/// Parses {"answer": string}; throws RemoteMalformed otherwise.
std::string parse_generation_response(const std::string& body, const std::string& example_id);

/// POSTs one request to `endpoint` (http://host[:port][/path]). Never
/// retries.
std::string generate_remote(const FusionInput& input, const GenerationConfig& config, const std::string& endpoint,
                            std::chrono::milliseconds timeout, const std::string& example_id = "");

/// Number of HTTP requests attempted by generate_remote in this process.
std::size_t remote_request_count();

}  // namespace tagqa
