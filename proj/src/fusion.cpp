#include "tagqa/fusion.hpp"

#include <map>
#include <regex>

#include "httplib.h"
#include "json.hpp"

namespace tagqa {

using nlohmann::json;

namespace {
std::atomic<std::size_t> g_remote_requests{0};
}

std::vector<std::string> FusionInput::rendered() const {
  std::vector<std::string> out;
  out.reserve(blocks.size());
  for (const auto& b : blocks) out.push_back("question: " + question + " context: " + b.text);
  return out;
}

void GenerationConfig::validate() const {
  if (beam_size < 1) throw Error("beam size must be at least 1");
  if (max_tokens < 1) throw Error("max_tokens must be at least 1");
}

FusionInput assemble(const std::string& question, const std::string& linearized_cells, const std::string& retrieved) {
  if (trim(question).empty()) throw Error("cannot assemble fusion input for an empty question");
  FusionInput in{question, {}};
  if (!linearized_cells.empty()) in.blocks.push_back({SourceKind::Table, linearized_cells});
  if (!retrieved.empty()) in.blocks.push_back({SourceKind::Passage, retrieved});
  if (in.blocks.empty()) throw Error("no table cells and no retrieved text to fuse");
  return in;
}

std::vector<SelectedCell> selected_cells_with_headers(const Table& table, const std::vector<CellCoord>& coords) {
  std::vector<SelectedCell> out;
  for (const auto& c : coords) {
    if (!table.contains(c)) throw Error("selected cell outside the table");
    out.push_back({c.row, table.header(c.col), table.cell(c)});
  }
  return out;
}

std::string compose_template_answer(const std::string& /*question*/, const std::vector<SelectedCell>& cells,
                                    const std::string& retrieved) {
  std::vector<std::size_t> row_order;
  std::map<std::size_t, std::vector<std::string>> phrases;
  for (const auto& c : cells) {
    std::string phrase = trim(trim(c.header) + " " + trim(c.value));
    if (phrase.empty()) continue;
    if (!phrases.count(c.row)) row_order.push_back(c.row);
    phrases[c.row].push_back(std::move(phrase));
  }
  std::vector<std::string> clauses;
  for (auto r : row_order) clauses.push_back(join(phrases[r], ", "));
  const std::string sentence = trim(retrieved);
  if (clauses.empty() && sentence.empty()) throw Error("nothing to compose: no usable cells and no retrieved text");
  std::string body = clauses.empty() ? "" : join(clauses, "; ") + ".";
  if (sentence.empty()) return body;
  return body.empty() ? sentence : sentence + " " + body;
}

RemoteError::RemoteError(const std::string& example_id, const std::string& what)
    : Error("generation request" + (example_id.empty() ? std::string() : " for example '" + example_id + "'") +
            " failed: " + what),
      example_id_(example_id) {}

RemoteStatusError::RemoteStatusError(const std::string& example_id, int status)
    : RemoteError(example_id, "service returned HTTP " + std::to_string(status)), status_(status) {}

std::string generation_request_body(const FusionInput& input, const GenerationConfig& config) {
  json j;
  j["blocks"] = input.rendered();
  j["beam_size"] = config.beam_size;
  j["length_penalty"] = config.length_penalty;
  j["max_tokens"] = config.max_tokens;
  return j.dump();
}

std::string parse_generation_response(const std::string& body, const std::string& example_id) {
  json j;
  try {
    j = json::parse(body);
  } catch (const json::exception&) {
    throw RemoteMalformed(example_id, "response is not JSON");
  }
  if (!j.is_object() || !j.contains("answer") || !j["answer"].is_string())
    throw RemoteMalformed(example_id, "response lacks a string 'answer' field");
  return j["answer"].get<std::string>();
}

std::string generate_remote(const FusionInput& input, const GenerationConfig& config, const std::string& endpoint,
                            std::chrono::milliseconds timeout, const std::string& example_id) {
  config.validate();
  static const std::regex url_re(R"(^(http)://([^/:]+)(?::(\d+))?(/.*)?$)");
  std::smatch m;
  if (!std::regex_match(endpoint, m, url_re)) throw Error("unsupported generation endpoint '" + endpoint + "'");
  const std::string host = m[2];
  const int port = m[3].matched ? std::stoi(m[3]) : 80;
  const std::string path = m[4].matched ? std::string(m[4]) : "/";

  httplib::Client client(host, port);
  const auto secs = std::chrono::duration_cast<std::chrono::seconds>(timeout);
  const auto usecs = std::chrono::duration_cast<std::chrono::microseconds>(timeout - secs);
  client.set_connection_timeout(secs.count(), usecs.count());
  client.set_read_timeout(secs.count(), usecs.count());
  client.set_write_timeout(secs.count(), usecs.count());

  ++g_remote_requests;
  const auto start = std::chrono::steady_clock::now();
  auto res = client.Post(path, generation_request_body(input, config), "application/json");
  if (!res) {
    const auto err = res.error();
    const auto elapsed = std::chrono::steady_clock::now() - start;
    if (err == httplib::Error::ConnectionTimeout || (err == httplib::Error::Read && elapsed >= timeout))
      throw RemoteTimeout(example_id, "no response within " + std::to_string(timeout.count()) + " ms");
    if (err == httplib::Error::Connection)
      throw RemoteUnreachable(example_id, "cannot connect to " + endpoint);
    throw RemoteUnreachable(example_id, "transport error: " + httplib::to_string(err));
  }
  if (res->status < 200 || res->status >= 300) throw RemoteStatusError(example_id, res->status);
  return parse_generation_response(res->body, example_id);
}

std::size_t remote_request_count() { return g_remote_requests.load(); }

}  // namespace tagqa
