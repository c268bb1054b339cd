#include "tagqa/pipeline.hpp"

#include <openssl/evp.h>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iomanip>
#include <sstream>
#include <thread>

#include "json.hpp"

namespace tagqa {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

template <class T>
T parse_number(const std::string& key, const std::string& value) {
  try {
    std::size_t used = 0;
    T out;
    if constexpr (std::is_floating_point_v<T>)
      out = static_cast<T>(std::stod(value, &used));
    else if constexpr (std::is_unsigned_v<T>)
      out = static_cast<T>(std::stoull(value, &used));
    else
      out = static_cast<T>(std::stoll(value, &used));
    if (used != value.size()) throw std::invalid_argument(value);
    return out;
  } catch (const std::exception&) {
    throw Error("config key '" + key + "': cannot parse '" + value + "' as a number");
  }
}

std::string fmt_double(double v) {
  std::ostringstream os;
  os << std::setprecision(17) << v;
  return os.str();
}

}  // namespace

void PipelineConfig::set(const std::string& key, const std::string& value) {
  const std::map<std::string, std::function<void(const std::string&)>> setters = {
      {"train_path", [&](const std::string& v) { train_path = v; }},
      {"dev_path", [&](const std::string& v) { dev_path = v; }},
      {"test_path", [&](const std::string& v) { test_path = v; }},
      {"corpus_path", [&](const std::string& v) { corpus_path = v; }},
      {"index_path", [&](const std::string& v) { index_path = v; }},
      {"checkpoint_path", [&](const std::string& v) { checkpoint_path = v; }},
      {"output_dir", [&](const std::string& v) { output_dir = v; }},
      {"seed", [&](const std::string& v) { seed = parse_number<std::uint64_t>(key, v); }},
      {"cell_cap", [&](const std::string& v) { cell_cap = parse_number<std::size_t>(key, v); }},
      {"gat.layers", [&](const std::string& v) { gat.layers = parse_number<int>(key, v); }},
      {"gat.dim", [&](const std::string& v) { gat.dim = parse_number<int>(key, v); }},
      {"gat.msg_dim", [&](const std::string& v) { gat.msg_dim = parse_number<int>(key, v); }},
      {"gat.type_dim", [&](const std::string& v) { gat.type_dim = parse_number<int>(key, v); }},
      {"gat.dropout", [&](const std::string& v) { gat.dropout = parse_number<double>(key, v); }},
      {"gat.top_rows", [&](const std::string& v) { gat.top_rows = parse_number<int>(key, v); }},
      {"gat.top_cols", [&](const std::string& v) { gat.top_cols = parse_number<int>(key, v); }},
      {"train.epochs", [&](const std::string& v) { train.epochs = parse_number<int>(key, v); }},
      {"train.patience", [&](const std::string& v) { train.patience = parse_number<int>(key, v); }},
      {"train.lr", [&](const std::string& v) { train.optimizer.lr = parse_number<double>(key, v); }},
      {"train.weight_decay", [&](const std::string& v) { train.optimizer.weight_decay = parse_number<double>(key, v); }},
      {"train.max_tokens", [&](const std::string& v) { train.max_tokens = parse_number<std::size_t>(key, v); }},
      {"train.min_count", [&](const std::string& v) { train.min_count = parse_number<std::size_t>(key, v); }},
      {"bm25.k1", [&](const std::string& v) { bm25.k1 = parse_number<double>(key, v); }},
      {"bm25.b", [&](const std::string& v) { bm25.b = parse_number<double>(key, v); }},
      {"mode",
       [&](const std::string& v) {
         if (v == "template")
           mode = GenerationMode::Template;
         else if (v == "remote")
           mode = GenerationMode::Remote;
         else
           throw Error("config key 'mode': expected template or remote, got '" + v + "'");
       }},
      {"endpoint", [&](const std::string& v) { endpoint = v; }},
      {"timeout_ms", [&](const std::string& v) { timeout_ms = parse_number<int>(key, v); }},
      {"remote_retries", [&](const std::string& v) { remote_retries = parse_number<int>(key, v); }},
      {"generation.beam_size", [&](const std::string& v) { generation.beam_size = parse_number<int>(key, v); }},
      {"generation.length_penalty",
       [&](const std::string& v) { generation.length_penalty = parse_number<double>(key, v); }},
      {"generation.max_tokens", [&](const std::string& v) { generation.max_tokens = parse_number<int>(key, v); }},
      {"jobs", [&](const std::string& v) { jobs = std::max(1, parse_number<int>(key, v)); }},
  };
  auto it = setters.find(key);
  if (it == setters.end()) throw Error("unknown config key '" + key + "'");
  it->second(value);
}

void PipelineConfig::parse(std::istream& in, const std::string& source) {
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    auto hash = line.find('#');
    if (hash != std::string::npos) line.resize(hash);
    if (trim(line).empty()) continue;
    auto eq = line.find('=');
    if (eq == std::string::npos) throw Error(source + ":" + std::to_string(lineno) + ": expected key = value");
    try {
      set(trim(line.substr(0, eq)), trim(line.substr(eq + 1)));
    } catch (const Error& e) {
      throw Error(source + ":" + std::to_string(lineno) + ": " + e.what());
    }
  }
}

PipelineConfig PipelineConfig::load(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path);
  PipelineConfig c;
  c.parse(in, path);
  return c;
}

std::map<std::string, std::string> PipelineConfig::snapshot() const {
  return {{"train_path", train_path},
          {"dev_path", dev_path},
          {"test_path", test_path},
          {"corpus_path", corpus_path},
          {"index_path", resolved_index_path()},
          {"checkpoint_path", resolved_checkpoint_path()},
          {"output_dir", output_dir},
          {"seed", std::to_string(seed)},
          {"cell_cap", std::to_string(cell_cap)},
          {"gat.layers", std::to_string(gat.layers)},
          {"gat.dim", std::to_string(gat.dim)},
          {"gat.msg_dim", std::to_string(gat.msg_dim)},
          {"gat.type_dim", std::to_string(gat.type_dim)},
          {"gat.dropout", fmt_double(gat.dropout)},
          {"gat.top_rows", std::to_string(gat.top_rows)},
          {"gat.top_cols", std::to_string(gat.top_cols)},
          {"train.epochs", std::to_string(train.epochs)},
          {"train.patience", std::to_string(train.patience)},
          {"train.lr", fmt_double(train.optimizer.lr)},
          {"train.weight_decay", fmt_double(train.optimizer.weight_decay)},
          {"train.max_tokens", std::to_string(train.max_tokens)},
          {"train.min_count", std::to_string(train.min_count)},
          {"bm25.k1", fmt_double(bm25.k1)},
          {"bm25.b", fmt_double(bm25.b)},
          {"mode", mode == GenerationMode::Template ? "template" : "remote"},
          {"endpoint", endpoint},
          {"timeout_ms", std::to_string(timeout_ms)},
          {"remote_retries", std::to_string(remote_retries)},
          {"generation.beam_size", std::to_string(generation.beam_size)},
          {"generation.length_penalty", fmt_double(generation.length_penalty)},
          {"generation.max_tokens", std::to_string(generation.max_tokens)},
          {"jobs", std::to_string(jobs)}};
}

std::string PipelineConfig::resolved_index_path() const {
  return index_path.empty() ? (fs::path(output_dir) / "index.bm25").string() : index_path;
}

std::string PipelineConfig::resolved_checkpoint_path() const {
  return checkpoint_path.empty() ? (fs::path(output_dir) / "selector.ckpt").string() : checkpoint_path;
}

std::string PipelineConfig::dataset_path(Split split) const {
  const std::string& p = split == Split::Train ? train_path : split == Split::Dev ? dev_path : test_path;
  if (p.empty()) throw Error("no dataset path configured for the " + to_string(split) + " split");
  return p;
}

void PipelineConfig::validate() const {
  gat.validate();
  bm25.validate();
  generation.validate();
  if (mode == GenerationMode::Remote && endpoint.empty())
    throw Error("remote generation mode requires an endpoint (set 'endpoint' or pass --endpoint)");
  if (timeout_ms <= 0) throw Error("timeout_ms must be positive");
}

std::string read_file(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_file_atomic(const std::string& path, const std::string& content) {
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write " + tmp);
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    if (!out) throw Error("failed writing " + tmp);
  }
  fs::rename(tmp, target);
}

std::string sha256_file(const std::string& path) {
  const std::string data = read_file(path);
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(data.data(), data.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw Error("SHA-256 failed for " + path);
  std::ostringstream os;
  for (unsigned int i = 0; i < len; ++i) os << std::hex << std::setw(2) << std::setfill('0') << int(digest[i]);
  return os.str();
}

namespace {

Dataset load_split(const PipelineConfig& config, Split split) {
  const std::string path = config.dataset_path(split);
  Dataset ds = load_dataset(path, split, config.cell_cap);
  if (ds.empty()) throw Error(path + ": dataset file contains no examples");
  return ds;
}

SplitStats split_stats(const Dataset& ds) {
  SplitStats s;
  s.split = ds.split;
  s.examples = ds.size();
  s.min_cells = std::numeric_limits<std::size_t>::max();
  for (const auto& ex : ds.examples) {
    const auto& t = ex.table;
    s.truncated += t.truncated();
    s.min_cells = std::min(s.min_cells, t.n_cells());
    s.max_cells = std::max(s.max_cells, t.n_cells());
    s.mean_cells += static_cast<double>(t.n_cells());
    s.mean_rows += static_cast<double>(t.n_rows());
    s.mean_cols += static_cast<double>(t.n_cols());
    s.mean_highlighted += static_cast<double>(ex.gold_cells.size());
  }
  const double n = static_cast<double>(std::max<std::size_t>(1, s.examples));
  s.mean_cells /= n;
  s.mean_rows /= n;
  s.mean_cols /= n;
  s.mean_highlighted /= n;
  if (s.examples == 0) s.min_cells = 0;
  return s;
}

}  // namespace

std::vector<SplitStats> cmd_ingest(const PipelineConfig& config, std::ostream& log) {
  std::vector<SplitStats> out;
  for (Split s : {Split::Train, Split::Dev, Split::Test}) {
    const std::string& p = s == Split::Train ? config.train_path : s == Split::Dev ? config.dev_path : config.test_path;
    if (p.empty()) continue;
    auto st = split_stats(load_split(config, s));
    log << to_string(s) << ": " << st.examples << " examples, cells min/mean/max " << st.min_cells << "/"
        << std::fixed << std::setprecision(1) << st.mean_cells << "/" << st.max_cells << ", mean shape "
        << st.mean_rows << "x" << st.mean_cols << ", " << st.truncated << " truncated, "
        << st.mean_highlighted << " highlighted cells per example\n"
        << std::defaultfloat;
    out.push_back(st);
  }
  if (out.empty()) throw Error("no dataset paths configured");
  return out;
}

IndexStats cmd_build_index(const PipelineConfig& config, std::ostream& log) {
  if (config.corpus_path.empty()) throw Error("no corpus_path configured");
  config.bm25.validate();
  auto docs = load_corpus(config.corpus_path);
  auto index = build_index(docs, config.bm25);
  IndexStats st{config.resolved_index_path(), index.num_docs(), index.postings().size(), index.avg_doc_length()};
  if (fs::path(st.path).has_parent_path()) fs::create_directories(fs::path(st.path).parent_path());
  index.save(st.path);
  log << "indexed " << st.docs << " documents, " << st.terms << " terms, average length " << st.avg_doc_length
      << " -> " << st.path << "\n";
  return st;
}

std::string cmd_train(const PipelineConfig& config, std::ostream& log) {
  config.validate();
  Dataset train = load_split(config, Split::Train);
  Dataset dev = load_split(config, Split::Dev);
  TrainOptions opts = config.train;
  opts.seed = config.seed;
  std::ostringstream tsv;
  tsv << "epoch\ttrain_loss\tdev_f1\tbest_dev_f1\n";
  auto ckpt = train_selector(train, dev, config.gat, opts, [&](const EpochLog& e) {
    tsv << e.epoch << '\t' << fmt_double(e.train_loss) << '\t' << fmt_double(e.dev_f1) << '\t'
        << fmt_double(e.best_dev_f1) << '\n';
    log << "epoch " << e.epoch << " loss " << e.train_loss << " dev F1 " << e.dev_f1 << (e.improved ? " *" : "")
        << "\n";
  });
  const std::string path = config.resolved_checkpoint_path();
  if (fs::path(path).has_parent_path()) fs::create_directories(fs::path(path).parent_path());
  save_checkpoint(ckpt, path);
  write_file_atomic((fs::path(config.output_dir) / "train_log.tsv").string(), tsv.str());
  log << "best epoch " << ckpt.meta.epoch << " (dev F1 " << ckpt.meta.dev_f1 << ") -> " << path << "\n";
  return path;
}

Prediction predict_example(const Checkpoint& ckpt, const InvertedIndex& index, const PipelineConfig& config,
                           const QAExample& example) {
  Prediction p;
  p.id = example.id;
  p.selected_cells = predict_cells(ckpt, example);
  p.retrieved = retrieve_context(index, example.question);
  const std::string linear = linearize_cells(example.table, p.selected_cells);
  if (config.mode == GenerationMode::Template) {
    auto cells = selected_cells_with_headers(example.table, p.selected_cells);
    try {
      p.answer = compose_template_answer(example.question, cells, p.retrieved);
    } catch (const Error&) {
      p.answer.clear();
    }
    return p;
  }
  FusionInput input = assemble(example.question, linear, p.retrieved);
  for (int attempt = 0;; ++attempt) {
    try {
      p.answer = generate_remote(input, config.generation, config.endpoint,
                                 std::chrono::milliseconds(config.timeout_ms), example.id);
      return p;
    } catch (const RemoteError&) {
      if (attempt >= config.remote_retries) throw;
    }
  }
}

std::string cmd_predict(const PipelineConfig& config, Split split, std::ostream& log) {
  config.validate();
  Dataset ds = load_split(config, split);
  const Checkpoint ckpt = load_checkpoint(config.resolved_checkpoint_path());
  const InvertedIndex index = InvertedIndex::load(config.resolved_index_path());

  std::vector<Prediction> preds(ds.size());
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (std::size_t i = next++; i < ds.size(); i = next++) {
      try {
        preds[i] = predict_example(ckpt, index, config, ds.examples[i]);
      } catch (...) {
        std::lock_guard<std::mutex> lock(failure_mu);
        if (!failure) failure = std::current_exception();
        next = ds.size();
      }
    }
  };
  const int threads = std::min<int>(config.jobs, static_cast<int>(ds.size()));
  if (threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < threads; ++t) pool.emplace_back(worker);
    for (auto& th : pool) th.join();
  }
  if (failure) std::rethrow_exception(failure);

  std::sort(preds.begin(), preds.end(), [](const Prediction& a, const Prediction& b) { return a.id < b.id; });
  std::string body;
  for (const auto& p : preds) body += serialize_prediction(p) + "\n";
  const std::string path = (fs::path(config.output_dir) / ("predictions." + to_string(split) + ".jsonl")).string();
  write_file_atomic(path, body);
  log << "wrote " << preds.size() << " predictions -> " << path << "\n";
  return path;
}

EvalReport cmd_eval(const PipelineConfig& config, const std::string& predictions_path, Split split,
                    std::ostream& log, std::string* report_path) {
  Dataset ds = load_split(config, split);
  auto preds = load_predictions(predictions_path);
  EvalReport r = evaluate_run(preds, ds);
  const std::string path = (fs::path(config.output_dir) / ("report." + to_string(split) + ".json")).string();
  write_file_atomic(path, r.to_json() + "\n");
  log << "# METEOR is exact-match only (no stemming or synonyms)\n"
      << std::fixed << std::setprecision(2) << "BLEU-4 " << r.bleu4 << "  METEOR " << 100 * r.meteor
      << "  ROUGE-L " << 100 * r.rougeL << "\nPARENT P/R/F " << 100 * r.parent.precision << "/"
      << 100 * r.parent.recall << "/" << 100 * r.parent.f1 << "  PARENT-T P/R/F " << 100 * r.parent_t.precision
      << "/" << 100 * r.parent_t.recall << "/" << 100 * r.parent_t.f1 << "\nselection P/R/F "
      << 100 * r.selection.precision << "/" << 100 * r.selection.recall << "/" << 100 * r.selection.f1 << "\n"
      << std::defaultfloat << "report -> " << path << "\n";
  if (report_path) *report_path = path;
  return r;
}

std::string run_pipeline(const PipelineConfig& config, std::ostream& log) {
  json manifest;
  manifest["tool_version"] = kToolVersion;
  manifest["config"] = config.snapshot();
  manifest["stages"] = json::array();
  manifest["artifacts"] = json::object();
  manifest["partial"] = false;
  const std::string manifest_path = (fs::path(config.output_dir) / "manifest.json").string();

  auto stage = [&](const std::string& name, const std::function<std::vector<std::string>()>& body) {
    const auto start = std::chrono::steady_clock::now();
    json entry{{"name", name}};
    try {
      auto artifacts = body();
      entry["status"] = "complete";
      json arts = json::array();
      for (const auto& a : artifacts) arts.push_back({{"path", a}, {"sha256", sha256_file(a)}});
      entry["artifacts"] = arts;
    } catch (const std::exception& e) {
      entry["status"] = "failed";
      entry["error"] = e.what();
      entry["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
      manifest["stages"].push_back(entry);
      manifest["partial"] = true;
      write_file_atomic(manifest_path, manifest.dump(2) + "\n");
      throw;
    }
    entry["seconds"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    manifest["stages"].push_back(entry);
  };

  config.validate();
  fs::create_directories(config.output_dir);
  std::string predictions;
  stage("ingest", [&] {
    cmd_ingest(config, log);
    return std::vector<std::string>{};
  });
  stage("build-index", [&] {
    auto st = cmd_build_index(config, log);
    manifest["artifacts"]["index"] = {{"path", st.path}, {"sha256", sha256_file(st.path)}};
    return std::vector<std::string>{st.path};
  });
  stage("train", [&] {
    auto path = cmd_train(config, log);
    manifest["artifacts"]["checkpoint"] = {{"path", path}, {"sha256", sha256_file(path)}};
    return std::vector<std::string>{path};
  });
  stage("predict", [&] {
    predictions = cmd_predict(config, Split::Test, log);
    return std::vector<std::string>{predictions};
  });
  stage("eval", [&] {
    std::string report;
    cmd_eval(config, predictions, Split::Test, log, &report);
    return std::vector<std::string>{report};
  });
  write_file_atomic(manifest_path, manifest.dump(2) + "\n");
  return manifest_path;
}

}  // namespace tagqa
