// Command-line front end: ingest, build-index, train, predict, eval, run,
// plus `synth` to generate sample data in the dataset and corpus formats.

#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "json.hpp"
#include "tagqa/pipeline.hpp"
#include "tagqa/synthetic.hpp"

namespace {

struct CommonFlags {
  std::string config;
  std::string seed;
  std::string mode;
  std::string endpoint;
  std::vector<std::string> overrides;
};

void add_common(CLI::App* cmd, CommonFlags& f) {
  cmd->add_option("--config", f.config, "Config file (key = value lines)");
  cmd->add_option("--seed", f.seed, "Random seed");
  cmd->add_option("--mode", f.mode, "Generation mode")->check(CLI::IsMember({"template", "remote"}));
  cmd->add_option("--endpoint", f.endpoint, "Generation service URL");
  cmd->add_option("--set", f.overrides, "Override a config key (key=value), repeatable");
}

tagqa::PipelineConfig resolve(const CommonFlags& f) {
  tagqa::PipelineConfig c = f.config.empty() ? tagqa::PipelineConfig{} : tagqa::PipelineConfig::load(f.config);
  for (const auto& kv : f.overrides) {
    auto eq = kv.find('=');
    if (eq == std::string::npos) throw tagqa::Error("--set expects key=value, got '" + kv + "'");
    c.set(tagqa::trim(kv.substr(0, eq)), tagqa::trim(kv.substr(eq + 1)));
  }
  if (!f.seed.empty()) c.set("seed", f.seed);
  if (!f.mode.empty()) c.set("mode", f.mode);
  if (!f.endpoint.empty()) c.set("endpoint", f.endpoint);
  return c;
}

void write_lines(const std::string& path, const std::vector<std::string>& lines) {
  std::string body;
  for (const auto& l : lines) body += l + "\n";
  tagqa::write_file_atomic(path, body);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Table question answering pipeline: cell selection, retrieval, fusion, evaluation"};
  app.require_subcommand(1);
  CommonFlags flags;
  std::string split = "test";
  std::string predictions;

  auto* ingest = app.add_subcommand("ingest", "Parse dataset splits and report statistics");
  auto* index = app.add_subcommand("build-index", "Build the BM25 index over the corpus");
  auto* train = app.add_subcommand("train", "Train the graph cell selector");
  auto* predict = app.add_subcommand("predict", "Select cells, retrieve context and answer");
  auto* eval = app.add_subcommand("eval", "Score a predictions file");
  auto* run = app.add_subcommand("run", "ingest, build-index, train, predict and eval in sequence");
  for (auto* cmd : {ingest, index, train, predict, eval, run}) add_common(cmd, flags);
  for (auto* cmd : {predict, eval})
    cmd->add_option("--split", split, "Dataset split")->check(CLI::IsMember({"train", "dev", "test"}));
  eval->add_option("--predictions", predictions, "Predictions file (default: output_dir/predictions.{split}.jsonl)");

  auto* synth = app.add_subcommand("synth", "Write synthetic train/dev/test splits and a corpus");
  std::string synth_out = "data";
  std::size_t n_train = 500, n_dev = 50, n_test = 50, n_docs = 100;
  std::uint64_t synth_seed = 7;
  synth->add_option("--out", synth_out, "Output directory");
  synth->add_option("--train", n_train, "Training examples");
  synth->add_option("--dev", n_dev, "Development examples");
  synth->add_option("--test", n_test, "Test examples");
  synth->add_option("--docs", n_docs, "Corpus documents");
  synth->add_option("--seed", synth_seed, "Random seed");

  CLI11_PARSE(app, argc, argv);

  try {
    if (synth->parsed()) {
      namespace syn = tagqa::synthetic;
      std::filesystem::create_directories(synth_out);
      auto dump = [&](const tagqa::Dataset& ds, const std::string& name) {
        std::vector<std::string> lines;
        for (const auto& ex : ds.examples) lines.push_back(tagqa::serialize_example(ex));
        write_lines((std::filesystem::path(synth_out) / name).string(), lines);
      };
      dump(syn::fetaqa_like_dataset(n_train, synth_seed, "train"), "train.jsonl");
      dump(syn::fetaqa_like_dataset(n_dev, synth_seed + 1, "dev"), "dev.jsonl");
      dump(syn::fetaqa_like_dataset(n_test, synth_seed + 2, "test"), "test.jsonl");
      std::vector<std::string> docs;
      for (const auto& d : syn::background_corpus(n_docs, synth_seed + 3)) {
        nlohmann::json j{{"id", d.id}, {"text", d.text}};
        if (d.title) j["title"] = *d.title;
        docs.push_back(j.dump());
      }
      write_lines((std::filesystem::path(synth_out) / "corpus.jsonl").string(), docs);
      std::cout << "wrote synthetic data to " << synth_out << "\n";
      return 0;
    }

    const tagqa::PipelineConfig config = resolve(flags);
    if (ingest->parsed()) {
      tagqa::cmd_ingest(config, std::cout);
    } else if (index->parsed()) {
      tagqa::cmd_build_index(config, std::cout);
    } else if (train->parsed()) {
      tagqa::cmd_train(config, std::cout);
    } else if (predict->parsed()) {
      tagqa::cmd_predict(config, tagqa::parse_split(split), std::cout);
    } else if (eval->parsed()) {
      if (predictions.empty())
        predictions = (std::filesystem::path(config.output_dir) / ("predictions." + split + ".jsonl")).string();
      tagqa::cmd_eval(config, predictions, tagqa::parse_split(split), std::cout);
    } else if (run->parsed()) {
      std::cout << "manifest -> " << tagqa::run_pipeline(config, std::cout) << "\n";
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
