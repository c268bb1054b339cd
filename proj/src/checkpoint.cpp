#include <bit>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "json.hpp"
#include "tagqa/selector.hpp"

namespace tagqa {

using nlohmann::json;

namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint codec assumes a little-endian host");

constexpr char kMagic[8] = {'T', 'A', 'G', 'Q', 'A', 'C', 'K', 'P'};
constexpr std::uint32_t kVersion = 1;

template <class T>
void put(std::string& out, T v) {
  char buf[sizeof(T)];
  std::memcpy(buf, &v, sizeof(T));
  out.append(buf, sizeof(T));
}

template <class T>
T get(const std::string& in, std::size_t& pos) {
  if (pos + sizeof(T) > in.size()) throw Error("checkpoint is truncated");
  T v;
  std::memcpy(&v, in.data() + pos, sizeof(T));
  pos += sizeof(T);
  return v;
}

std::vector<ConstTensorRef> all_tensors(const Checkpoint& ckpt) {
  auto out = ckpt.model.params.tensors();
  for (std::size_t l = 0; l < ckpt.model.running.size(); ++l) {
    const auto& rs = ckpt.model.running[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    out.push_back({pre + "bn_running_mean", rs.mean.data(), rs.mean.rows(), rs.mean.cols()});
    out.push_back({pre + "bn_running_var", rs.var.data(), rs.var.rows(), rs.var.cols()});
  }
  return out;
}

std::vector<TensorRef> all_tensors(Checkpoint& ckpt) {
  auto out = ckpt.model.params.tensors();
  for (std::size_t l = 0; l < ckpt.model.running.size(); ++l) {
    auto& rs = ckpt.model.running[l];
    const std::string pre = "layer" + std::to_string(l) + ".";
    out.push_back({pre + "bn_running_mean", rs.mean.data(), rs.mean.rows(), rs.mean.cols()});
    out.push_back({pre + "bn_running_var", rs.var.data(), rs.var.rows(), rs.var.cols()});
  }
  return out;
}

json config_json(const GatConfig& c) {
  return {{"layers", c.layers},     {"dim", c.dim},           {"msg_dim", c.msg_dim},
          {"type_dim", c.type_dim}, {"dropout", c.dropout},   {"top_rows", c.top_rows},
          {"top_cols", c.top_cols}};
}

GatConfig config_from(const json& j) {
  GatConfig c;
  c.layers = j.at("layers");
  c.dim = j.at("dim");
  c.msg_dim = j.at("msg_dim");
  c.type_dim = j.at("type_dim");
  c.dropout = j.at("dropout");
  c.top_rows = j.at("top_rows");
  c.top_cols = j.at("top_cols");
  c.validate();
  return c;
}

}  // namespace

std::string encode_checkpoint(const Checkpoint& ckpt) {
  json header;
  header["format"] = "tagqa-checkpoint";
  header["config"] = config_json(ckpt.model.config);
  header["vocab"] = ckpt.vocab.tokens();
  header["max_tokens"] = ckpt.max_tokens;
  header["metadata"] = {{"epoch", ckpt.meta.epoch}, {"dev_f1", ckpt.meta.dev_f1}, {"seed", ckpt.meta.seed}};
  json table = json::array();
  std::size_t offset = 0;
  const auto tensors = all_tensors(ckpt);
  for (const auto& t : tensors) {
    table.push_back({{"name", t.name}, {"shape", {t.rows, t.cols}}, {"offset", offset}});
    offset += static_cast<std::size_t>(t.size());
  }
  header["tensors"] = table;
  const std::string text = header.dump();

  std::string out(kMagic, sizeof(kMagic));
  put<std::uint32_t>(out, kVersion);
  put<std::uint64_t>(out, text.size());
  out += text;
  for (const auto& t : tensors) out.append(reinterpret_cast<const char*>(t.data), static_cast<std::size_t>(t.size()) * sizeof(double));
  return out;
}

Checkpoint decode_checkpoint(const std::string& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0)
    throw Error("not a checkpoint file (bad magic)");
  std::size_t pos = sizeof(kMagic);
  const auto version = get<std::uint32_t>(bytes, pos);
  if (version != kVersion) throw Error("unsupported checkpoint version " + std::to_string(version));
  const auto header_len = get<std::uint64_t>(bytes, pos);
  if (pos + header_len > bytes.size()) throw Error("checkpoint is truncated");
  json header;
  try {
    header = json::parse(bytes.substr(pos, header_len));
  } catch (const json::exception& e) {
    throw Error(std::string("corrupt checkpoint header: ") + e.what());
  }
  pos += header_len;

  Checkpoint ckpt;
  const GatConfig config = config_from(header.at("config"));
  ckpt.vocab = Vocab(header.at("vocab").get<std::vector<std::string>>());
  ckpt.max_tokens = header.at("max_tokens");
  const auto& meta = header.at("metadata");
  ckpt.meta = {meta.at("epoch"), meta.at("dev_f1"), meta.at("seed")};
  ckpt.model = init_model(config, ckpt.vocab.size(), 0);

  auto tensors = all_tensors(ckpt);
  const auto& table = header.at("tensors");
  if (table.size() != tensors.size()) throw Error("checkpoint tensor count does not match its configuration");
  const std::size_t data_start = pos;
  for (std::size_t i = 0; i < tensors.size(); ++i) {
    const auto& entry = table[i];
    auto& t = tensors[i];
    if (entry.at("name") != t.name || entry.at("shape")[0] != t.rows || entry.at("shape")[1] != t.cols)
      throw Error("checkpoint tensor " + entry.at("name").get<std::string>() + " does not match " + t.name);
    const std::size_t off = data_start + entry.at("offset").get<std::size_t>() * sizeof(double);
    const std::size_t len = static_cast<std::size_t>(t.size()) * sizeof(double);
    if (off + len > bytes.size()) throw Error("checkpoint is truncated");
    std::memcpy(t.data, bytes.data() + off, len);
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  const std::string tmp = path + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw Error("cannot write checkpoint " + tmp);
    const std::string bytes = encode_checkpoint(ckpt);
    out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw Error("failed writing checkpoint " + tmp);
  }
  std::filesystem::rename(tmp, path);
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return decode_checkpoint(ss.str());
}

}  // namespace tagqa
