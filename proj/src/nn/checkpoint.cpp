#include "agcl/nn/checkpoint.hpp"

#include <cstdint>
#include <cstring>
#include <fstream>
#include <map>
#include <stdexcept>

namespace fs = std::filesystem;

namespace agcl::nn {

namespace {

constexpr char kMagic[8] = {'A', 'G', 'C', 'L', 'C', 'K', 'P', 'T'};
constexpr std::uint32_t kVersion = 1;

static_assert(sizeof(float) == 4, "checkpoints store IEEE-754 binary32");

template <typename Model>
void write_file(const fs::path& path, Model& model, const std::string& kind, nlohmann::json header_extra,
                const CheckpointMeta& meta, const Trunk<float>& trunk) {
  auto views = parameter_views(model);
  nlohmann::json index = nlohmann::json::array();
  std::uint64_t offset = 0;
  for (const auto& v : views) {
    index.push_back({{"name", v.name}, {"rows", v.rows}, {"cols", v.cols}, {"offset", offset}});
    offset += static_cast<std::uint64_t>(v.size()) * sizeof(float);
  }
  nlohmann::json header = {{"kind", kind},
                           {"scalar", "float32"},
                           {"input_size", trunk.input_size},
                           {"input_mean", trunk.input_mean},
                           {"input_scale", trunk.input_scale},
                           {"tensors", index},
                           {"config", meta.config},
                           {"epoch", meta.epoch},
                           {"rng_state", meta.rng_state},
                           {"extra", meta.extra}};
  header.update(header_extra);
  const std::string text = header.dump();

  const fs::path tmp = fs::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write checkpoint " + tmp.string());
    out.write(kMagic, sizeof kMagic);
    out.write(reinterpret_cast<const char*>(&kVersion), sizeof kVersion);
    const std::uint64_t len = text.size();
    out.write(reinterpret_cast<const char*>(&len), sizeof len);
    out.write(text.data(), static_cast<std::streamsize>(text.size()));
    for (const auto& v : views) {
      out.write(reinterpret_cast<const char*>(v.data), static_cast<std::streamsize>(v.size() * sizeof(float)));
    }
    if (!out) throw std::runtime_error("short write to checkpoint " + tmp.string());
  }
  fs::rename(tmp, path);
}

struct RawCheckpoint {
  nlohmann::json header;
  std::map<std::string, Matrix<float>> tensors;
};

nlohmann::json read_header(std::ifstream& in, const fs::path& path) {
  char magic[8];
  in.read(magic, sizeof magic);
  if (!in || std::memcmp(magic, kMagic, sizeof magic) != 0) {
    throw std::runtime_error(path.string() + ": not an AGCL checkpoint");
  }
  std::uint32_t version = 0;
  in.read(reinterpret_cast<char*>(&version), sizeof version);
  if (version != kVersion) throw std::runtime_error(path.string() + ": unsupported checkpoint version");
  std::uint64_t len = 0;
  in.read(reinterpret_cast<char*>(&len), sizeof len);
  std::string text(len, '\0');
  in.read(text.data(), static_cast<std::streamsize>(len));
  if (!in) throw std::runtime_error(path.string() + ": truncated header");
  return nlohmann::json::parse(text);
}

RawCheckpoint read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  RawCheckpoint raw;
  raw.header = read_header(in, path);
  if (raw.header.at("scalar") != "float32") throw std::runtime_error(path.string() + ": unsupported scalar type");
  const auto data_start = in.tellg();
  for (const auto& t : raw.header.at("tensors")) {
    Matrix<float> m(t.at("rows").get<Eigen::Index>(), t.at("cols").get<Eigen::Index>());
    in.seekg(data_start + static_cast<std::streamoff>(t.at("offset").get<std::uint64_t>()));
    in.read(reinterpret_cast<char*>(m.data()), static_cast<std::streamsize>(m.size() * sizeof(float)));
    if (!in) throw std::runtime_error(path.string() + ": truncated tensor " + t.at("name").get<std::string>());
    raw.tensors.emplace(t.at("name").get<std::string>(), std::move(m));
  }
  return raw;
}

Matrix<float> take(RawCheckpoint& raw, const std::string& name) {
  auto it = raw.tensors.find(name);
  if (it == raw.tensors.end()) throw std::runtime_error("checkpoint is missing tensor " + name);
  return std::move(it->second);
}

Trunk<float> read_trunk(RawCheckpoint& raw) {
  Trunk<float> trunk;
  trunk.input_size = raw.header.at("input_size").get<int>();
  trunk.input_mean = raw.header.value("input_mean", 0.0);
  trunk.input_scale = raw.header.value("input_scale", 1.0);
  for (int i = 0;; ++i) {
    const std::string prefix = "trunk.conv" + std::to_string(i);
    if (!raw.tensors.count(prefix + ".weight")) break;
    ConvLayer<float> layer;
    layer.weight = take(raw, prefix + ".weight");
    layer.bias = take(raw, prefix + ".bias");
    trunk.layers.push_back(std::move(layer));
  }
  if (trunk.layers.empty()) throw std::runtime_error("checkpoint has no trunk layers");
  return trunk;
}

void fill_meta(const RawCheckpoint& raw, CheckpointMeta* meta) {
  if (!meta) return;
  meta->config = raw.header.value("config", nlohmann::json::object());
  meta->epoch = raw.header.value("epoch", 0);
  meta->rng_state = raw.header.value("rng_state", std::string());
  meta->extra = raw.header.value("extra", nlohmann::json::object());
}

}  // namespace

void save_checkpoint(const fs::path& path, const MultiLabelModel<float>& model, const CheckpointMeta& meta) {
  auto copy = model;
  write_file(path, copy, "multilabel", nlohmann::json::object(), meta, model.trunk);
}

void save_checkpoint(const fs::path& path, const BinaryModel<float>& model, const CheckpointMeta& meta) {
  auto copy = model;
  write_file(path, copy, "binary", {{"disease", model.disease}}, meta, model.trunk);
}

MultiLabelModel<float> load_multilabel(const fs::path& path, CheckpointMeta* meta) {
  RawCheckpoint raw = read_file(path);
  if (raw.header.at("kind") != "multilabel") throw std::runtime_error(path.string() + ": not a multi-label checkpoint");
  MultiLabelModel<float> model;
  model.trunk = read_trunk(raw);
  model.head.weight = take(raw, "head.multilabel.weight");
  model.head.bias = take(raw, "head.multilabel.bias");
  fill_meta(raw, meta);
  return model;
}

BinaryModel<float> load_binary(const fs::path& path, CheckpointMeta* meta) {
  RawCheckpoint raw = read_file(path);
  if (raw.header.at("kind") != "binary") throw std::runtime_error(path.string() + ": not a binary checkpoint");
  BinaryModel<float> model;
  model.disease = raw.header.at("disease").get<int>();
  model.trunk = read_trunk(raw);
  model.head.weight = take(raw, "head.binary.weight");
  model.head.bias = take(raw, "head.binary.bias");
  fill_meta(raw, meta);
  return model;
}

std::string checkpoint_kind(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open checkpoint " + path.string());
  return read_header(in, path).at("kind").get<std::string>();
}

}  // namespace agcl::nn
