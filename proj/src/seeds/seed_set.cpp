#include "agcl/seeds/seed_set.hpp"

#include <nlohmann/json.hpp>

#include <cstdint>
#include <cstring>
#include <fstream>
#include <stdexcept>

namespace fs = std::filesystem;

namespace agcl::seeds {

std::string provenance_name(Provenance p, int iteration_added) {
  switch (p) {
    case Provenance::s1_severity: return "S1-severity";
    case Provenance::s2_confidence: return "S2-confidence";
    case Provenance::additional: return "additional-iter-" + std::to_string(iteration_added);
  }
  return "S1-severity";
}

Provenance provenance_from_name(std::string_view name) {
  if (name == "S1-severity") return Provenance::s1_severity;
  if (name == "S2-confidence") return Provenance::s2_confidence;
  if (name.rfind("additional-iter-", 0) == 0) return Provenance::additional;
  throw std::invalid_argument("unknown seed provenance '" + std::string(name) + "'");
}

bool SeedSet::contains(const std::string& sample_id, int disease) const { return find(sample_id, disease) != nullptr; }

const SeedRecord* SeedSet::find(const std::string& sample_id, int disease) const {
  const auto d = by_disease_.find(disease);
  if (d == by_disease_.end()) return nullptr;
  const auto r = d->second.find(sample_id);
  return r == d->second.end() ? nullptr : &r->second;
}

SeedRecord* SeedSet::find(const std::string& sample_id, int disease) {
  return const_cast<SeedRecord*>(static_cast<const SeedSet&>(*this).find(sample_id, disease));
}

bool SeedSet::add(SeedRecord record) {
  if (!record.attention.all_finite() || record.attention.values.size() == 0) {
    throw std::invalid_argument("SeedSet::add: attention map for " + record.sample_id + " is missing or non-finite");
  }
  if (record.attention.class_id != record.disease) {
    throw std::invalid_argument("SeedSet::add: attention map class differs from record disease");
  }
  auto& bucket = by_disease_[record.disease];
  return bucket.emplace(record.sample_id, std::move(record)).second;
}

std::size_t SeedSet::size() const {
  std::size_t n = 0;
  for (const auto& [c, bucket] : by_disease_) n += bucket.size();
  return n;
}

std::size_t SeedSet::size(int disease) const {
  const auto d = by_disease_.find(disease);
  return d == by_disease_.end() ? 0 : d->second.size();
}

std::vector<int> SeedSet::diseases() const {
  std::vector<int> out;
  for (const auto& [c, bucket] : by_disease_) out.push_back(c);
  return out;
}

const std::map<std::string, SeedRecord>& SeedSet::records(int disease) const {
  static const std::map<std::string, SeedRecord> empty;
  const auto d = by_disease_.find(disease);
  return d == by_disease_.end() ? empty : d->second;
}

std::vector<nn::SeedTarget<float>> SeedSet::targets_for(const std::string& sample_id, int num_classes) const {
  std::vector<nn::SeedTarget<float>> targets;
  for (int c = 0; c < num_classes; ++c) {
    const SeedRecord* r = find(sample_id, c);
    if (!r) continue;
    if (targets.empty()) targets.resize(num_classes);
    targets[c] = {true, &r->attention};
  }
  return targets;
}

namespace {
constexpr char kHeatmapMagic[4] = {'A', 'G', 'H', 'M'};
}

void write_heatmap(const fs::path& path, const nn::Heatmap<float>& h) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot write heatmap " + path.string());
  const std::int32_t dims[3] = {h.class_id, h.height(), h.width()};
  out.write(kHeatmapMagic, sizeof kHeatmapMagic);
  out.write(reinterpret_cast<const char*>(dims), sizeof dims);
  for (int y = 0; y < h.height(); ++y) {
    for (int x = 0; x < h.width(); ++x) {
      const float v = h.values(y, x);
      out.write(reinterpret_cast<const char*>(&v), sizeof v);
    }
  }
}

nn::Heatmap<float> read_heatmap(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open heatmap " + path.string());
  char magic[4];
  std::int32_t dims[3];
  in.read(magic, sizeof magic);
  in.read(reinterpret_cast<char*>(dims), sizeof dims);
  if (!in || std::memcmp(magic, kHeatmapMagic, sizeof magic) != 0 || dims[1] <= 0 || dims[2] <= 0) {
    throw std::runtime_error(path.string() + ": not a heatmap file");
  }
  nn::Heatmap<float> h;
  h.class_id = dims[0];
  h.values.resize(dims[1], dims[2]);
  for (int y = 0; y < dims[1]; ++y) {
    for (int x = 0; x < dims[2]; ++x) {
      float v;
      in.read(reinterpret_cast<char*>(&v), sizeof v);
      h.values(y, x) = v;
    }
  }
  if (!in) throw std::runtime_error(path.string() + ": truncated heatmap");
  return h;
}

void save_seed_set(const SeedSet& seeds, const fs::path& dir) {
  fs::create_directories(dir / "maps");
  nlohmann::json index = {{"iteration", seeds.iteration}, {"diseases", nlohmann::json::array()}};
  for (int c : seeds.diseases()) {
    nlohmann::json records = nlohmann::json::array();
    for (const auto& [id, r] : seeds.records(c)) {
      const std::string file = "maps/" + id + "_c" + std::to_string(c) + ".hm";
      write_heatmap(dir / file, r.attention);
      records.push_back({{"sample_id", id},
                         {"provenance", provenance_name(r.provenance, r.iteration_added)},
                         {"iteration_added", r.iteration_added},
                         {"probability", r.probability},
                         {"map", file}});
    }
    const std::string name = "disease_" + std::to_string(c) + ".json";
    std::ofstream(dir / name) << nlohmann::json{{"disease", c}, {"records", records}}.dump(1) << '\n';
    index["diseases"].push_back({{"disease", c}, {"file", name}, {"count", records.size()}});
  }
  std::ofstream(dir / "index.json") << index.dump(2) << '\n';
}

SeedSet load_seed_set(const fs::path& dir) {
  std::ifstream in(dir / "index.json");
  if (!in) throw std::runtime_error("no seed index in " + dir.string());
  const auto index = nlohmann::json::parse(in);
  SeedSet seeds;
  seeds.iteration = index.value("iteration", 0);
  for (const auto& entry : index.at("diseases")) {
    const auto per = nlohmann::json::parse(std::ifstream(dir / entry.at("file").get<std::string>()));
    const int c = per.at("disease").get<int>();
    for (const auto& r : per.at("records")) {
      SeedRecord rec;
      rec.sample_id = r.at("sample_id").get<std::string>();
      rec.disease = c;
      rec.provenance = provenance_from_name(r.at("provenance").get<std::string>());
      rec.iteration_added = r.value("iteration_added", 0);
      rec.probability = r.value("probability", 0.0);
      const fs::path map = dir / r.at("map").get<std::string>();
      if (!fs::exists(map)) throw std::runtime_error("seed store corrupt: missing attention map " + map.string());
      rec.attention = read_heatmap(map);
      seeds.add(std::move(rec));
    }
  }
  return seeds;
}

}  // namespace agcl::seeds
