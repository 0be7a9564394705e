#pragma once

#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <map>
#include <string>

#include "sdd/errors.hpp"
#include "sdd/model.hpp"

namespace sdd {

// Single-file binary checkpoint: magic + version, the originating
// ModelConfig, then every named parameter and normalization statistic.
namespace detail {

constexpr char kCkptMagic[8] = {'S', 'D', 'D', 'C', 'K', 'P', 'T', '1'};
constexpr uint32_t kCkptVersion = 1;

template <typename V>
void write_pod(std::ofstream& os, const V& v) {
  os.write(reinterpret_cast<const char*>(&v), sizeof(V));
}

template <typename V>
V read_pod(std::ifstream& is) {
  V v{};
  is.read(reinterpret_cast<char*>(&v), sizeof(V));
  return v;
}

inline void write_string(std::ofstream& os, const std::string& s) {
  write_pod(os, static_cast<uint32_t>(s.size()));
  os.write(s.data(), static_cast<std::streamsize>(s.size()));
}

inline std::string read_string(std::ifstream& is) {
  uint32_t n = read_pod<uint32_t>(is);
  std::string s(n, '\0');
  is.read(s.data(), n);
  return s;
}

}  // namespace detail

template <typename T>
void save_checkpoint(SegClsModel<T>& model, const std::filesystem::path& file) {
  std::ofstream os(file, std::ios::binary);
  if (!os) throw IoError("cannot open checkpoint for writing: " + file.string());
  os.write(detail::kCkptMagic, sizeof(detail::kCkptMagic));
  detail::write_pod(os, detail::kCkptVersion);
  detail::write_pod(os, static_cast<uint8_t>(sizeof(T)));
  const ModelConfig& c = model.config();
  detail::write_pod(os, static_cast<int32_t>(c.input_channels));
  detail::write_pod(os, static_cast<int32_t>(c.input_height));
  detail::write_pod(os, static_cast<int32_t>(c.input_width));
  detail::write_pod(os, static_cast<uint8_t>(c.stop_gradient_flow));
  detail::write_pod(os, static_cast<uint8_t>(c.batch_norm));
  detail::write_pod(os, static_cast<uint64_t>(c.init_seed));

  auto tensors = model.parameters();
  auto stats = model.statistics();
  tensors.insert(tensors.end(), stats.begin(), stats.end());
  detail::write_pod(os, static_cast<uint32_t>(tensors.size()));
  for (auto& t : tensors) {
    detail::write_string(os, t.name);
    detail::write_pod(os, static_cast<uint64_t>(t.value->size()));
    os.write(reinterpret_cast<const char*>(t.value->data()),
             static_cast<std::streamsize>(t.value->size() * sizeof(T)));
  }
  if (!os) throw IoError("short write while saving checkpoint: " + file.string());
}

template <typename T>
ModelConfig read_checkpoint_config(std::ifstream& is, const std::filesystem::path& file) {
  char magic[8];
  is.read(magic, sizeof(magic));
  if (!is || std::memcmp(magic, detail::kCkptMagic, sizeof(magic)) != 0)
    throw IoError("not a checkpoint file: " + file.string());
  uint32_t version = detail::read_pod<uint32_t>(is);
  if (version != detail::kCkptVersion)
    throw IoError("unsupported checkpoint version " + std::to_string(version) + " in " + file.string());
  uint8_t dtype = detail::read_pod<uint8_t>(is);
  if (dtype != sizeof(T))
    throw IoError("checkpoint scalar width " + std::to_string(dtype) + " does not match this model in " +
                  file.string());
  ModelConfig c;
  c.input_channels = detail::read_pod<int32_t>(is);
  c.input_height = detail::read_pod<int32_t>(is);
  c.input_width = detail::read_pod<int32_t>(is);
  c.stop_gradient_flow = detail::read_pod<uint8_t>(is) != 0;
  c.batch_norm = detail::read_pod<uint8_t>(is) != 0;
  c.init_seed = detail::read_pod<uint64_t>(is);
  return c;
}

// Fills an existing model; the checkpoint's config must match structurally.
template <typename T>
void load_checkpoint_into(SegClsModel<T>& model, const std::filesystem::path& file) {
  std::ifstream is(file, std::ios::binary);
  if (!is) throw IoError("cannot open checkpoint: " + file.string());
  ModelConfig stored = read_checkpoint_config<T>(is, file);
  if (!stored.same_structure(model.config()))
    throw ConfigError("checkpoint config mismatch for " + file.string());

  std::map<std::string, std::vector<T>*> slots;
  for (auto& t : model.parameters()) slots[t.name] = t.value;
  for (auto& t : model.statistics()) slots[t.name] = t.value;

  uint32_t count = detail::read_pod<uint32_t>(is);
  for (uint32_t i = 0; i < count; ++i) {
    std::string name = detail::read_string(is);
    uint64_t n = detail::read_pod<uint64_t>(is);
    auto it = slots.find(name);
    if (it == slots.end()) throw IoError("unknown tensor '" + name + "' in checkpoint " + file.string());
    if (it->second->size() != n)
      throw IoError("tensor '" + name + "' has wrong size in checkpoint " + file.string());
    is.read(reinterpret_cast<char*>(it->second->data()), static_cast<std::streamsize>(n * sizeof(T)));
    slots.erase(it);
  }
  if (!is) throw IoError("truncated checkpoint: " + file.string());
  if (!slots.empty()) throw IoError("checkpoint missing tensor '" + slots.begin()->first + "': " + file.string());
}

// Builds a model from the embedded config and fills it.
template <typename T>
SegClsModel<T> load_checkpoint(const std::filesystem::path& file) {
  std::ifstream probe(file, std::ios::binary);
  if (!probe) throw IoError("cannot open checkpoint: " + file.string());
  ModelConfig cfg = read_checkpoint_config<T>(probe, file);
  probe.close();
  SegClsModel<T> model(cfg);
  load_checkpoint_into(model, file);
  return model;
}

}  // namespace sdd
