#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <string>
#include <vector>

#include "galds/tensor.hpp"

namespace galds {

// Binary container: 8-byte magic, little-endian u64 header length, JSON header
// (metadata plus named entry shapes in insertion order), then raw float64
// payloads in the same order. Deterministic byte-for-byte for equal content.
class BlobContainer {
 public:
  struct Entry {
    std::string name;
    std::vector<int64_t> shape;
    std::vector<double> data;
  };

  void put(const std::string& name, std::vector<int64_t> shape, std::vector<double> data);
  void put_tensor(const std::string& name, const Tensor& t);
  bool has(const std::string& name) const;
  const Entry& entry(const std::string& name) const;
  Tensor tensor(const std::string& name, bool requires_grad = false) const;
  const std::vector<Entry>& entries() const { return entries_; }

  void set_meta(const std::string& key, const std::string& value);
  void set_meta_int(const std::string& key, int64_t value);
  void set_meta_double(const std::string& key, double value);
  bool has_meta(const std::string& key) const;
  std::string meta(const std::string& key) const;
  int64_t meta_int(const std::string& key) const;
  double meta_double(const std::string& key) const;
  const std::map<std::string, std::string>& meta_map() const { return meta_; }

  std::vector<uint8_t> serialize(const std::string& magic) const;
  void save(const std::filesystem::path& path, const std::string& magic) const;
  static BlobContainer deserialize(const std::vector<uint8_t>& bytes, const std::string& magic);
  static BlobContainer load(const std::filesystem::path& path, const std::string& magic);

 private:
  std::vector<Entry> entries_;
  std::map<std::string, std::string> meta_;
};

inline constexpr const char* kCheckpointMagic = "GALDSCK1";
inline constexpr const char* kFieldSeriesMagic = "GALDSFS1";

using Checkpoint = BlobContainer;

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace galds
