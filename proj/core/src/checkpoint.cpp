#include "galds/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>

#include "galds/error.hpp"
#include "json.hpp"

static_assert(std::endian::native == std::endian::little,
              "container format assumes a little-endian host");

namespace galds {

using nlohmann::json;

void BlobContainer::put(const std::string& name, std::vector<int64_t> shape,
                        std::vector<double> data) {
  if (static_cast<int64_t>(data.size()) != shape_numel(shape))
    fail(ErrorCode::validation, "entry '" + name + "' data does not match shape");
  for (auto& e : entries_)
    if (e.name == name) fail(ErrorCode::validation, "duplicate entry '" + name + "'");
  entries_.push_back({name, std::move(shape), std::move(data)});
}

void BlobContainer::put_tensor(const std::string& name, const Tensor& t) {
  put(name, t.shape(), t.values());
}

bool BlobContainer::has(const std::string& name) const {
  for (auto& e : entries_)
    if (e.name == name) return true;
  return false;
}

const BlobContainer::Entry& BlobContainer::entry(const std::string& name) const {
  for (auto& e : entries_)
    if (e.name == name) return e;
  fail(ErrorCode::validation, "missing entry '" + name + "'");
}

Tensor BlobContainer::tensor(const std::string& name, bool requires_grad) const {
  const Entry& e = entry(name);
  return Tensor::from(e.shape, e.data, requires_grad);
}

void BlobContainer::set_meta(const std::string& key, const std::string& value) {
  meta_[key] = value;
}

void BlobContainer::set_meta_int(const std::string& key, int64_t value) {
  meta_[key] = std::to_string(value);
}

void BlobContainer::set_meta_double(const std::string& key, double value) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  meta_[key] = buf;
}

bool BlobContainer::has_meta(const std::string& key) const { return meta_.count(key) > 0; }

std::string BlobContainer::meta(const std::string& key) const {
  auto it = meta_.find(key);
  if (it == meta_.end()) fail(ErrorCode::validation, "missing metadata key '" + key + "'");
  return it->second;
}

int64_t BlobContainer::meta_int(const std::string& key) const {
  return std::stoll(meta(key));
}

double BlobContainer::meta_double(const std::string& key) const {
  return std::stod(meta(key));
}

std::vector<uint8_t> BlobContainer::serialize(const std::string& magic) const {
  if (magic.size() != 8) fail(ErrorCode::validation, "container magic must be 8 bytes");
  json header;
  header["meta"] = meta_;  // std::map keeps key order deterministic
  header["entries"] = json::array();
  for (auto& e : entries_) {
    json je;
    je["name"] = e.name;
    je["shape"] = e.shape;
    header["entries"].push_back(je);
  }
  std::string htext = header.dump();
  std::vector<uint8_t> out;
  out.reserve(16 + htext.size());
  out.insert(out.end(), magic.begin(), magic.end());
  uint64_t hlen = htext.size();
  uint8_t lenbuf[8];
  std::memcpy(lenbuf, &hlen, 8);
  out.insert(out.end(), lenbuf, lenbuf + 8);
  out.insert(out.end(), htext.begin(), htext.end());
  for (auto& e : entries_) {
    size_t at = out.size();
    out.resize(at + e.data.size() * sizeof(double));
    std::memcpy(out.data() + at, e.data.data(), e.data.size() * sizeof(double));
  }
  return out;
}

void BlobContainer::save(const std::filesystem::path& path, const std::string& magic) const {
  std::vector<uint8_t> bytes = serialize(magic);
  std::ofstream os(path, std::ios::binary | std::ios::trunc);
  if (!os) fail(ErrorCode::io, "cannot open '" + path.string() + "' for writing");
  os.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!os) fail(ErrorCode::io, "short write to '" + path.string() + "'");
}

BlobContainer BlobContainer::deserialize(const std::vector<uint8_t>& bytes,
                                         const std::string& magic) {
  if (bytes.size() < 16 || std::memcmp(bytes.data(), magic.data(), 8) != 0)
    fail(ErrorCode::io, "container magic mismatch (expected " + magic + ")");
  uint64_t hlen;
  std::memcpy(&hlen, bytes.data() + 8, 8);
  if (16 + hlen > bytes.size()) fail(ErrorCode::io, "truncated container header");
  json header = json::parse(bytes.begin() + 16, bytes.begin() + 16 + static_cast<ptrdiff_t>(hlen),
                            nullptr, false);
  if (header.is_discarded()) fail(ErrorCode::io, "malformed container header");
  BlobContainer c;
  for (auto& [k, v] : header.at("meta").items()) c.meta_[k] = v.get<std::string>();
  size_t at = 16 + hlen;
  for (auto& je : header.at("entries")) {
    Entry e;
    e.name = je.at("name").get<std::string>();
    e.shape = je.at("shape").get<std::vector<int64_t>>();
    size_t n = static_cast<size_t>(shape_numel(e.shape));
    if (at + n * sizeof(double) > bytes.size())
      fail(ErrorCode::io, "truncated container payload at entry '" + e.name + "'");
    e.data.resize(n);
    std::memcpy(e.data.data(), bytes.data() + at, n * sizeof(double));
    at += n * sizeof(double);
    c.entries_.push_back(std::move(e));
  }
  return c;
}

BlobContainer BlobContainer::load(const std::filesystem::path& path, const std::string& magic) {
  std::ifstream is(path, std::ios::binary);
  if (!is) fail(ErrorCode::io, "cannot open '" + path.string() + "'");
  std::vector<uint8_t> bytes((std::istreambuf_iterator<char>(is)),
                             std::istreambuf_iterator<char>());
  return deserialize(bytes, magic);
}

void save_checkpoint(const Checkpoint& ck, const std::filesystem::path& path) {
  ck.save(path, kCheckpointMagic);
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  return BlobContainer::load(path, kCheckpointMagic);
}

}  // namespace galds
