#include "aat/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "aat/errors.hpp"

namespace aat {
namespace {

constexpr char kMagic[8] = {'A', 'A', 'T', 'C', 'K', 'P', 'T', '\0'};
constexpr std::uint64_t kMaxRank = 8;

std::uint64_t fnv1a(const std::uint8_t* data, std::size_t n) {
  std::uint64_t h = 1469598103934665603ULL;
  for (std::size_t i = 0; i < n; ++i) {
    h ^= data[i];
    h *= 1099511628211ULL;
  }
  return h;
}

class Writer {
 public:
  void u32(std::uint32_t v) { le(v, 4); }
  void u64(std::uint64_t v) { le(v, 8); }
  void bytes(const void* p, std::size_t n) {
    const auto* b = static_cast<const std::uint8_t*>(p);
    out.insert(out.end(), b, b + n);
  }
  void f32(float v) { u32(std::bit_cast<std::uint32_t>(v)); }

  std::vector<std::uint8_t> out;

 private:
  void le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
};

class Reader {
 public:
  Reader(const std::vector<std::uint8_t>& in, std::size_t end) : in_(in), end_(end) {}

  std::uint64_t le(int n, const std::string& what) {
    need(static_cast<std::size_t>(n), what);
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(in_[pos_ + i]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  std::uint32_t u32(const std::string& what) { return static_cast<std::uint32_t>(le(4, what)); }
  std::uint64_t u64(const std::string& what) { return le(8, what); }
  std::string str(std::size_t n, const std::string& what) {
    need(n, what);
    std::string s(reinterpret_cast<const char*>(in_.data() + pos_), n);
    pos_ += n;
    return s;
  }
  float f32(const std::string& what) { return std::bit_cast<float>(u32(what)); }
  std::size_t remaining() const { return end_ - pos_; }

 private:
  void need(std::size_t n, const std::string& what) {
    if (end_ - pos_ < n) throw FormatError("checkpoint truncated while reading " + what);
  }
  const std::vector<std::uint8_t>& in_;
  std::size_t end_;
  std::size_t pos_ = 0;
};

}  // namespace

const Tensor<float>* Checkpoint::find(const std::string& name) const {
  for (const auto& [n, t] : entries) {
    if (n == name) return &t;
  }
  return nullptr;
}

const Tensor<float>& Checkpoint::at(const std::string& name) const {
  if (const auto* t = find(name)) return *t;
  throw FormatError("checkpoint has no entry '" + name + "'");
}

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt) {
  Writer w;
  w.bytes(kMagic, sizeof(kMagic));
  w.u32(Checkpoint::kVersion);
  w.u32(static_cast<std::uint32_t>(ckpt.metadata.size()));
  w.bytes(ckpt.metadata.data(), ckpt.metadata.size());
  w.u64(fnv1a(reinterpret_cast<const std::uint8_t*>(ckpt.metadata.data()), ckpt.metadata.size()));
  w.u32(static_cast<std::uint32_t>(ckpt.entries.size()));
  for (const auto& [name, t] : ckpt.entries) {
    w.u32(static_cast<std::uint32_t>(name.size()));
    w.bytes(name.data(), name.size());
    w.u32(static_cast<std::uint32_t>(t.rank()));
    for (std::size_t d : t.shape()) w.u64(d);
    const std::size_t payload_at = w.out.size();
    for (float v : t.data()) w.f32(v);
    w.u64(fnv1a(w.out.data() + payload_at, w.out.size() - payload_at));
  }
  return std::move(w.out);
}

Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < sizeof(kMagic) || std::memcmp(bytes.data(), kMagic, sizeof(kMagic)) != 0) {
    throw FormatError("not a checkpoint (bad magic)");
  }
  Reader r(bytes, bytes.size());
  r.str(sizeof(kMagic), "magic");
  const std::uint32_t version = r.u32("version");
  if (version != Checkpoint::kVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(version));
  }
  Checkpoint ckpt;
  ckpt.metadata = r.str(r.u32("metadata length"), "metadata");
  if (r.u64("metadata checksum") !=
      fnv1a(reinterpret_cast<const std::uint8_t*>(ckpt.metadata.data()), ckpt.metadata.size())) {
    throw FormatError("checkpoint metadata checksum mismatch");
  }
  const std::uint32_t count = r.u32("entry count");
  for (std::uint32_t e = 0; e < count; ++e) {
    const std::string idx = "entry #" + std::to_string(e);
    const std::string name = r.str(r.u32(idx + " name length"), idx + " name");
    const std::string where = "entry '" + name + "'";
    const std::uint32_t rank = r.u32(where + " rank");
    if (rank > kMaxRank) throw FormatError(where + ": implausible rank " + std::to_string(rank));
    Shape shape;
    std::uint64_t numel = 1;
    for (std::uint32_t d = 0; d < rank; ++d) {
      const std::uint64_t dim = r.u64(where + " shape");
      numel *= dim;
      if (numel * 4 > r.remaining()) throw FormatError(where + ": payload larger than file");
      shape.push_back(static_cast<std::size_t>(dim));
    }
    const std::size_t payload_at = bytes.size() - r.remaining();
    std::vector<float> data(static_cast<std::size_t>(numel));
    for (float& v : data) v = r.f32(where + " payload");
    if (r.u64(where + " checksum") != fnv1a(bytes.data() + payload_at, data.size() * 4)) {
      throw FormatError(where + ": checksum mismatch (corrupt payload)");
    }
    ckpt.entries.emplace_back(name, Tensor<float>(std::move(shape), std::move(data)));
  }
  if (r.remaining() != 0) throw FormatError("trailing bytes after the last checkpoint entry");
  for (const auto& [name, t] : ckpt.entries) {
    if (!t.all_finite()) throw FormatError("entry '" + name + "': non-finite values");
  }
  return ckpt;
}

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const auto bytes = encode_checkpoint(ckpt);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write checkpoint " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed writing checkpoint " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return decode_checkpoint(bytes);
}

}  // namespace aat
