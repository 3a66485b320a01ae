#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "aat/tensor.hpp"

namespace aat {

// Binary checkpoint, all integers little-endian:
//
//   magic    8 bytes  "AATCKPT\0"
//   version  u32      (currently 1)
//   meta_len u32, meta bytes (UTF-8, conventionally JSON), meta_sum u64
//   count    u32      number of entries
//   entry*   name_len u32, name bytes,
//            rank u32, dims u64[rank],
//            payload f32[prod(dims)] (IEEE-754 binary32, little-endian),
//            payload_sum u64
//
// Both sums are 64-bit FNV-1a over the preceding meta/payload bytes.
//
// Parameters and optimizer buffers are both plain entries; by convention
// names are prefixed "student/", "teacher/", "discriminator/" and "momentum/".
struct Checkpoint {
  static constexpr std::uint32_t kVersion = 1;

  std::string metadata;
  std::vector<std::pair<std::string, Tensor<float>>> entries;

  const Tensor<float>* find(const std::string& name) const;
  const Tensor<float>& at(const std::string& name) const;
};

std::vector<std::uint8_t> encode_checkpoint(const Checkpoint& ckpt);
Checkpoint decode_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace aat
