#pragma once

// Binary checkpoint layout (all integers and floats little-endian):
//
//   offset  size  field
//   0       4     magic "HKGE"
//   4       4     u32 format version (1)
//   8       4     u32 dim
//   12      4     u32 |E|
//   16      4     u32 |R'|
//   20      1     u8 curvature mode (0 fixed, 1 global, 2 per-relation, 3 attention)
//   21      1     u8 geometry (0 hyperbolic, 1 euclidean)
//   22      1     u8 flags (bit 0 inter-level, bit 1 intra-level)
//   23      1     u8 reserved (0)
//   24      ...   f32 arrays: entity emb, entity bias, relation emb, scale, theta, trans,
//                 attention vector a, projection vector p, curvature pre-activations

#include <array>
#include <bit>
#include <concepts>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "hkge/config.hpp"
#include "hkge/error.hpp"
#include "hkge/model.hpp"

namespace hkge {

inline constexpr std::array<char, 4> kCheckpointMagic = {'H', 'K', 'G', 'E'};
inline constexpr std::uint32_t kCheckpointVersion = 1;
inline constexpr std::size_t kCheckpointHeaderSize = 24;

struct CheckpointHeader {
  std::uint32_t version = kCheckpointVersion;
  ModelConfig config;
  std::uint32_t n_entities = 0;
  std::uint32_t n_relations = 0;
};

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline std::uint32_t get_u32(const std::uint8_t* p) {
  return static_cast<std::uint32_t>(p[0]) | (static_cast<std::uint32_t>(p[1]) << 8) |
         (static_cast<std::uint32_t>(p[2]) << 16) | (static_cast<std::uint32_t>(p[3]) << 24);
}

}  // namespace detail

template <std::floating_point T>
std::vector<std::uint8_t> serialize_checkpoint(const Model<T>& model) {
  const auto& cfg = model.config();
  std::vector<std::uint8_t> out;
  out.insert(out.end(), kCheckpointMagic.begin(), kCheckpointMagic.end());
  detail::put_u32(out, kCheckpointVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(cfg.dim));
  detail::put_u32(out, static_cast<std::uint32_t>(model.num_entities()));
  detail::put_u32(out, static_cast<std::uint32_t>(model.num_relations()));
  out.push_back(static_cast<std::uint8_t>(cfg.curvature_mode));
  out.push_back(static_cast<std::uint8_t>(cfg.geometry));
  out.push_back(static_cast<std::uint8_t>((cfg.use_inter_level ? 1u : 0u) | (cfg.use_intra_level ? 2u : 0u)));
  out.push_back(0);
  for (auto g : kAllParamGroups) {
    for (T v : model.table(g).data) detail::put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
  }
  return out;
}

inline CheckpointHeader parse_checkpoint_header(const std::vector<std::uint8_t>& bytes) {
  if (bytes.size() < kCheckpointHeaderSize) throw FormatError("checkpoint truncated: header incomplete");
  if (!std::equal(kCheckpointMagic.begin(), kCheckpointMagic.end(), bytes.begin())) {
    throw FormatError("checkpoint has bad magic bytes (expected \"HKGE\")");
  }
  CheckpointHeader h;
  const auto* p = bytes.data();
  h.version = detail::get_u32(p + 4);
  if (h.version != kCheckpointVersion) {
    throw FormatError("unsupported checkpoint version " + std::to_string(h.version));
  }
  h.config.dim = static_cast<int>(detail::get_u32(p + 8));
  h.n_entities = detail::get_u32(p + 12);
  h.n_relations = detail::get_u32(p + 16);
  if (p[20] > 3) throw FormatError("checkpoint has unknown curvature mode tag");
  if (p[21] > 1) throw FormatError("checkpoint has unknown geometry tag");
  if (p[22] > 3 || p[23] != 0) throw FormatError("checkpoint has invalid flag bytes");
  h.config.curvature_mode = static_cast<CurvatureMode>(p[20]);
  h.config.geometry = static_cast<Geometry>(p[21]);
  h.config.use_inter_level = (p[22] & 1u) != 0;
  h.config.use_intra_level = (p[22] & 2u) != 0;
  try {
    h.config.validate();
  } catch (const DomainError& e) {
    throw FormatError(std::string("checkpoint header: ") + e.what());
  }
  return h;
}

template <std::floating_point T>
Model<T> deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  const auto header = parse_checkpoint_header(bytes);
  Model<T> model(header.config, header.n_entities, header.n_relations);
  std::size_t expected = kCheckpointHeaderSize;
  for (auto g : kAllParamGroups) expected += 4 * model.table(g).data.size();
  if (bytes.size() != expected) {
    throw FormatError("checkpoint size " + std::to_string(bytes.size()) + " does not match header (expected " +
                      std::to_string(expected) + " bytes)");
  }
  const std::uint8_t* p = bytes.data() + kCheckpointHeaderSize;
  for (auto g : kAllParamGroups) {
    for (auto& v : model.table(g).data) {
      v = static_cast<T>(std::bit_cast<float>(detail::get_u32(p)));
      p += 4;
    }
  }
  return model;
}

/// Writes to a sibling temporary file and renames it over `path`.
template <std::floating_point T>
void save_checkpoint(const std::filesystem::path& path, const Model<T>& model) {
  const auto bytes = serialize_checkpoint(model);
  auto tmp = path;
  tmp += ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw FormatError("cannot write checkpoint " + tmp.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw FormatError("short write on checkpoint " + tmp.string());
  }
  std::filesystem::rename(tmp, path);
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw FormatError("cannot open " + path.string());
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

template <std::floating_point T>
Model<T> load_checkpoint(const std::filesystem::path& path) {
  return deserialize_checkpoint<T>(read_file_bytes(path));
}

}  // namespace hkge
