#pragma once

#include <cstdint>
#include <cstring>
#include <fstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "scribblevs/common.hpp"
#include "scribblevs/model/unet.hpp"

namespace scribblevs {

/// Serialized training state: both parameter sets plus the optimizer buffer,
/// enough to resume or to evaluate either network.
struct Checkpoint {
  UNetConfig net;
  int64_t iter = 0;  // completed optimization steps
  std::vector<float> student;
  std::vector<float> teacher;
  std::vector<float> momentum;
};

namespace detail {

inline constexpr char kCheckpointMagic[8] = {'S', 'V', 'C', 'K', 'P', 'T', '0', '0'};
inline constexpr uint32_t kCheckpointVersion = 1;

inline void write_bytes(std::ofstream& out, const void* p, size_t n, const std::string& path) {
  out.write(static_cast<const char*>(p), static_cast<std::streamsize>(n));
  if (!out) throw IoError("checkpoint: short write to '" + path + "'");
}

inline void read_bytes(std::ifstream& in, void* p, size_t n, const std::string& path) {
  in.read(static_cast<char*>(p), static_cast<std::streamsize>(n));
  if (in.gcount() != static_cast<std::streamsize>(n)) {
    throw IoError("checkpoint: truncated read from '" + path + "'");
  }
}

}  // namespace detail

inline void save_checkpoint(const std::string& path, const Checkpoint& cp) {
  if (cp.student.size() != cp.teacher.size() || cp.student.size() != cp.momentum.size()) {
    throw StructuralError("checkpoint: parameter buffers disagree in size");
  }
  const nlohmann::json header{{"iter", cp.iter},
                              {"in_channels", cp.net.in_channels},
                              {"num_classes", cp.net.num_classes},
                              {"base_width", cp.net.base_width},
                              {"depth", cp.net.depth},
                              {"param_count", cp.student.size()}};
  const std::string header_text = header.dump();

  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("checkpoint: cannot open '" + path + "' for writing");
  detail::write_bytes(out, detail::kCheckpointMagic, sizeof(detail::kCheckpointMagic), path);
  const uint32_t version = detail::kCheckpointVersion;
  detail::write_bytes(out, &version, sizeof(version), path);
  const uint64_t header_len = header_text.size();
  detail::write_bytes(out, &header_len, sizeof(header_len), path);
  detail::write_bytes(out, header_text.data(), header_text.size(), path);
  for (const auto* blob : {&cp.student, &cp.teacher, &cp.momentum}) {
    detail::write_bytes(out, blob->data(), blob->size() * sizeof(float), path);
  }
  out.close();
  if (!out) throw IoError("checkpoint: failed to finish writing '" + path + "'");
}

inline Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("checkpoint: cannot open '" + path + "'");
  char magic[sizeof(detail::kCheckpointMagic)];
  detail::read_bytes(in, magic, sizeof(magic), path);
  if (std::memcmp(magic, detail::kCheckpointMagic, sizeof(magic)) != 0) {
    throw IoError("checkpoint: '" + path + "' is not a checkpoint file");
  }
  uint32_t version = 0;
  detail::read_bytes(in, &version, sizeof(version), path);
  if (version != detail::kCheckpointVersion) {
    throw IoError("checkpoint: '" + path + "' has unsupported version " + std::to_string(version));
  }
  uint64_t header_len = 0;
  detail::read_bytes(in, &header_len, sizeof(header_len), path);
  if (header_len > (1u << 20)) throw IoError("checkpoint: '" + path + "' header length implausible");
  std::string header_text(header_len, '\0');
  detail::read_bytes(in, header_text.data(), header_len, path);

  nlohmann::json header;
  try {
    header = nlohmann::json::parse(header_text);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: '" + path + "' header is not valid JSON: " + std::string(e.what()));
  }
  Checkpoint cp;
  try {
    cp.iter = header.at("iter").get<int64_t>();
    cp.net.in_channels = header.at("in_channels").get<int>();
    cp.net.num_classes = header.at("num_classes").get<int>();
    cp.net.base_width = header.at("base_width").get<int>();
    cp.net.depth = header.at("depth").get<int>();
    const auto count = header.at("param_count").get<uint64_t>();
    cp.student.resize(count);
    cp.teacher.resize(count);
    cp.momentum.resize(count);
  } catch (const nlohmann::json::exception& e) {
    throw IoError("checkpoint: '" + path + "' header incomplete: " + std::string(e.what()));
  }
  for (auto* blob : {&cp.student, &cp.teacher, &cp.momentum}) {
    detail::read_bytes(in, blob->data(), blob->size() * sizeof(float), path);
  }
  return cp;
}

}  // namespace scribblevs
