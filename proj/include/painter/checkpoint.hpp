#pragma once

#include <filesystem>
#include <optional>
#include <string>

#include <json.hpp>

#include "painter/codec.hpp"
#include "painter/nn/adam.hpp"

namespace painter {

/// Everything needed to resume training or run inference.
struct Checkpoint {
  nn::ModelConfig config;
  Vocab vocab;
  nn::Weights<float> weights;
  std::optional<nn::AdamState<float>> adam;
  std::int64_t step = 0;
  nlohmann::json train;    // training configuration, free form
  nlohmann::json dataset;  // dataset manifest (classes, tasks, ...)
};

inline constexpr std::string_view kCheckpointMagic = "PNTRCKPT";
inline constexpr std::uint32_t kCheckpointVersion = 1;

/// Layout: magic, u32 version, u64 header length, JSON header (config,
/// vocabulary, tensor manifest, step, metadata), then every tensor as
/// little-endian float32 in manifest order, followed by the Adam moments
/// when present.
std::string serialize_checkpoint(const Checkpoint& c);

/// Throws VersionMismatch, ShapeMismatch (manifest or `expected` config
/// disagree with the data) or CheckpointError (corrupt or truncated).
Checkpoint deserialize_checkpoint(std::string_view bytes, const nn::ModelConfig* expected = nullptr);

void save_checkpoint(const Checkpoint& c, const std::filesystem::path& path);
Checkpoint load_checkpoint(const std::filesystem::path& path, const nn::ModelConfig* expected = nullptr);

std::string read_file(const std::filesystem::path& path);
void write_file(const std::filesystem::path& path, std::string_view bytes);

}  // namespace painter
