#pragma once

#include <array>
#include <cstdint>
#include <string>

#include "admgs/adam.hpp"
#include "admgs/fields.hpp"
#include "admgs/scene.hpp"

namespace admgs {

// Binary checkpoint: magic "ADMG", u32 version, u64 header length, JSON
// header (tensor directory + run state), little-endian f32 tensor payload,
// trailing CRC32 of all preceding bytes.
inline constexpr std::uint32_t kCheckpointVersion = 1;

struct CheckpointState {
  long long iteration = 0;
  long long adam_step = 0;
  std::array<std::uint64_t, 4> rng_state{};
  int cursor_traversal = 0;
  std::vector<long long> cursor_frames;
  std::string config_json;  // effective run configuration echo
};

void save_checkpoint(const std::string& path, SceneGraph<float>& scene,
                     FieldSet<float>& fields, const AdamState<float>* adam,
                     const CheckpointState& state);

struct LoadedCheckpoint {
  SceneGraph<float> scene;
  FieldSet<float> fields;
  AdamState<float> adam;
  bool has_optimizer = false;
  CheckpointState state;
};

// Throws VersionMismatch / TruncatedFile / ChecksumFailure respectively.
LoadedCheckpoint load_checkpoint(const std::string& path);

}  // namespace admgs
