#pragma once

namespace glio {

inline constexpr const char* kVersion = "0.1.0";

// Bumped whenever an on-disk schema changes incompatibly.
inline constexpr int kManifestSchemaVersion = 1;
inline constexpr int kCheckpointSchemaVersion = 1;
inline constexpr int kConfigSchemaVersion = 1;

}  // namespace glio
