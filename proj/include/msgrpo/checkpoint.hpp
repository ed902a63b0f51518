#pragma once

#include <filesystem>
#include <string>

#include "msgrpo/lap.hpp"
#include "msgrpo/toy_policy.hpp"

namespace msgrpo {

inline constexpr int kCheckpointSchemaVersion = 1;

/// Everything needed to rebuild the language agent policy of a run.
struct Checkpoint {
  std::size_t iteration = 0;
  PolicyParams params;
  GenerationConfig generation;
  PromptTemplate prompt = canonical_template();
};

/// JSON text; doubles are written with round-trip precision.
std::string serialize_checkpoint(const Checkpoint& ckpt);
Checkpoint deserialize_checkpoint(std::string_view text);

/// Writes the file and returns the SHA-256 of its bytes (lowercase hex).
std::string save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path);

/// Throws std::invalid_argument if the file is missing or malformed, or if
/// `expected_sha256` is given and does not match.
Checkpoint load_checkpoint(const std::filesystem::path& path, std::string_view expected_sha256 = {});

std::string sha256_hex(std::string_view bytes);
std::string file_sha256(const std::filesystem::path& path);

}  // namespace msgrpo
