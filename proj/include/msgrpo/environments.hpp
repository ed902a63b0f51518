#pragma once

#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "msgrpo/frozen_lake.hpp"
#include "msgrpo/snake.hpp"

namespace msgrpo {

inline constexpr std::string_view kSnakeStandard = "snake-standard";
inline constexpr std::string_view kSnakePoison = "snake-poison";
inline constexpr std::string_view kLakeSlippery = "frozenlake-slippery";
inline constexpr std::string_view kLakeNotSlippery = "frozenlake-not-slippery";

const std::vector<std::string>& all_variants();
bool is_lake_variant(std::string_view variant);

inline constexpr std::size_t kSnakeStepCap = 100;
inline constexpr std::size_t kLakeStepCap = 20;

/// Selects and parameterises one of the four game variants.
struct EnvConfig {
  std::string variant = std::string(kLakeNotSlippery);
  double hole_prob = 0.2;
  std::optional<LakeMap> fixed_map;
  std::size_t step_cap = 0;  // 0 picks the variant default

  std::size_t effective_step_cap() const;
  void validate() const;
};

std::unique_ptr<Environment> make_environment(const EnvConfig& config, std::uint64_t seed);

/// Scripted controllers for players 1..p-1 of the variant.
std::vector<std::unique_ptr<ScriptedPlayer>> make_opponents(const EnvConfig& config);

/// Borrowed pointers in the form run_episode takes.
std::vector<const ScriptedPlayer*> borrow(const std::vector<std::unique_ptr<ScriptedPlayer>>& players);

}  // namespace msgrpo
