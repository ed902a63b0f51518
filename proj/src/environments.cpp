#include "msgrpo/environments.hpp"

#include <algorithm>

namespace msgrpo {

const std::vector<std::string>& all_variants() {
  static const std::vector<std::string> v{std::string(kSnakeStandard), std::string(kSnakePoison),
                                          std::string(kLakeSlippery), std::string(kLakeNotSlippery)};
  return v;
}

bool is_lake_variant(std::string_view variant) { return variant == kLakeSlippery || variant == kLakeNotSlippery; }

std::size_t EnvConfig::effective_step_cap() const {
  if (step_cap > 0) return step_cap;
  return is_lake_variant(variant) ? kLakeStepCap : kSnakeStepCap;
}

void EnvConfig::validate() const {
  const auto& v = all_variants();
  if (std::find(v.begin(), v.end(), variant) == v.end())
    throw std::invalid_argument("env.variant: unknown variant '" + variant + "'");
  if (!(hole_prob >= 0.0 && hole_prob < 1.0)) throw std::invalid_argument("env.hole_prob: must be in [0, 1)");
  if (fixed_map && !is_lake_variant(variant))
    throw std::invalid_argument("env.map: a fixed map only applies to frozen lake variants");
  if (fixed_map && !has_safe_path(*fixed_map)) throw std::invalid_argument("env.map: map has no safe path");
}

std::unique_ptr<Environment> make_environment(const EnvConfig& config, std::uint64_t seed) {
  config.validate();
  if (is_lake_variant(config.variant)) {
    LakeConfig lc;
    lc.variant = config.variant == kLakeSlippery ? LakeVariant::Slippery : LakeVariant::NotSlippery;
    lc.hole_prob = config.hole_prob;
    lc.fixed_map = config.fixed_map;
    if (lc.fixed_map) lc.size = lc.fixed_map->size();
    return std::make_unique<FrozenLakeEnv>(std::move(lc), seed);
  }
  SnakeConfig sc;
  sc.variant = config.variant == kSnakePoison ? SnakeVariant::Poison : SnakeVariant::Standard;
  return std::make_unique<SnakeEnv>(sc, seed);
}

std::vector<std::unique_ptr<ScriptedPlayer>> make_opponents(const EnvConfig& config) {
  std::vector<std::unique_ptr<ScriptedPlayer>> out;
  if (!is_lake_variant(config.variant)) out.push_back(std::make_unique<SnakeOpponent>());
  return out;
}

std::vector<const ScriptedPlayer*> borrow(const std::vector<std::unique_ptr<ScriptedPlayer>>& players) {
  std::vector<const ScriptedPlayer*> out;
  for (const auto& p : players) out.push_back(p.get());
  return out;
}

}  // namespace msgrpo
