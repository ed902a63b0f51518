#pragma once

// Declarative run configuration. One TOML file with sections [run],
// [trainer], [env], [generation], [policy] and [eval]; individual keys can
// be overridden with dotted paths ("trainer.M=5"). Unknown keys are errors.

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include "msgrpo/environments.hpp"
#include "msgrpo/lap.hpp"
#include "msgrpo/toy_policy.hpp"
#include "msgrpo/trainer.hpp"

namespace msgrpo {

struct RunConfig {
  // [run]
  std::uint64_t seed = 0;
  std::string output_dir = "runs/default";
  std::size_t checkpoint_every = 50;
  std::string template_id = "canonical";
  std::string template_dir;  // empty: built-in templates only

  TrainerConfig trainer;

  // [env]
  std::string variant = std::string(kLakeNotSlippery);
  double hole_prob = 0.2;
  std::optional<std::uint64_t> map_seed;  // generate one fixed map
  std::string map;                        // inline fixed map, rows separated by '/' or newlines
  std::string map_file;                   // fixed map from a file
  std::size_t step_cap = 0;

  GenerationConfig generation;

  // [policy]
  std::string init = "format_prior";  // or "zeros"
  double prior_strength = kFormatPriorStrength;

  // [eval]
  std::vector<std::string> eval_suites;  // variant ids, or "train" for the training environment
  std::size_t eval_episodes = 50;
  std::size_t eval_workers = 1;

  friend bool operator==(const RunConfig&, const RunConfig&) = default;

  /// Throws std::invalid_argument with a field path on the first problem.
  void validate() const;

  EnvConfig env_config() const;
  TrainingSetup training_setup() const;
  PolicyParams initial_params() const;
};

RunConfig parse_run_config(std::string_view toml_text, const std::vector<std::string>& overrides = {});
RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides = {});

/// TOML text that parses back to an equal RunConfig.
std::string to_toml(const RunConfig& config);

}  // namespace msgrpo
