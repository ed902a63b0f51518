#pragma once

#include <functional>

#include "msgrpo/lap.hpp"
#include "msgrpo/tmsg.hpp"
#include "msgrpo/toy_policy.hpp"

namespace msgrpo {

/// Prompt construction, stochastic generation and parsing in one call.
Decision act(const PolicyParams& params, const GenerationConfig& gen, const PromptTemplate& tmpl,
             const Observation& observation, Rng& rng);

/// A language agent policy over the toy token model. Holds an immutable
/// snapshot, so rollouts never observe parameter updates.
class LapPolicy final : public LearnerPolicy {
 public:
  LapPolicy(ParamsSnapshot params, GenerationConfig gen, PromptTemplate tmpl);

  Decision act(const Observation& observation, Rng& rng, const StepContext& ctx) const override;
  const PolicyParams* trainable_params() const override { return params_.get(); }

  const GenerationConfig& generation() const { return gen_; }
  const PromptTemplate& prompt_template() const { return tmpl_; }

 private:
  ParamsSnapshot params_;
  GenerationConfig gen_;
  PromptTemplate tmpl_;
};

/// Wraps a direction chooser; answers with the canonical completion text.
class ScriptedTextPolicy final : public LearnerPolicy {
 public:
  using Chooser = std::function<Direction(const Observation&, Rng&)>;

  explicit ScriptedTextPolicy(Chooser chooser, PromptTemplate tmpl = canonical_template());

  Decision act(const Observation& observation, Rng& rng, const StepContext& ctx) const override;

 private:
  Chooser chooser_;
  PromptTemplate tmpl_;
};

/// Uniformly random direction each step.
ScriptedTextPolicy random_text_policy();

/// Replays a fixed list of completion texts, then repeats the last one.
class FixedTextPolicy final : public LearnerPolicy {
 public:
  explicit FixedTextPolicy(std::vector<std::string> completions, PromptTemplate tmpl = canonical_template());

  Decision act(const Observation& observation, Rng& rng, const StepContext& ctx) const override;

 private:
  std::vector<std::string> completions_;
  PromptTemplate tmpl_;
};

/// Token count used for the length penalty of free text: the vocabulary
/// segmentation when one exists, otherwise one token per 4 bytes.
std::size_t approximate_token_count(std::string_view text, const Vocabulary& vocab = default_vocabulary());

}  // namespace msgrpo
