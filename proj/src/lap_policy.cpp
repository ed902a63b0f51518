#include "msgrpo/lap_policy.hpp"

#include <algorithm>

namespace msgrpo {

namespace {

Decision text_decision(const PromptTemplate& tmpl, const Observation& observation, std::string completion) {
  Decision d;
  d.prompt = build_prompt(tmpl, observation.text);
  if (auto ids = default_vocabulary().try_encode(completion)) d.completion_tokens = *std::move(ids);
  d.completion_length = approximate_token_count(completion);
  d.parsed = parse_action(completion);
  d.completion_text = std::move(completion);
  return d;
}

}  // namespace

Decision act(const PolicyParams& params, const GenerationConfig& gen, const PromptTemplate& tmpl,
             const Observation& observation, Rng& rng) {
  Decision d;
  d.prompt = build_prompt(tmpl, observation.text);
  d.completion_tokens = sample_completion(params, gen, d.prompt, rng);
  d.completion_text = params.vocab.decode(d.completion_tokens);
  d.completion_length = d.completion_tokens.size();
  d.parsed = parse_action(d.completion_text);
  return d;
}

LapPolicy::LapPolicy(ParamsSnapshot params, GenerationConfig gen, PromptTemplate tmpl)
    : params_(std::move(params)), gen_(gen), tmpl_(std::move(tmpl)) {
  require(params_ != nullptr, "lap policy: null parameters");
  require(params_->all_finite(), "lap policy: parameters must be finite");
  gen_.validate();
}

Decision LapPolicy::act(const Observation& observation, Rng& rng, const StepContext&) const {
  return msgrpo::act(*params_, gen_, tmpl_, observation, rng);
}

ScriptedTextPolicy::ScriptedTextPolicy(Chooser chooser, PromptTemplate tmpl)
    : chooser_(std::move(chooser)), tmpl_(std::move(tmpl)) {}

Decision ScriptedTextPolicy::act(const Observation& observation, Rng& rng, const StepContext&) const {
  return text_decision(tmpl_, observation, canonical_completion(chooser_(observation, rng)));
}

ScriptedTextPolicy random_text_policy() {
  return ScriptedTextPolicy([](const Observation&, Rng& rng) { return kDirections[uniform_index(rng, 4)]; });
}

FixedTextPolicy::FixedTextPolicy(std::vector<std::string> completions, PromptTemplate tmpl)
    : completions_(std::move(completions)), tmpl_(std::move(tmpl)) {
  require(!completions_.empty(), "fixed text policy: needs at least one completion");
}

Decision FixedTextPolicy::act(const Observation& observation, Rng&, const StepContext& ctx) const {
  const std::size_t i = std::min(ctx.step_index, completions_.size() - 1);
  return text_decision(tmpl_, observation, completions_[i]);
}

std::size_t approximate_token_count(std::string_view text, const Vocabulary& vocab) {
  if (auto ids = vocab.try_encode(text)) return ids->size();
  return (text.size() + 3) / 4;
}

}  // namespace msgrpo
