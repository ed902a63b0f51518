#include "msgrpo/tmsg.hpp"

#include <array>

namespace msgrpo {

namespace {

constexpr std::array<std::string_view, 5> kReasonNames{"none", "goal", "collision", "hole", "step_cap"};

enum Stream : std::uint64_t { kLearnerStream = 1, kOpponentStream = 2, kDynamicsStream = 3 };

}  // namespace

std::string_view to_string(TerminalReason r) { return kReasonNames[static_cast<std::size_t>(r)]; }

TerminalReason terminal_reason_from_string(std::string_view s) {
  for (std::size_t i = 0; i < kReasonNames.size(); ++i) {
    if (kReasonNames[i] == s) return static_cast<TerminalReason>(i);
  }
  throw std::invalid_argument("unknown terminal reason '" + std::string(s) + "'");
}

std::size_t EpisodeRecord::generated_tokens() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.completion_tokens.size();
  return n;
}

std::size_t EpisodeRecord::invalid_steps() const {
  std::size_t n = 0;
  for (const auto& s : steps) n += s.parsed_action.valid() ? 0 : 1;
  return n;
}

EpisodeRecord run_episode(Environment& env, const LearnerPolicy& learner,
                          std::span<const ScriptedPlayer* const> opponents, std::uint64_t seed,
                          std::size_t step_cap) {
  require(step_cap >= 1, "run_episode: step_cap must be positive");
  require(!env.is_terminal(), "run_episode: environment starts in a terminal state");
  require(opponents.size() + 1 == static_cast<std::size_t>(env.num_players()),
          "run_episode: one scripted player required per non-learner player");

  Rng learner_rng(mix_seed(seed, kLearnerStream));
  Rng opponent_rng(mix_seed(seed, kOpponentStream));
  Rng dynamics_rng(mix_seed(seed, kDynamicsStream));

  EpisodeRecord episode;
  episode.seed = seed;
  const std::size_t first_step = env.step_index();
  JointAction joint(static_cast<std::size_t>(env.num_players()));

  while (true) {
    if (env.step_index() - first_step >= step_cap) {
      episode.terminal_reason = TerminalReason::step_cap;
      break;
    }
    StepRecord rec;
    Observation obs = env.observe(PlayerId{0});
    Decision d = learner.act(obs, learner_rng, StepContext{seed, episode.steps.size()});

    joint[0] = d.parsed.value;
    for (std::size_t i = 0; i < opponents.size(); ++i) {
      joint[i + 1] = opponents[i]->act(env, PlayerId{static_cast<int>(i + 1)}, opponent_rng);
    }
    StepOutcome out = env.step(joint, dynamics_rng);

    rec.observation = std::move(obs.text);
    rec.prompt = std::move(d.prompt);
    rec.completion_tokens = std::move(d.completion_tokens);
    rec.completion_text = std::move(d.completion_text);
    rec.completion_length = d.completion_length;
    rec.parsed_action = std::move(d.parsed);
    rec.applied_action = joint[0];
    rec.env_reward = out.rewards[0];
    rec.invalid_penalty = rec.parsed_action.valid() ? 0.0 : kInvalidActionPenalty;
    rec.format = format_penalty(rec.completion_text, rec.completion_length);
    episode.total_env_reward += rec.env_reward;
    episode.steps.push_back(std::move(rec));

    if (out.terminal) {
      episode.terminal_reason = out.reason;
      break;
    }
  }
  episode.final_observation = env.observe(PlayerId{0}).text;
  episode.composite_reward = composite_reward(episode);
  return episode;
}

}  // namespace msgrpo
