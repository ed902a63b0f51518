#pragma once

// Text-mediated stochastic game: the environment contract, the policy
// contracts and the agent-environment loop that produces episode records.

#include <Eigen/Dense>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "msgrpo/common.hpp"
#include "msgrpo/lap.hpp"
#include "msgrpo/reward_shaping.hpp"
#include "msgrpo/vocabulary.hpp"

namespace msgrpo {

struct PlayerId {
  int index = 0;
};

struct Observation {
  std::string text;
};

/// One entry per player; NO_ACTION (nullopt) where a player does not act.
using JointAction = std::vector<Action>;

using RewardVector = Eigen::VectorXd;

enum class TerminalReason : std::uint8_t { none, goal, collision, hole, step_cap };

std::string_view to_string(TerminalReason r);
TerminalReason terminal_reason_from_string(std::string_view s);

struct StepOutcome {
  RewardVector rewards;
  bool terminal = false;
  TerminalReason reason = TerminalReason::none;
};

/// A running game. Player 0 is the learner. Public state only changes
/// through step(), which refuses terminal states.
class Environment {
 public:
  virtual ~Environment() = default;

  virtual int num_players() const = 0;
  virtual std::string variant_id() const = 0;

  /// Rebuilds the initial state for `seed` (map, apples, ...).
  virtual void reset(std::uint64_t seed) = 0;

  virtual bool is_terminal() const = 0;
  virtual std::size_t step_index() const = 0;

  /// Per-player action sets. The learner always gets the full direction set.
  /// Throws ContractViolation on a terminal state.
  virtual std::vector<std::vector<Direction>> legal_actions() const = 0;

  /// Applies a joint action of length num_players().
  /// Throws ContractViolation on a terminal state.
  virtual StepOutcome step(const JointAction& joint, Rng& rng) = 0;

  virtual Observation observe(PlayerId player) const = 0;

  virtual std::unique_ptr<Environment> clone() const = 0;
};

/// Where a policy is invoked from; lets remote policies tag requests.
struct StepContext {
  std::uint64_t episode_seed = 0;
  std::size_t step_index = 0;
};

/// Everything the learner produced for one observation.
struct Decision {
  std::string prompt;
  std::vector<TokenId> completion_tokens;
  std::string completion_text;
  std::size_t completion_length = 0;  // token count used by the length penalty
  ParsedAction parsed;
};

struct PolicyParams;

class LearnerPolicy {
 public:
  virtual ~LearnerPolicy() = default;
  virtual Decision act(const Observation& observation, Rng& rng, const StepContext& ctx) const = 0;

  /// Non-null only for policies whose token log-probabilities are available.
  virtual const PolicyParams* trainable_params() const { return nullptr; }
};

/// Non-language controllers for the other players (the scripted snake).
class ScriptedPlayer {
 public:
  virtual ~ScriptedPlayer() = default;
  virtual Action act(const Environment& env, PlayerId player, Rng& rng) const = 0;
};

struct StepRecord {
  std::string observation;
  std::string prompt;
  std::vector<TokenId> completion_tokens;
  std::string completion_text;
  std::size_t completion_length = 0;
  ParsedAction parsed_action;
  Action applied_action;
  double env_reward = 0.0;
  double invalid_penalty = 0.0;
  FormatPenalty format;

  double total() const { return env_reward + invalid_penalty + format.total(); }
};

struct EpisodeRecord {
  std::vector<StepRecord> steps;
  std::string final_observation;  // what the learner would see after the last step
  std::uint64_t seed = 0;
  TerminalReason terminal_reason = TerminalReason::none;
  double composite_reward = 0.0;
  double total_env_reward = 0.0;

  std::size_t generated_tokens() const;
  std::size_t invalid_steps() const;
};

/// Runs one episode from the environment's current (initial) state.
///
/// Each step: the learner and every scripted player choose simultaneously
/// (a bottom parse becomes NO_ACTION), the environment transitions, and the
/// step is logged with its rewards and penalties. Stops on a terminal state
/// or after `step_cap` steps. Randomness for the learner, the scripted
/// players and the dynamics comes from three streams derived from `seed`.
EpisodeRecord run_episode(Environment& env, const LearnerPolicy& learner,
                          std::span<const ScriptedPlayer* const> opponents, std::uint64_t seed,
                          std::size_t step_cap);

}  // namespace msgrpo
