#pragma once

#include <deque>
#include <utility>
#include <vector>

#include "msgrpo/common.hpp"
#include "msgrpo/tmsg.hpp"

namespace msgrpo {

enum class SnakeVariant : std::uint8_t { Standard, Poison };

struct SnakeConfig {
  SnakeVariant variant = SnakeVariant::Standard;
  int board_size = 10;
  int num_apples = 5;
  int initial_length = 3;
  double collision_reward = -3.0;

  double apple_reward() const { return variant == SnakeVariant::Poison ? -1.0 : 1.0; }
};

/// Bodies are stored head first. A dead opponent has an empty body.
struct SnakeState {
  std::deque<GridPos> learner;
  std::deque<GridPos> opponent;
  std::vector<GridPos> apples;  // kept sorted row-major
  int board_size = 10;
  SnakeVariant variant = SnakeVariant::Standard;
  bool terminal = false;

  bool opponent_alive() const { return !opponent.empty(); }
  bool inside(GridPos p) const { return p.row >= 0 && p.col >= 0 && p.row < board_size && p.col < board_size; }
  bool occupied(GridPos p) const;

  friend bool operator==(const SnakeState&, const SnakeState&) = default;
};

/// Direction from the neck to the head; Right for a single-cell snake.
Direction heading(const std::deque<GridPos>& body);

/// Learner on row 2 facing right, opponent on row size-3 facing left, heads
/// towards each other; apples on uniformly random empty cells.
SnakeState snake_initial_state(const SnakeConfig& config, Rng& rng);

struct SnakeTransition {
  SnakeState state;
  RewardVector rewards;  // (learner, opponent)
  bool terminal = false;
  TerminalReason reason = TerminalReason::none;
  int learner_apples = 0;
};

/// Both snakes move one cell at once; NO_ACTION keeps the current heading.
///
/// A snake dies when its new head leaves the board, enters a body cell that
/// is still occupied after both tails have moved (a tail stays when its
/// snake eats), meets the other new head, or swaps cells with the other
/// head. Learner death: -3, terminal, positions frozen. Opponent death: the
/// opponent is removed and play continues. Eating grows the snake by one;
/// each eaten apple is replaced on a uniformly drawn empty cell (row-major
/// enumeration, learner's apple first).
SnakeTransition snake_step(const SnakeState& state, const SnakeConfig& config, Action learner, Action opponent,
                           Rng& rng);

/// Moves that keep the opponent inside the board and off its own body.
std::vector<Direction> opponent_safe_moves(const SnakeState& state);

/// Uniform over opponent_safe_moves; Up when none exist.
Direction opponent_policy(const SnakeState& state, Rng& rng);

Observation render_observation(const SnakeState& state);

class SnakeEnv final : public Environment {
 public:
  explicit SnakeEnv(SnakeConfig config, std::uint64_t seed = 0);

  int num_players() const override { return 2; }
  std::string variant_id() const override;
  void reset(std::uint64_t seed) override;
  bool is_terminal() const override { return state_.terminal; }
  std::size_t step_index() const override { return steps_; }
  std::vector<std::vector<Direction>> legal_actions() const override;
  StepOutcome step(const JointAction& joint, Rng& rng) override;
  Observation observe(PlayerId player) const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<SnakeEnv>(*this); }

  const SnakeState& state() const { return state_; }
  const SnakeConfig& config() const { return config_; }
  /// Replaces the running state, e.g. to start from a hand-built position.
  void set_state(SnakeState state) { state_ = std::move(state); }
  int learner_apples_eaten() const { return apples_eaten_; }

 private:
  SnakeConfig config_;
  SnakeState state_;
  std::size_t steps_ = 0;
  int apples_eaten_ = 0;
};

/// The scripted opponent as a player of SnakeEnv.
class SnakeOpponent final : public ScriptedPlayer {
 public:
  Action act(const Environment& env, PlayerId player, Rng& rng) const override;
};

}  // namespace msgrpo
