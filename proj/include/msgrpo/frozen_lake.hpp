#pragma once

#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "msgrpo/common.hpp"
#include "msgrpo/tmsg.hpp"

namespace msgrpo {

enum class LakeCell : char { Ice = 'F', Hole = 'H', Start = 'S', Goal = 'G' };
enum class LakeVariant : std::uint8_t { NotSlippery, Slippery };

/// Square lake, row-major. Start sits at (0,0) and the goal at the opposite
/// corner for generated maps; loaded maps may place them anywhere.
class LakeMap {
 public:
  LakeMap() = default;
  explicit LakeMap(int size);

  int size() const { return size_; }
  LakeCell at(GridPos p) const { return cells_[index(p)]; }
  void set(GridPos p, LakeCell c) { cells_[index(p)] = c; }
  bool inside(GridPos p) const { return p.row >= 0 && p.col >= 0 && p.row < size_ && p.col < size_; }
  GridPos start() const;
  GridPos goal() const;
  std::vector<GridPos> holes() const;

  /// One row per line using S, F, H, G.
  std::string to_text() const;
  static LakeMap from_text(std::string_view text);

  friend bool operator==(const LakeMap&, const LakeMap&) = default;

 private:
  std::size_t index(GridPos p) const { return static_cast<std::size_t>(p.row * size_ + p.col); }
  int size_ = 0;
  std::vector<LakeCell> cells_;
};

struct LakeState {
  LakeMap map;
  GridPos agent;
  LakeVariant variant = LakeVariant::NotSlippery;
  bool terminal = false;
};

/// Breadth-first search over non-hole cells from start to goal.
bool has_safe_path(const LakeMap& map);

/// One unconditioned draw: every tile other than start and goal is a hole
/// with probability hole_prob.
LakeMap frozenlake_sample_raw(Rng& rng, int size, double hole_prob);

/// Draws raw maps from a seeded stream until one has a safe path.
LakeMap frozenlake_generate(std::uint64_t seed, int size = 4, double hole_prob = 0.2);

struct LakeMove {
  double probability;
  GridPos to;
};

/// Transition kernel for a move attempt. Not slippery: one outcome.
/// Slippery: intended, then the two perpendicular directions, 1/3 each.
/// Moves off the grid leave the position unchanged.
std::vector<LakeMove> frozenlake_kernel(const LakeMap& map, GridPos from, Direction d, LakeVariant variant);

struct LakeTransition {
  LakeState state;
  double reward = 0.0;
  bool terminal = false;
  TerminalReason reason = TerminalReason::none;
};

/// NO_ACTION keeps the agent in place. Goal: +1 and terminal; hole: 0 and
/// terminal.
LakeTransition frozenlake_step(const LakeState& state, Action action, Rng& rng);

/// Two-channel text: rules preamble, coordinate list, character grid, legend.
Observation render_observation(const LakeState& state);

struct LakeConfig {
  LakeVariant variant = LakeVariant::NotSlippery;
  int size = 4;
  double hole_prob = 0.2;
  std::optional<LakeMap> fixed_map;  // otherwise generated from the reset seed
};

class FrozenLakeEnv final : public Environment {
 public:
  explicit FrozenLakeEnv(LakeConfig config, std::uint64_t seed = 0);

  int num_players() const override { return 1; }
  std::string variant_id() const override;
  void reset(std::uint64_t seed) override;
  bool is_terminal() const override { return state_.terminal; }
  std::size_t step_index() const override { return steps_; }
  std::vector<std::vector<Direction>> legal_actions() const override;
  StepOutcome step(const JointAction& joint, Rng& rng) override;
  Observation observe(PlayerId player) const override;
  std::unique_ptr<Environment> clone() const override { return std::make_unique<FrozenLakeEnv>(*this); }

  const LakeState& state() const { return state_; }
  const LakeConfig& config() const { return config_; }
  /// Replaces the running state, e.g. to start from a hand-built position.
  void set_state(LakeState state) { state_ = std::move(state); }

 private:
  LakeConfig config_;
  LakeState state_;
  std::size_t steps_ = 0;
};

}  // namespace msgrpo
