#include "msgrpo/snake.hpp"

#include <algorithm>

namespace msgrpo {

namespace {

constexpr std::string_view kSnakeStandardApples =
    "Eating an apple gives reward 1 and makes your snake one cell longer.\n";
constexpr std::string_view kSnakePoisonApples =
    "The apples are poisoned: eating an apple gives reward -1 and makes your snake one cell longer.\n";
constexpr std::string_view kSnakeCollision =
    "Hitting a wall, your own body or the other snake ends the game with reward -3.\n";
constexpr std::string_view kCoordinates =
    "Positions are (row,col) with (0,0) at the top-left. Up decreases the row and right increases the "
    "column.\n";
constexpr std::string_view kSnakeLegend =
    "Legend: Y = your head, y = your body, E = other head, e = other body, * = apple, . = empty\n";

bool contains(const std::deque<GridPos>& body, GridPos p) { return std::find(body.begin(), body.end(), p) != body.end(); }

// Whether p is occupied by `body` after it advances; the tail cell is freed
// unless the snake eats this step. The new head is not part of the check.
bool hits_body_after_move(const std::deque<GridPos>& body, bool eats, GridPos p) {
  const std::size_t kept = body.size() - (eats ? 0 : 1);
  for (std::size_t i = 0; i < kept; ++i)
    if (body[i] == p) return true;
  return false;
}

bool is_apple(const std::vector<GridPos>& apples, GridPos p) { return std::binary_search(apples.begin(), apples.end(), p); }

void place_apple(SnakeState& s, Rng& rng) {
  std::vector<GridPos> empty;
  for (int r = 0; r < s.board_size; ++r)
    for (int c = 0; c < s.board_size; ++c)
      if (!s.occupied({r, c})) empty.push_back({r, c});
  if (empty.empty()) return;
  const GridPos p = empty[uniform_index(rng, empty.size())];
  s.apples.insert(std::lower_bound(s.apples.begin(), s.apples.end(), p), p);
}

std::string body_text(const std::deque<GridPos>& body) {
  if (body.empty()) return "none";
  std::string out = "head " + to_string(body.front());
  if (body.size() > 1) {
    out += ", body";
    for (std::size_t i = 1; i < body.size(); ++i) out += (i > 1 ? ", " : " ") + to_string(body[i]);
  }
  return out;
}

}  // namespace

bool SnakeState::occupied(GridPos p) const { return contains(learner, p) || contains(opponent, p) || is_apple(apples, p); }

Direction heading(const std::deque<GridPos>& body) {
  if (body.size() < 2) return Direction::Right;
  const GridPos head = body[0];
  const GridPos neck = body[1];
  for (Direction d : kDirections)
    if (neck.moved(d) == head) return d;
  return Direction::Right;
}

SnakeState snake_initial_state(const SnakeConfig& config, Rng& rng) {
  const int n = config.board_size;
  const int len = config.initial_length;
  require(len >= 1 && n >= 4 && len + 1 < n, "snake: board too small for the initial snakes");
  require(config.num_apples >= 0, "snake: apple count must be non-negative");
  SnakeState s;
  s.board_size = n;
  s.variant = config.variant;
  const int learner_row = 2;
  const int opponent_row = n - 3;
  for (int i = 0; i < len; ++i) s.learner.push_back({learner_row, len - i});
  for (int i = 0; i < len; ++i) s.opponent.push_back({opponent_row, n - 1 - len + i});
  for (int i = 0; i < config.num_apples; ++i) place_apple(s, rng);
  return s;
}

SnakeTransition snake_step(const SnakeState& state, const SnakeConfig& config, Action learner, Action opponent,
                           Rng& rng) {
  require(!state.terminal, "snake: step on a terminal state");
  SnakeTransition t{state, RewardVector::Zero(2), false, TerminalReason::none, 0};

  const GridPos lh = state.learner.front().moved(learner.value_or(heading(state.learner)));
  const bool alive = state.opponent_alive();
  const GridPos oh = alive ? state.opponent.front().moved(opponent.value_or(heading(state.opponent))) : GridPos{-1, -1};

  const bool l_eats = state.inside(lh) && is_apple(state.apples, lh);
  const bool o_eats = alive && state.inside(oh) && is_apple(state.apples, oh);
  const bool head_on = alive && lh == oh;
  const bool swap = alive && lh == state.opponent.front() && oh == state.learner.front();

  const bool learner_dies = !state.inside(lh) || hits_body_after_move(state.learner, l_eats, lh) ||
                            (alive && hits_body_after_move(state.opponent, o_eats, lh)) || head_on || swap;
  const bool opponent_dies = alive && (!state.inside(oh) || hits_body_after_move(state.opponent, o_eats, oh) ||
                                       hits_body_after_move(state.learner, l_eats, oh) || head_on || swap);

  if (learner_dies) {
    t.state.terminal = true;
    t.terminal = true;
    t.reason = TerminalReason::collision;
    t.rewards[0] = config.collision_reward;
    if (opponent_dies) t.rewards[1] = config.collision_reward;
    return t;
  }

  SnakeState& s = t.state;
  s.learner.push_front(lh);
  if (!l_eats) s.learner.pop_back();
  if (opponent_dies) {
    s.opponent.clear();
    t.rewards[1] = config.collision_reward;
  } else if (alive) {
    s.opponent.push_front(oh);
    if (!o_eats) s.opponent.pop_back();
  }

  auto eat = [&](GridPos p) { s.apples.erase(std::lower_bound(s.apples.begin(), s.apples.end(), p)); };
  int eaten = 0;
  if (l_eats) {
    eat(lh);
    t.rewards[0] = config.apple_reward();
    t.learner_apples = 1;
    ++eaten;
  }
  if (o_eats && !opponent_dies) {
    eat(oh);
    t.rewards[1] = config.apple_reward();
    ++eaten;
  }
  for (int i = 0; i < eaten; ++i) place_apple(s, rng);
  return t;
}

std::vector<Direction> opponent_safe_moves(const SnakeState& state) {
  std::vector<Direction> out;
  if (!state.opponent_alive()) return out;
  for (Direction d : kDirections) {
    const GridPos p = state.opponent.front().moved(d);
    if (state.inside(p) && !contains(state.opponent, p)) out.push_back(d);
  }
  return out;
}

Direction opponent_policy(const SnakeState& state, Rng& rng) {
  require(!state.terminal, "snake: opponent policy on a terminal state");
  const auto moves = opponent_safe_moves(state);
  if (moves.empty()) return Direction::Up;
  return moves[uniform_index(rng, moves.size())];
}

Observation render_observation(const SnakeState& state) {
  const int n = state.board_size;
  std::string out = "Snake. You control a snake on a " + std::to_string(n) + "x" + std::to_string(n) +
                    " board shared with another snake and " + std::to_string(state.apples.size()) +
                    " apples. Every step both snakes move one cell.\n";
  out += state.variant == SnakeVariant::Poison ? kSnakePoisonApples : kSnakeStandardApples;
  out += kSnakeCollision;
  out += kCoordinates;
  out += "\nEntities:\n";
  out += "your snake: " + body_text(state.learner) + "\n";
  out += "other snake: " + body_text(state.opponent) + "\n";
  out += "apples:";
  if (state.apples.empty()) out += " none";
  for (std::size_t i = 0; i < state.apples.size(); ++i) out += (i ? ", " : " ") + to_string(state.apples[i]);
  out += "\n\nGrid:\n";
  std::vector<std::string> grid(static_cast<std::size_t>(n), std::string(static_cast<std::size_t>(n), '.'));
  auto put = [&](GridPos p, char ch) {
    if (state.inside(p)) grid[static_cast<std::size_t>(p.row)][static_cast<std::size_t>(p.col)] = ch;
  };
  for (GridPos a : state.apples) put(a, '*');
  for (std::size_t i = state.opponent.size(); i-- > 0;) put(state.opponent[i], i == 0 ? 'E' : 'e');
  for (std::size_t i = state.learner.size(); i-- > 0;) put(state.learner[i], i == 0 ? 'Y' : 'y');
  for (const auto& row : grid) out += row + "\n";
  out += '\n';
  out += kSnakeLegend;
  return {out};
}

SnakeEnv::SnakeEnv(SnakeConfig config, std::uint64_t seed) : config_(config) { reset(seed); }

std::string SnakeEnv::variant_id() const {
  return config_.variant == SnakeVariant::Poison ? "snake-poison" : "snake-standard";
}

void SnakeEnv::reset(std::uint64_t seed) {
  Rng rng(mix_seed(seed, 0x5a4e));
  state_ = snake_initial_state(config_, rng);
  steps_ = 0;
  apples_eaten_ = 0;
}

std::vector<std::vector<Direction>> SnakeEnv::legal_actions() const {
  require(!state_.terminal, "snake: legal_actions on a terminal state");
  std::vector<Direction> all(kDirections.begin(), kDirections.end());
  std::vector<Direction> opp = state_.opponent_alive() ? opponent_safe_moves(state_) : all;
  if (opp.empty()) opp = {Direction::Up};
  return {all, opp};
}

StepOutcome SnakeEnv::step(const JointAction& joint, Rng& rng) {
  require(!state_.terminal, "snake: step on a terminal state");
  require(joint.size() == 2, "snake: joint action must have two entries");
  SnakeTransition t = snake_step(state_, config_, joint[0], joint[1], rng);
  state_ = std::move(t.state);
  apples_eaten_ += t.learner_apples;
  ++steps_;
  return {std::move(t.rewards), t.terminal, t.reason};
}

Observation SnakeEnv::observe(PlayerId player) const {
  require(player.index == 0 || player.index == 1, "snake: unknown player");
  if (player.index == 0) return render_observation(state_);
  SnakeState mirrored = state_;
  std::swap(mirrored.learner, mirrored.opponent);
  return render_observation(mirrored);
}

Action SnakeOpponent::act(const Environment& env, PlayerId player, Rng& rng) const {
  const auto* snake = dynamic_cast<const SnakeEnv*>(&env);
  require(snake != nullptr && player.index == 1, "snake opponent: needs player 1 of a snake game");
  if (!snake->state().opponent_alive()) return kNoAction;
  return opponent_policy(snake->state(), rng);
}

}  // namespace msgrpo
