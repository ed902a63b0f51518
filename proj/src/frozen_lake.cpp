#include "msgrpo/frozen_lake.hpp"

#include <deque>
#include <sstream>

namespace msgrpo {

namespace {

constexpr std::string_view kLakeRules =
    "Frozen Lake. You walk on a frozen lake from the start to the goal. Reaching the goal ends the game "
    "with reward 1. Falling into a hole ends the game with reward 0. Moving into the edge of the lake "
    "leaves you where you are.\n";
constexpr std::string_view kLakeFirm = "The ice is firm: you always move in the direction you choose.\n";
constexpr std::string_view kLakeSlippery =
    "The ice is slippery: you move in the direction you choose with probability 1/3 and slide to each of "
    "the two perpendicular directions with probability 1/3.\n";
constexpr std::string_view kCoordinates =
    "Positions are (row,col) with (0,0) at the top-left. Up decreases the row and right increases the "
    "column.\n";
constexpr std::string_view kLakeLegend = "Legend: A = agent, H = hole, G = goal, . = ice\n";

}  // namespace

LakeMap::LakeMap(int size) : size_(size), cells_(static_cast<std::size_t>(size * size), LakeCell::Ice) {
  require(size >= 2, "lake map: size must be at least 2");
}

GridPos LakeMap::start() const {
  for (int r = 0; r < size_; ++r)
    for (int c = 0; c < size_; ++c)
      if (at({r, c}) == LakeCell::Start) return {r, c};
  throw ContractViolation("lake map: no start cell");
}

GridPos LakeMap::goal() const {
  for (int r = 0; r < size_; ++r)
    for (int c = 0; c < size_; ++c)
      if (at({r, c}) == LakeCell::Goal) return {r, c};
  throw ContractViolation("lake map: no goal cell");
}

std::vector<GridPos> LakeMap::holes() const {
  std::vector<GridPos> out;
  for (int r = 0; r < size_; ++r)
    for (int c = 0; c < size_; ++c)
      if (at({r, c}) == LakeCell::Hole) out.push_back({r, c});
  return out;
}

std::string LakeMap::to_text() const {
  std::string out;
  for (int r = 0; r < size_; ++r) {
    for (int c = 0; c < size_; ++c) out += static_cast<char>(at({r, c}));
    out += '\n';
  }
  return out;
}

LakeMap LakeMap::from_text(std::string_view text) {
  std::vector<std::string> rows;
  std::istringstream in{std::string(text)};
  for (std::string line; std::getline(in, line);) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) rows.push_back(line);
  }
  const int n = static_cast<int>(rows.size());
  if (n < 2) throw std::invalid_argument("lake map: need at least two rows");
  LakeMap map(n);
  int starts = 0;
  int goals = 0;
  for (int r = 0; r < n; ++r) {
    if (static_cast<int>(rows[static_cast<std::size_t>(r)].size()) != n)
      throw std::invalid_argument("lake map: row " + std::to_string(r) + " has the wrong width");
    for (int c = 0; c < n; ++c) {
      const char ch = rows[static_cast<std::size_t>(r)][static_cast<std::size_t>(c)];
      switch (ch) {
        case 'S': map.set({r, c}, LakeCell::Start); ++starts; break;
        case 'F': map.set({r, c}, LakeCell::Ice); break;
        case 'H': map.set({r, c}, LakeCell::Hole); break;
        case 'G': map.set({r, c}, LakeCell::Goal); ++goals; break;
        default:
          throw std::invalid_argument(std::string("lake map: unknown cell '") + ch + "'");
      }
    }
  }
  if (starts != 1 || goals != 1) throw std::invalid_argument("lake map: need exactly one S and one G");
  return map;
}

bool has_safe_path(const LakeMap& map) {
  const GridPos start = map.start();
  const GridPos goal = map.goal();
  std::vector<char> seen(static_cast<std::size_t>(map.size() * map.size()), 0);
  std::deque<GridPos> queue{start};
  seen[static_cast<std::size_t>(start.row * map.size() + start.col)] = 1;
  while (!queue.empty()) {
    const GridPos p = queue.front();
    queue.pop_front();
    if (p == goal) return true;
    for (Direction d : kDirections) {
      const GridPos q = p.moved(d);
      if (!map.inside(q) || map.at(q) == LakeCell::Hole) continue;
      auto& s = seen[static_cast<std::size_t>(q.row * map.size() + q.col)];
      if (s) continue;
      s = 1;
      queue.push_back(q);
    }
  }
  return false;
}

LakeMap frozenlake_sample_raw(Rng& rng, int size, double hole_prob) {
  require(hole_prob >= 0.0 && hole_prob < 1.0, "frozen lake: hole_prob must be in [0, 1)");
  LakeMap map(size);
  for (int r = 0; r < size; ++r) {
    for (int c = 0; c < size; ++c) {
      // One draw per tile, including start and goal, keeps the stream layout fixed.
      const bool hole = uniform01(rng) < hole_prob;
      map.set({r, c}, hole ? LakeCell::Hole : LakeCell::Ice);
    }
  }
  map.set({0, 0}, LakeCell::Start);
  map.set({size - 1, size - 1}, LakeCell::Goal);
  return map;
}

LakeMap frozenlake_generate(std::uint64_t seed, int size, double hole_prob) {
  Rng rng(mix_seed(seed, 0x1a4e));
  while (true) {
    LakeMap map = frozenlake_sample_raw(rng, size, hole_prob);
    if (has_safe_path(map)) return map;
  }
}

std::vector<LakeMove> frozenlake_kernel(const LakeMap& map, GridPos from, Direction d, LakeVariant variant) {
  auto land = [&](Direction dir) {
    const GridPos to = from.moved(dir);
    return map.inside(to) ? to : from;
  };
  if (variant == LakeVariant::NotSlippery) return {{1.0, land(d)}};
  const auto side = perpendicular(d);
  constexpr double third = 1.0 / 3.0;
  return {{third, land(d)}, {third, land(side[0])}, {third, land(side[1])}};
}

LakeTransition frozenlake_step(const LakeState& state, Action action, Rng& rng) {
  require(!state.terminal, "frozen lake: step on a terminal state");
  LakeTransition t{state, 0.0, false, TerminalReason::none};
  if (!action) return t;
  const auto moves = frozenlake_kernel(state.map, state.agent, *action, state.variant);
  const std::size_t pick = moves.size() == 1 ? 0 : uniform_index(rng, moves.size());
  t.state.agent = moves[pick].to;
  switch (state.map.at(t.state.agent)) {
    case LakeCell::Goal:
      t.reward = 1.0;
      t.terminal = true;
      t.reason = TerminalReason::goal;
      break;
    case LakeCell::Hole:
      t.terminal = true;
      t.reason = TerminalReason::hole;
      break;
    default:
      break;
  }
  t.state.terminal = t.terminal;
  return t;
}

Observation render_observation(const LakeState& state) {
  const LakeMap& map = state.map;
  std::string out;
  out += kLakeRules;
  out += state.variant == LakeVariant::Slippery ? kLakeSlippery : kLakeFirm;
  out += kCoordinates;
  out += "\nEntities:\n";
  out += "agent: " + to_string(state.agent) + "\n";
  out += "goal: " + to_string(map.goal()) + "\n";
  out += "holes:";
  const auto holes = map.holes();
  if (holes.empty()) out += " none";
  for (std::size_t i = 0; i < holes.size(); ++i) out += (i ? ", " : " ") + to_string(holes[i]);
  out += "\n\nGrid:\n";
  for (int r = 0; r < map.size(); ++r) {
    for (int c = 0; c < map.size(); ++c) {
      const GridPos p{r, c};
      char ch = '.';
      if (p == state.agent) {
        ch = 'A';
      } else if (map.at(p) == LakeCell::Hole) {
        ch = 'H';
      } else if (map.at(p) == LakeCell::Goal) {
        ch = 'G';
      }
      out += ch;
    }
    out += '\n';
  }
  out += '\n';
  out += kLakeLegend;
  return {out};
}

FrozenLakeEnv::FrozenLakeEnv(LakeConfig config, std::uint64_t seed) : config_(std::move(config)) { reset(seed); }

std::string FrozenLakeEnv::variant_id() const {
  return config_.variant == LakeVariant::Slippery ? "frozenlake-slippery" : "frozenlake-not-slippery";
}

void FrozenLakeEnv::reset(std::uint64_t seed) {
  state_.map = config_.fixed_map ? *config_.fixed_map : frozenlake_generate(seed, config_.size, config_.hole_prob);
  state_.agent = state_.map.start();
  state_.variant = config_.variant;
  state_.terminal = false;
  steps_ = 0;
}

std::vector<std::vector<Direction>> FrozenLakeEnv::legal_actions() const {
  require(!state_.terminal, "frozen lake: legal_actions on a terminal state");
  return {std::vector<Direction>(kDirections.begin(), kDirections.end())};
}

StepOutcome FrozenLakeEnv::step(const JointAction& joint, Rng& rng) {
  require(!state_.terminal, "frozen lake: step on a terminal state");
  require(joint.size() == 1, "frozen lake: joint action must have one entry");
  LakeTransition t = frozenlake_step(state_, joint[0], rng);
  state_ = std::move(t.state);
  ++steps_;
  StepOutcome out;
  out.rewards = RewardVector::Constant(1, t.reward);
  out.terminal = t.terminal;
  out.reason = t.reason;
  return out;
}

Observation FrozenLakeEnv::observe(PlayerId player) const {
  require(player.index == 0, "frozen lake: single-player game");
  return render_observation(state_);
}

}  // namespace msgrpo
