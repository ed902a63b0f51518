#pragma once

#include <algorithm>
#include <deque>
#include <random>
#include <set>
#include <vector>

#include "msgrpo/snake.hpp"

namespace oracle {

using msgrpo::Action;
using msgrpo::Direction;
using msgrpo::GridPos;
using msgrpo::Rng;
using msgrpo::SnakeState;

// Straightforward snake rules, written from the game description rather
// than from the library: simultaneous moves, tails vacate unless eating,
// head-on and swaps kill both, dead learner freezes the board.
struct RefOutcome {
  std::deque<GridPos> learner, opponent;
  std::vector<GridPos> apples;
  double r_learner = 0, r_opponent = 0;
  bool terminal = false;
};

inline RefOutcome reference_step(const SnakeState& s, Action la, Action oa, bool poison, Rng& rng) {
  auto dir_of = [](const std::deque<GridPos>& b, Action a) {
    if (a) return *a;
    if (b.size() < 2) return Direction::Right;
    const int dr = b[0].row - b[1].row, dc = b[0].col - b[1].col;
    if (dr == -1) return Direction::Up;
    if (dr == 1) return Direction::Down;
    return dc == -1 ? Direction::Left : Direction::Right;
  };
  auto step_pos = [](GridPos p, Direction d) {
    const int dr[4] = {-1, 1, 0, 0}, dc[4] = {0, 0, -1, 1};
    return GridPos{p.row + dr[static_cast<int>(d)], p.col + dc[static_cast<int>(d)]};
  };
  const int n = s.board_size;
  auto on_board = [&](GridPos p) { return p.row >= 0 && p.col >= 0 && p.row < n && p.col < n; };
  auto apple_at = [&](GridPos p) { return std::find(s.apples.begin(), s.apples.end(), p) != s.apples.end(); };

  const bool opp = !s.opponent.empty();
  const GridPos lh = step_pos(s.learner[0], dir_of(s.learner, la));
  const GridPos oh = opp ? step_pos(s.opponent[0], dir_of(s.opponent, oa)) : GridPos{-100, -100};
  const bool le = on_board(lh) && apple_at(lh);
  const bool oe = opp && on_board(oh) && apple_at(oh);

  // Cells that stay occupied by each body once both tails have moved.
  std::set<GridPos> stay;
  for (std::size_t i = 0; i + (le ? 0 : 1) < s.learner.size(); ++i) stay.insert(s.learner[i]);
  if (opp)
    for (std::size_t i = 0; i + (oe ? 0 : 1) < s.opponent.size(); ++i) stay.insert(s.opponent[i]);

  bool l_dead = !on_board(lh) || stay.count(lh);
  bool o_dead = opp && (!on_board(oh) || stay.count(oh));
  if (opp && (lh == oh || (lh == s.opponent[0] && oh == s.learner[0]))) l_dead = o_dead = true;

  const double apple = poison ? -1.0 : 1.0;
  RefOutcome out{s.learner, s.opponent, s.apples};
  if (l_dead) {
    out.terminal = true;
    out.r_learner = -3;
    if (o_dead) out.r_opponent = -3;
    return out;
  }
  out.learner.push_front(lh);
  if (!le) out.learner.pop_back();
  if (o_dead) {
    out.opponent.clear();
    out.r_opponent = -3;
  } else if (opp) {
    out.opponent.push_front(oh);
    if (!oe) out.opponent.pop_back();
  }
  std::vector<GridPos> eaten;
  if (le) eaten.push_back(lh), out.r_learner = apple;
  if (oe && !o_dead) eaten.push_back(oh), out.r_opponent = apple;
  for (GridPos e : eaten) out.apples.erase(std::find(out.apples.begin(), out.apples.end(), e));
  for (std::size_t k = 0; k < eaten.size(); ++k) {
    std::vector<GridPos> empty;
    for (int r = 0; r < n; ++r)
      for (int c = 0; c < n; ++c) {
        const GridPos p{r, c};
        const bool used = std::count(out.learner.begin(), out.learner.end(), p) ||
                          std::count(out.opponent.begin(), out.opponent.end(), p) ||
                          std::count(out.apples.begin(), out.apples.end(), p);
        if (!used) empty.push_back(p);
      }
    if (empty.empty()) break;
    out.apples.push_back(empty[std::uniform_int_distribution<std::size_t>(0, empty.size() - 1)(rng)]);
    std::sort(out.apples.begin(), out.apples.end());
  }
  return out;
}

}  // namespace oracle
