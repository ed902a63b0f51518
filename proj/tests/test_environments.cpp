#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <map>
#include <set>

#include "msgrpo/environments.hpp"
#include "snake_reference.hpp"
#include "support.hpp"

using namespace msgrpo;

namespace {

LakeState lake_state(LakeVariant v, GridPos agent) {
  LakeState s;
  s.map = LakeMap(4);
  s.map.set({0, 0}, LakeCell::Start);
  s.map.set({3, 3}, LakeCell::Goal);
  s.agent = agent;
  s.variant = v;
  return s;
}

SnakeState open_board() {
  SnakeState s;
  s.board_size = 10;
  s.learner = {{4, 4}, {4, 3}, {4, 2}};
  s.opponent = {{7, 6}, {7, 7}, {7, 8}};
  s.apples = {{0, 9}, {1, 9}, {2, 9}, {3, 9}, {4, 5}};
  std::sort(s.apples.begin(), s.apples.end());
  return s;
}

// Random self-avoiding body of the given length avoiding `taken`.
std::deque<GridPos> random_body(int n, int len, const std::set<GridPos>& taken, Rng& rng) {
  for (int attempt = 0; attempt < 100; ++attempt) {
    std::deque<GridPos> body{{static_cast<int>(rng() % n), static_cast<int>(rng() % n)}};
    if (taken.count(body[0])) continue;
    while (static_cast<int>(body.size()) < len) {
      std::vector<GridPos> next;
      for (Direction d : kDirections) {
        const GridPos p = body.back().moved(d);
        if (p.row < 0 || p.col < 0 || p.row >= n || p.col >= n || taken.count(p)) continue;
        if (std::find(body.begin(), body.end(), p) != body.end()) continue;
        next.push_back(p);
      }
      if (next.empty()) break;
      body.push_back(next[rng() % next.size()]);
    }
    if (static_cast<int>(body.size()) == len) return body;
  }
  return {};
}

}  // namespace

TEST_CASE("lake generation: zero hole probability gives an all-ice map") {
  const LakeMap map = frozenlake_generate(7, 4, 0.0);
  CHECK(map.holes().empty());
  CHECK(map.at({0, 0}) == LakeCell::Start);
  CHECK(map.at({3, 3}) == LakeCell::Goal);
  CHECK(oracle::bfs_path(map));
}

TEST_CASE("lake generation: raw tile hole frequency matches hole_prob") {
  Rng rng(123);
  long holes = 0, tiles = 0;
  for (int i = 0; i < 10000; ++i) {
    const LakeMap m = frozenlake_sample_raw(rng, 4, 0.2);
    for (int r = 0; r < 4; ++r)
      for (int c = 0; c < 4; ++c) {
        if (m.at({r, c}) == LakeCell::Start || m.at({r, c}) == LakeCell::Goal) continue;
        ++tiles;
        holes += m.at({r, c}) == LakeCell::Hole;
      }
  }
  CHECK(std::abs(static_cast<double>(holes) / tiles - 0.2) < 0.02);
}

TEST_CASE("lake generation: every accepted map passes breadth-first search") {
  for (std::uint64_t seed = 0; seed < 2000; ++seed) {
    const LakeMap m = frozenlake_generate(seed, 4, 0.35);
    REQUIRE(oracle::bfs_path(m));
  }
  CHECK(frozenlake_generate(5) == frozenlake_generate(5));
}

TEST_CASE("lake step: firm ice moves exactly, walls block") {
  Rng rng(0);
  auto t = frozenlake_step(lake_state(LakeVariant::NotSlippery, {1, 1}), Direction::Up, rng);
  CHECK(t.state.agent == GridPos{0, 1});
  CHECK(t.reward == 0.0);
  CHECK_FALSE(t.terminal);
  t = frozenlake_step(lake_state(LakeVariant::NotSlippery, {0, 1}), Direction::Up, rng);
  CHECK(t.state.agent == GridPos{0, 1});
  t = frozenlake_step(lake_state(LakeVariant::NotSlippery, {0, 1}), kNoAction, rng);
  CHECK(t.state.agent == GridPos{0, 1});
  t = frozenlake_step(lake_state(LakeVariant::NotSlippery, {3, 2}), Direction::Right, rng);
  CHECK(t.reward == 1.0);
  CHECK(t.terminal);
  CHECK(t.reason == TerminalReason::goal);
}

TEST_CASE("lake step: slippery ice splits evenly between intended and perpendicular moves") {
  Rng rng(99);
  std::map<GridPos, int> counts;
  const int n = 100000;
  const LakeState s = lake_state(LakeVariant::Slippery, {1, 1});
  for (int i = 0; i < n; ++i) ++counts[frozenlake_step(s, Direction::Up, rng).state.agent];
  REQUIRE(counts.size() == 3);
  for (GridPos p : {GridPos{0, 1}, GridPos{1, 0}, GridPos{1, 2}})
    CHECK(std::abs(counts[p] / static_cast<double>(n) - 1.0 / 3.0) < 0.01);

  for (Direction d : kDirections) {
    const auto k = frozenlake_kernel(s.map, {1, 1}, d, LakeVariant::Slippery);
    double total = 0;
    for (const auto& m : k) total += m.probability;
    CHECK(total == 1.0);
  }
}

TEST_CASE("lake step: holes end the game without reward") {
  LakeState s = lake_state(LakeVariant::NotSlippery, {1, 0});
  s.map.set({1, 1}, LakeCell::Hole);
  Rng rng(0);
  const auto t = frozenlake_step(s, Direction::Right, rng);
  CHECK(t.terminal);
  CHECK(t.reward == 0.0);
  CHECK(t.reason == TerminalReason::hole);
}

TEST_CASE("snake step: eating, wall collision and poison") {
  const SnakeConfig standard;
  SnakeConfig poison;
  poison.variant = SnakeVariant::Poison;
  Rng rng(1);
  SnakeState s = open_board();
  auto t = snake_step(s, standard, Direction::Right, Direction::Up, rng);
  CHECK(t.rewards[0] == 1.0);
  CHECK(t.state.learner.size() == 4);
  CHECK(t.state.apples.size() == 5);
  CHECK_FALSE(t.terminal);

  s.variant = SnakeVariant::Poison;
  t = snake_step(s, poison, Direction::Right, Direction::Up, rng);
  CHECK(t.rewards[0] == -1.0);
  CHECK(t.state.learner.size() == 4);

  s = open_board();
  s.learner = {{0, 3}, {1, 3}, {2, 3}};
  t = snake_step(s, standard, Direction::Up, Direction::Up, rng);
  CHECK(t.rewards[0] == -3.0);
  CHECK(t.terminal);
  CHECK(t.reason == TerminalReason::collision);
  CHECK(t.state.learner == s.learner);  // frozen
}

TEST_CASE("snake step: moving into the cell the own tail vacates is safe") {
  SnakeState s = open_board();
  s.learner = {{4, 4}, {4, 5}, {5, 5}, {5, 4}};
  Rng rng(0);
  const auto t = snake_step(s, SnakeConfig{}, Direction::Down, Direction::Up, rng);
  CHECK_FALSE(t.terminal);
  CHECK(t.state.learner.front() == GridPos{5, 4});
}

TEST_CASE("snake step: agrees with a straightforward re-implementation on a 4x4 board") {
  Rng gen(2024);
  int compared = 0;
  for (int k = 0; k < 1000; ++k) {
    SnakeState s;
    s.board_size = 4;
    s.learner = random_body(4, 1 + static_cast<int>(gen() % 4), {}, gen);
    std::set<GridPos> taken(s.learner.begin(), s.learner.end());
    if (gen() % 5 != 0) s.opponent = random_body(4, 1 + static_cast<int>(gen() % 3), taken, gen);
    taken.insert(s.opponent.begin(), s.opponent.end());
    const int want_apples = static_cast<int>(gen() % 4);
    for (int a = 0; a < 50 && static_cast<int>(s.apples.size()) < want_apples; ++a) {
      const GridPos p{static_cast<int>(gen() % 4), static_cast<int>(gen() % 4)};
      if (!taken.count(p)) s.apples.push_back(p), taken.insert(p);
    }
    std::sort(s.apples.begin(), s.apples.end());
    if (s.learner.empty()) continue;
    const bool poison = gen() % 2;
    s.variant = poison ? SnakeVariant::Poison : SnakeVariant::Standard;
    SnakeConfig cfg;
    cfg.variant = s.variant;
    cfg.board_size = 4;

    std::vector<Action> actions{kNoAction};
    for (Direction d : kDirections) actions.push_back(d);
    for (Action la : actions)
      for (Action oa : actions) {
        const std::uint64_t seed = gen();
        Rng r1(seed), r2(seed);
        const auto got = snake_step(s, cfg, la, oa, r1);
        const auto want = oracle::reference_step(s, la, oa, poison, r2);
        REQUIRE(got.state.learner == want.learner);
        REQUIRE(got.state.opponent == want.opponent);
        REQUIRE(got.state.apples == want.apples);
        REQUIRE(got.rewards[0] == want.r_learner);
        REQUIRE(got.rewards[1] == want.r_opponent);
        REQUIRE(got.terminal == want.terminal);
        ++compared;
      }
  }
  CHECK(compared > 20000);
}

TEST_CASE("snake: apple count and body growth under random play") {
  const auto policy_rng_seed = 77u;
  Rng policy_rng(policy_rng_seed);
  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    SnakeEnv env(SnakeConfig{}, seed);
    SnakeOpponent opponent;
    Rng dyn(seed), opp(seed + 1);
    for (std::size_t t = 0; t < kSnakeStepCap && !env.is_terminal(); ++t) {
      const Direction d = kDirections[policy_rng() % 4];
      const Action o = opponent.act(env, PlayerId{1}, opp);
      env.step({d, o}, dyn);
      if (!env.is_terminal()) REQUIRE(env.state().apples.size() == 5);
      REQUIRE(env.state().learner.size() == 3 + static_cast<std::size_t>(env.learner_apples_eaten()));
    }
  }
}

TEST_CASE("snake opponent: uniform in the open, filtered at walls, Up when trapped") {
  SnakeState s = open_board();
  s.opponent = {{7, 6}};
  Rng rng(5);
  std::map<Direction, int> counts;
  for (int i = 0; i < 10000; ++i) ++counts[opponent_policy(s, rng)];
  for (Direction d : kDirections) CHECK(std::abs(counts[d] / 10000.0 - 0.25) < 0.02);

  s.opponent = {{9, 9}, {9, 8}, {9, 7}};  // corner, body to the left
  std::set<Direction> seen;
  for (int i = 0; i < 1000; ++i) seen.insert(opponent_policy(s, rng));
  CHECK(seen == std::set<Direction>{Direction::Up});

  s.opponent = {{9, 9}, {8, 9}, {8, 8}, {9, 8}, {9, 7}};  // walled in by its own body
  CHECK(opponent_safe_moves(s).empty());
  CHECK(opponent_policy(s, rng) == Direction::Up);

  s.opponent = {{0, 9}, {1, 9}, {2, 9}};  // top-right corner, body below
  seen.clear();
  for (int i = 0; i < 1000; ++i) seen.insert(opponent_policy(s, rng));
  CHECK(seen == std::set<Direction>{Direction::Left});
  s.opponent = {{0, 5}, {1, 5}, {2, 5}};  // top edge, body below: Left and Right
  seen.clear();
  for (int i = 0; i < 1000; ++i) seen.insert(opponent_policy(s, rng));
  CHECK(seen == std::set<Direction>{Direction::Left, Direction::Right});
}

TEST_CASE("render: lake observation matches the frozen snapshot") {
  const LakeMap map = LakeMap::from_text("SFFF\nFHFH\nFFFH\nHFFG");
  LakeState s{map, map.start(), LakeVariant::NotSlippery, false};
  const std::string text = render_observation(s).text;
  CHECK(text == oracle::read_file(MSGRPO_TEST_DATA "/lake_observation.txt"));
  CHECK(text.find("agent: (0,0)") != std::string::npos);
  CHECK(text.find("Legend: A = agent, H = hole, G = goal, . = ice") != std::string::npos);
  CHECK(render_observation(s).text == text);
}

TEST_CASE("render: snake variants differ only in the apple sentence") {
  Rng rng(3);
  SnakeState s = snake_initial_state(SnakeConfig{}, rng);
  const std::string standard = render_observation(s).text;
  s.variant = SnakeVariant::Poison;
  const std::string poison = render_observation(s).text;
  auto lines = [](const std::string& t) {
    std::vector<std::string> out;
    std::istringstream in(t);
    for (std::string l; std::getline(in, l);) out.push_back(l);
    return out;
  };
  const auto a = lines(standard), b = lines(poison);
  REQUIRE(a.size() == b.size());
  int differing = 0;
  for (std::size_t i = 0; i < a.size(); ++i) differing += a[i] != b[i];
  CHECK(differing == 1);
  CHECK(render_observation(s).text == poison);
}

TEST_CASE("environment factory validates its configuration") {
  EnvConfig cfg;
  cfg.variant = "tic-tac-toe";
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  cfg.variant = std::string(kLakeSlippery);
  cfg.hole_prob = 1.0;
  CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
  for (const auto& v : all_variants()) {
    EnvConfig c;
    c.variant = v;
    auto env = make_environment(c, 1);
    CHECK(env->variant_id() == v);
    CHECK(static_cast<std::size_t>(env->num_players()) == make_opponents(c).size() + 1);
  }
}
