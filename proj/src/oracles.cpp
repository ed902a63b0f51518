#include "msgrpo/oracles.hpp"

#include <cmath>
#include <cstdio>
#include <regex>
#include <sstream>

#include "msgrpo/parallel.hpp"

namespace msgrpo {

namespace {

constexpr double kTieBreakDiscount = 0.999;
constexpr double kOptimalSlack = 1e-9;
constexpr std::size_t kMaxSweeps = 1'000'000;

bool is_terminal_cell(LakeCell c) { return c == LakeCell::Hole || c == LakeCell::Goal; }

double expected_value(const LakeMap& map, GridPos s, Direction d, LakeVariant variant, const Eigen::MatrixXd& v) {
  double q = 0.0;
  for (const LakeMove& m : frozenlake_kernel(map, s, d, variant)) q += m.probability * v(m.to.row, m.to.col);
  return q;
}

// Jacobi sweeps of V <- discount * max_a E[V]; returns per-sweep residuals.
std::vector<double> solve(const LakeMap& map, LakeVariant variant, double discount, double tol, Eigen::MatrixXd& v) {
  const int n = map.size();
  v = Eigen::MatrixXd::Zero(n, n);
  const GridPos goal = map.goal();
  v(goal.row, goal.col) = 1.0;
  std::vector<double> residuals;
  Eigen::MatrixXd next = v;
  for (std::size_t sweep = 0; sweep < kMaxSweeps; ++sweep) {
    for (int r = 0; r < n; ++r) {
      for (int c = 0; c < n; ++c) {
        if (is_terminal_cell(map.at({r, c}))) continue;
        double best = 0.0;
        for (Direction d : kDirections) best = std::max(best, discount * expected_value(map, {r, c}, d, variant, v));
        next(r, c) = best;
      }
    }
    const double residual = (next - v).cwiseAbs().maxCoeff();
    v = next;
    residuals.push_back(residual);
    if (residual < tol) break;
  }
  return residuals;
}

std::string fixed(double x, int digits, bool sign = false) {
  char buf[64];
  std::snprintf(buf, sizeof buf, sign ? "%+.*f" : "%.*f", digits, x);
  return buf;
}

std::string pad(std::string s, std::size_t width) {
  // Width in characters; the delta sign is multi-byte.
  std::size_t visible = 0;
  for (unsigned char ch : s) visible += (ch & 0xC0) != 0x80 ? 1 : 0;
  if (visible < width) s.append(width - visible, ' ');
  return s;
}

GridPos parse_pos(const std::string& row, const std::string& col) { return {std::stoi(row), std::stoi(col)}; }

}  // namespace

ValueTable value_iteration(const LakeMap& map, LakeVariant variant, double tol) {
  require(tol > 0.0, "value iteration: tolerance must be positive");
  ValueTable table;
  table.size = map.size();
  table.tolerance = tol;
  table.residuals = solve(map, variant, 1.0, tol, table.values);

  Eigen::MatrixXd discounted;
  solve(map, variant, kTieBreakDiscount, 1e-13, discounted);

  table.greedy.assign(static_cast<std::size_t>(map.size() * map.size()), Direction::Up);
  for (int r = 0; r < map.size(); ++r) {
    for (int c = 0; c < map.size(); ++c) {
      if (is_terminal_cell(map.at({r, c}))) continue;
      const double v = table.values(r, c);
      double best = -1.0;
      Direction choice = Direction::Up;
      for (Direction d : kDirections) {
        if (expected_value(map, {r, c}, d, variant, table.values) < v - kOptimalSlack) continue;
        const double q = expected_value(map, {r, c}, d, variant, discounted);
        if (q > best + 1e-12) {
          best = q;
          choice = d;
        }
      }
      table.greedy[static_cast<std::size_t>(r * map.size() + c)] = choice;
    }
  }
  return table;
}

LakeState parse_lake_observation(std::string_view text) {
  const std::string s(text);
  static const std::regex agent_re(R"(\nagent: \((\d+),(\d+)\))");
  static const std::regex goal_re(R"(\ngoal: \((\d+),(\d+)\))");
  static const std::regex holes_re(R"(\nholes:([^\n]*))");
  static const std::regex pos_re(R"(\((\d+),(\d+)\))");
  std::smatch m;
  if (!std::regex_search(s, m, agent_re)) throw std::invalid_argument("lake observation: no agent line");
  const GridPos agent = parse_pos(m[1], m[2]);
  if (!std::regex_search(s, m, goal_re)) throw std::invalid_argument("lake observation: no goal line");
  const GridPos goal = parse_pos(m[1], m[2]);

  const auto grid_at = s.find("\nGrid:\n");
  if (grid_at == std::string::npos) throw std::invalid_argument("lake observation: no grid");
  std::istringstream grid(s.substr(grid_at + 7));
  int size = 0;
  for (std::string line; std::getline(grid, line) && !line.empty();) ++size;

  LakeState state;
  state.map = LakeMap(size);
  if (std::regex_search(s, m, holes_re)) {
    const std::string holes = m[1];
    for (auto it = std::sregex_iterator(holes.begin(), holes.end(), pos_re); it != std::sregex_iterator(); ++it)
      state.map.set(parse_pos((*it)[1], (*it)[2]), LakeCell::Hole);
  }
  state.map.set(goal, LakeCell::Goal);
  if (state.map.at({0, 0}) == LakeCell::Ice) state.map.set({0, 0}, LakeCell::Start);
  state.agent = agent;
  state.variant = s.find("The ice is slippery") != std::string::npos ? LakeVariant::Slippery : LakeVariant::NotSlippery;
  return state;
}

Decision ValueIterationPolicy::act(const Observation& observation, Rng& rng, const StepContext& ctx) const {
  const LakeState state = parse_lake_observation(observation.text);
  const std::string key = state.map.to_text() + (state.variant == LakeVariant::Slippery ? "s" : "n");
  Direction d;
  {
    std::lock_guard lock(mutex_);
    auto it = cache_.find(key);
    if (it == cache_.end()) it = cache_.emplace(key, value_iteration(state.map, state.variant)).first;
    d = it->second.action(state.agent);
  }
  return ScriptedTextPolicy([d](const Observation&, Rng&) { return d; }).act(observation, rng, ctx);
}

EvalSuite standard_suite(std::string_view variant, std::size_t episodes) {
  EvalSuite suite;
  suite.id = std::string(variant);
  suite.env.variant = std::string(variant);
  suite.env.validate();
  const std::uint64_t base = stable_hash(suite.id);
  for (std::size_t i = 0; i < episodes; ++i) suite.seeds.push_back(mix_seed(base, i));
  return suite;
}

EvalMetrics evaluate(const LearnerPolicy& policy, const EvalSuite& suite, std::size_t workers,
                     std::vector<EpisodeRecord>* episodes) {
  suite.env.validate();
  const auto opponents = make_opponents(suite.env);
  const auto borrowed = borrow(opponents);
  const std::size_t cap = suite.env.effective_step_cap();
  std::vector<EpisodeRecord> runs(suite.seeds.size());
  parallel_for(suite.seeds.size(), workers, [&](std::size_t i) {
    auto env = make_environment(suite.env, suite.seeds[i]);
    runs[i] = run_episode(*env, policy, borrowed, suite.seeds[i], cap);
  });

  EvalMetrics m;
  m.suite_id = suite.id;
  m.episodes = runs.size();
  if (runs.empty()) return m;
  const bool lake = is_lake_variant(suite.env.variant);
  std::size_t steps = 0;
  std::size_t invalid = 0;
  for (const EpisodeRecord& ep : runs) {
    m.rewards.push_back(ep.total_env_reward);
    const bool success = lake ? ep.terminal_reason == TerminalReason::goal : ep.terminal_reason == TerminalReason::step_cap;
    m.success_rate += success ? 1.0 : 0.0;
    steps += ep.steps.size();
    invalid += ep.invalid_steps();
  }
  const double n = static_cast<double>(runs.size());
  const Eigen::Map<const Eigen::ArrayXd> r(m.rewards.data(), static_cast<Eigen::Index>(m.rewards.size()));
  m.mean_reward = r.mean();
  m.std_reward = std::sqrt((r - m.mean_reward).square().mean());
  m.success_rate /= n;
  m.invalid_rate = steps == 0 ? 0.0 : static_cast<double>(invalid) / static_cast<double>(steps);
  m.mean_length = static_cast<double>(steps) / n;
  if (episodes) *episodes = std::move(runs);
  return m;
}

ComparisonReport compare(const EvalMetrics& initial, const EvalMetrics& final_metrics) {
  ComparisonReport rep;
  rep.suite_id = final_metrics.suite_id;
  rep.initial_mean = initial.mean_reward;
  rep.initial_std = initial.std_reward;
  rep.final_mean = final_metrics.mean_reward;
  rep.final_std = final_metrics.std_reward;
  rep.delta_mean = final_metrics.mean_reward - initial.mean_reward;
  if (initial.rewards.size() == final_metrics.rewards.size() && !initial.rewards.empty()) {
    const auto n = static_cast<Eigen::Index>(initial.rewards.size());
    const Eigen::Map<const Eigen::ArrayXd> a(initial.rewards.data(), n);
    const Eigen::Map<const Eigen::ArrayXd> b(final_metrics.rewards.data(), n);
    const Eigen::ArrayXd d = b - a;
    rep.delta_std = std::sqrt((d - d.mean()).square().mean());
  } else {
    rep.delta_std = std::sqrt(initial.std_reward * initial.std_reward + final_metrics.std_reward * final_metrics.std_reward);
  }
  return rep;
}

std::string suite_label(std::string_view id) {
  if (id == kSnakeStandard) return "Snake - Standard";
  if (id == kSnakePoison) return "Snake - Poison Apple";
  if (id == kLakeSlippery) return "Frozen Lake - Slippery";
  if (id == kLakeNotSlippery) return "Frozen Lake - Not Slippery";
  return std::string(id);
}

std::string format_metrics_table(const std::vector<EvalMetrics>& metrics) {
  std::string out = pad("Evaluation", 28) + " | " + pad("Reward mean (std)", 18) + " | Success | Invalid | Length | Episodes\n";
  for (const auto& m : metrics) {
    out += pad(suite_label(m.suite_id), 28) + " | " + pad(fixed(m.mean_reward, 3) + " (" + fixed(m.std_reward, 3) + ")", 18) +
           " | " + pad(fixed(m.success_rate, 3), 7) + " | " + pad(fixed(m.invalid_rate, 3), 7) + " | " +
           pad(fixed(m.mean_length, 1), 6) + " | " + std::to_string(m.episodes) + "\n";
  }
  return out;
}

std::string format_comparison_table(const std::vector<ComparisonReport>& reports) {
  std::string out = pad("Evaluation", 28) + " | " + pad("Initial", 16) + " | " + pad("Final", 16) + " | Δ\n";
  for (const auto& r : reports) {
    out += pad(suite_label(r.suite_id), 28) + " | " +
           pad(fixed(r.initial_mean, 3) + " (" + fixed(r.initial_std, 3) + ")", 16) + " | " +
           pad(fixed(r.final_mean, 3) + " (" + fixed(r.final_std, 3) + ")", 16) + " | " + fixed(r.delta_mean, 3, true) +
           " (" + fixed(r.delta_std, 3) + ")\n";
  }
  return out;
}

}  // namespace msgrpo
