#pragma once

#include <Eigen/Dense>
#include <map>
#include <mutex>
#include <string>
#include <vector>

#include "msgrpo/environments.hpp"
#include "msgrpo/lap_policy.hpp"

namespace msgrpo {

/// Undiscounted success probabilities of a lake map and a greedy policy.
struct ValueTable {
  int size = 0;
  Eigen::MatrixXd values;             // values(row, col)
  std::vector<Direction> greedy;      // row-major; meaningless on terminal cells
  std::vector<double> residuals;      // max-norm Bellman residual per sweep
  double tolerance = 0.0;

  double at(GridPos p) const { return values(p.row, p.col); }
  Direction action(GridPos p) const { return greedy[static_cast<std::size_t>(p.row * size + p.col)]; }
};

/// Synchronous value iteration of V(s) = max_a sum_s' P(s'|s,a) V(s') with
/// V(goal) = 1 and V(hole) = 0, from V = 0, until the max residual drops
/// below `tol`.
///
/// Undiscounted values tie between reaching the goal now and bumping into a
/// wall first, so the greedy action is chosen among the undiscounted-optimal
/// actions by a second, discounted (0.999) solve, which prefers the fastest
/// route. Remaining ties go Up > Down > Left > Right.
ValueTable value_iteration(const LakeMap& map, LakeVariant variant, double tol = 1e-10);

/// Reconstructs the lake state from a rendered observation.
LakeState parse_lake_observation(std::string_view text);

/// Greedy value-iteration policy that reads the map from the observation
/// text. Tables are cached per map.
class ValueIterationPolicy final : public LearnerPolicy {
 public:
  Decision act(const Observation& observation, Rng& rng, const StepContext& ctx) const override;

 private:
  mutable std::mutex mutex_;
  mutable std::map<std::string, ValueTable> cache_;
};

/// A fixed list of evaluation episodes for one variant.
struct EvalSuite {
  std::string id;
  EnvConfig env;
  std::vector<std::uint64_t> seeds;
};

inline constexpr std::size_t kDefaultEvalEpisodes = 50;

/// Suite id = variant id; seeds depend only on the id and their index.
EvalSuite standard_suite(std::string_view variant, std::size_t episodes = kDefaultEvalEpisodes);

struct EvalMetrics {
  std::string suite_id;
  std::size_t episodes = 0;
  double mean_reward = 0.0;
  double std_reward = 0.0;
  double success_rate = 0.0;
  double invalid_rate = 0.0;
  double mean_length = 0.0;
  std::vector<double> rewards;  // per episode, in seed order

  friend bool operator==(const EvalMetrics&, const EvalMetrics&) = default;
};

/// Runs every seed once and aggregates environment reward (not composite
/// reward). Success: the goal on a lake, surviving to the step cap in snake.
EvalMetrics evaluate(const LearnerPolicy& policy, const EvalSuite& suite, std::size_t workers = 1,
                     std::vector<EpisodeRecord>* episodes = nullptr);

/// Initial/final/delta row in the layout of the results table.
struct ComparisonReport {
  std::string suite_id;
  double initial_mean = 0.0;
  double initial_std = 0.0;
  double final_mean = 0.0;
  double final_std = 0.0;
  double delta_mean = 0.0;
  double delta_std = 0.0;  // of per-episode differences when seeds pair up

  friend bool operator==(const ComparisonReport&, const ComparisonReport&) = default;
};

ComparisonReport compare(const EvalMetrics& initial, const EvalMetrics& final_metrics);

std::string format_metrics_table(const std::vector<EvalMetrics>& metrics);
std::string format_comparison_table(const std::vector<ComparisonReport>& reports);

/// "Frozen Lake - Not Slippery" style label for a suite id.
std::string suite_label(std::string_view suite_id);

}  // namespace msgrpo
