#pragma once

// Multi-step group-relative policy optimisation.
//
// Each iteration freezes theta_old, rolls out a group of G episodes that all
// start from one shared initial observation, standardises the episodes'
// composite rewards into advantages, optionally keeps G' episodes drawn by
// absolute-advantage-weighted sampling (advantages then recomputed over the
// kept subset), and takes a gradient-ascent step on
//
//   J(theta) = 1/G' sum_j [ 1/|y_j| sum_{t,k} min(w A_j, clip(w, 1-eps_lo, 1+eps_hi) A_j)
//                           - beta KL_j ]
//
// where w is the per-token ratio p_theta / p_theta_old, A_j is broadcast to
// every generated token of episode j, and KL_j averages r - log r - 1 with
// r = p_ref / p_theta over the episode's generated tokens.

#include <Eigen/Dense>
#include <cmath>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "msgrpo/common.hpp"
#include "msgrpo/environments.hpp"
#include "msgrpo/lap.hpp"
#include "msgrpo/tmsg.hpp"
#include "msgrpo/toy_policy.hpp"

namespace msgrpo {

struct TrainerConfig {
  std::size_t group_size = 16;           // G
  std::size_t sampled_size = 8;          // G'
  double episode_temperature = 1.0;      // T_ep; 0 turns sampling off
  double clip_low = 0.2;
  double clip_high = 0.2;
  double kl_weight = 0.01;               // beta
  double learning_rate = 0.05;           // eta
  std::size_t iterations = 300;          // M
  std::size_t inner_epochs = 1;
  std::uint64_t seed = 0;
  std::size_t workers = 1;               // rollout threads; results do not depend on it

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
  bool sampling_enabled() const { return episode_temperature > 0.0; }

  friend bool operator==(const TrainerConfig&, const TrainerConfig&) = default;
};

inline constexpr double kDegenerateStd = 1e-8;

struct AdvantageGroup {
  Eigen::VectorXd composite_rewards;
  Eigen::VectorXd advantages;
  bool degenerate = false;
};

/// A_j = (C_j - mean C) / std C with the population deviation. Groups whose
/// deviation is below 1e-8 get all-zero advantages.
template <typename Derived>
AdvantageGroup compute_advantages(const Eigen::MatrixBase<Derived>& rewards) {
  require(rewards.size() >= 2, "advantages: a group needs at least two episodes");
  AdvantageGroup g;
  g.composite_rewards = rewards.template cast<double>();
  const double mean = g.composite_rewards.mean();
  const Eigen::ArrayXd centred = g.composite_rewards.array() - mean;
  const double sd = std::sqrt(centred.square().mean());
  g.degenerate = !(sd >= kDegenerateStd);
  g.advantages = g.degenerate ? Eigen::VectorXd::Zero(rewards.size()) : Eigen::VectorXd(centred / sd);
  return g;
}

/// Softmax of |A| / T_ep, max-subtracted.
template <typename Derived>
Eigen::VectorXd aaw_probabilities(const Eigen::MatrixBase<Derived>& advantages, double temperature) {
  require(temperature > 0.0, "aaw: temperature must be positive");
  const Eigen::ArrayXd scaled = advantages.template cast<double>().array().abs() / temperature;
  const Eigen::ArrayXd e = (scaled - scaled.maxCoeff()).exp();
  return (e / e.sum()).matrix();
}

/// Draws `count` distinct indices one at a time, each with probability
/// proportional to exp(|A_j| / T_ep) among those not yet drawn. Indices are
/// returned in draw order.
std::vector<std::size_t> aaw_sample(const Eigen::VectorXd& advantages, double temperature, std::size_t count, Rng& rng);

/// Advantages recomputed over the selected episodes only.
AdvantageGroup recompute_sampled_advantages(const Eigen::VectorXd& composite_rewards,
                                            std::span<const std::size_t> indices);

/// min(w A, clip(w, 1 - eps_low, 1 + eps_high) A).
double clipped_token_objective(double ratio, double advantage, double clip_low, double clip_high);

/// Per step, per token p_theta(y) / p_old(y) evaluated in log space, each
/// conditioned only on that step's prompt and completion prefix.
std::vector<std::vector<double>> importance_ratios(const PolicyParams& theta, const PolicyParams& old,
                                                   const EpisodeRecord& episode);

/// Mean over generated tokens of r - log r - 1, r = p_ref(y) / p_theta(y).
double kl_penalty(const PolicyParams& theta, const PolicyParams& reference, const EpisodeRecord& episode);

struct WeightedEpisode {
  const EpisodeRecord* episode = nullptr;
  double advantage = 0.0;
};

struct SurrogateResult {
  double objective = 0.0;
  double clipped_term = 0.0;  // the first sum, before the KL term
  double kl = 0.0;            // mean KL_j over included episodes
  Eigen::MatrixXd gradient;   // empty unless requested
  std::size_t tokens = 0;
  std::size_t clipped_tokens = 0;
  std::size_t skipped_episodes = 0;  // no generated tokens
};

/// The objective J(theta) for one (sub)group and, optionally, its exact
/// gradient. Advantages are constants. Episodes without generated tokens
/// contribute nothing and are counted in skipped_episodes.
SurrogateResult surrogate_objective(std::span<const WeightedEpisode> group, const PolicyParams& theta,
                                    const PolicyParams& old, const PolicyParams& reference,
                                    const TrainerConfig& config, bool with_gradient = true);

struct IterationMetrics {
  std::size_t iteration = 0;
  double mean_composite = 0.0;
  double std_composite = 0.0;
  double mean_env_reward = 0.0;
  double success_rate = 0.0;
  double mean_abs_advantage = 0.0;
  double mean_tokens_per_step = 0.0;
  bool degenerate = false;
  std::vector<std::size_t> sampled;
  double objective = 0.0;
  double kl = 0.0;
  double grad_norm = 0.0;
  std::size_t skipped_episodes = 0;
};

/// Raised when an update would make the parameters non-finite, or the model's
/// log-probabilities overflow. train() rethrows with a JSON diagnostic dump
/// in what().
class TrainingDiverged : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct TrainResult {
  PolicyParams params;
  std::vector<IterationMetrics> history;
};

/// Called after every iteration with the updated parameters.
using IterationCallback = std::function<void(const IterationMetrics&, const PolicyParams&)>;

struct TrainingSetup {
  EnvConfig env;
  GenerationConfig generation;
  PromptTemplate prompt = canonical_template();
};

/// The outer loop, iterations first_iteration..config.iterations (1-based).
/// Iteration i draws all of its randomness from streams derived from
/// (config.seed, i), so resuming from a checkpoint of iteration i-1
/// reproduces an uninterrupted run exactly.
TrainResult train(const TrainingSetup& setup, PolicyParams initial, const PolicyParams& reference,
                  const TrainerConfig& config, std::size_t first_iteration = 1, const IterationCallback& on_iteration = {},
                  const std::function<bool()>& should_stop = {});

/// Starts from a policy's own parameters, which also serve as the reference.
/// Policies without token log-probabilities are rejected.
TrainResult train(const TrainingSetup& setup, const LearnerPolicy& policy, const TrainerConfig& config);

/// One group of rollouts from a shared initial state, as used by train().
std::vector<EpisodeRecord> rollout_group(const TrainingSetup& setup, const LearnerPolicy& policy,
                                         const TrainerConfig& config, std::size_t iteration);

}  // namespace msgrpo
