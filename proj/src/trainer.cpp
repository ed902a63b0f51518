#include "msgrpo/trainer.hpp"

#include <algorithm>
#include <numeric>
#include <sstream>

#include "msgrpo/lap_policy.hpp"
#include "msgrpo/parallel.hpp"

namespace msgrpo {

namespace {

constexpr std::uint64_t kInitialStateStream = 0;
constexpr std::uint64_t kSamplingStream = 0xAA5ULL;

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::string diagnostic_dump(std::string_view error, std::size_t iteration, const PolicyParams& theta,
                            const Eigen::MatrixXd& grad, const AdvantageGroup& group) {
  std::ostringstream out;
  out.precision(17);
  out << "{\"error\":\"" << error << "\",\"iteration\":" << iteration
      << ",\"weights_finite\":" << (theta.all_finite() ? "true" : "false")
      << ",\"weights_max_abs\":" << theta.weights.cwiseAbs().maxCoeff()
      << ",\"gradient_nonfinite_entries\":" << (grad.array().isFinite() == false).count() << ",\"composite_rewards\":[";
  for (Eigen::Index i = 0; i < group.composite_rewards.size(); ++i)
    out << (i ? "," : "") << group.composite_rewards[i];
  out << "],\"advantages\":[";
  for (Eigen::Index i = 0; i < group.advantages.size(); ++i) out << (i ? "," : "") << group.advantages[i];
  out << "]}";
  return out.str();
}

}  // namespace

void TrainerConfig::validate() const {
  check(group_size >= 2, "trainer.G: group size must be at least 2");
  check(sampled_size >= 1 && sampled_size <= group_size, "trainer.G_prime: must lie in [1, G]");
  check(std::isfinite(episode_temperature) && episode_temperature >= 0.0, "trainer.T_ep: must be >= 0");
  check(!sampling_enabled() || sampled_size >= 2, "trainer.G_prime: must be >= 2 when T_ep > 0");
  check(std::isfinite(clip_low) && clip_low > 0.0 && clip_low < 1.0, "trainer.eps_low: must lie in (0, 1)");
  check(std::isfinite(clip_high) && clip_high > 0.0, "trainer.eps_up: must be > 0");
  check(std::isfinite(kl_weight) && kl_weight >= 0.0, "trainer.beta: must be >= 0");
  check(std::isfinite(learning_rate) && learning_rate >= 0.0, "trainer.eta: must be >= 0");
  check(iterations >= 1, "trainer.M: must be >= 1");
  check(inner_epochs >= 1, "trainer.inner_epochs: must be >= 1");
  check(workers >= 1, "trainer.workers: must be >= 1");
}

std::vector<std::size_t> aaw_sample(const Eigen::VectorXd& advantages, double temperature, std::size_t count,
                                    Rng& rng) {
  require(count <= static_cast<std::size_t>(advantages.size()), "aaw: cannot draw more episodes than the group holds");
  Eigen::VectorXd weights = aaw_probabilities(advantages, temperature);
  std::vector<std::size_t> picked;
  picked.reserve(count);
  for (std::size_t draw = 0; draw < count; ++draw) {
    const double total = weights.sum();
    double u = uniform01(rng) * total;
    Eigen::Index chosen = -1;
    for (Eigen::Index i = 0; i < weights.size(); ++i) {
      if (weights[i] <= 0.0) continue;
      chosen = i;
      if (u < weights[i]) break;
      u -= weights[i];
    }
    picked.push_back(static_cast<std::size_t>(chosen));
    weights[chosen] = 0.0;
  }
  return picked;
}

AdvantageGroup recompute_sampled_advantages(const Eigen::VectorXd& composite_rewards,
                                            std::span<const std::size_t> indices) {
  require(indices.size() >= 2, "aaw: recomputing advantages needs at least two sampled episodes");
  Eigen::VectorXd subset(static_cast<Eigen::Index>(indices.size()));
  for (std::size_t i = 0; i < indices.size(); ++i) {
    require(indices[i] < static_cast<std::size_t>(composite_rewards.size()), "aaw: sampled index out of range");
    subset[static_cast<Eigen::Index>(i)] = composite_rewards[static_cast<Eigen::Index>(indices[i])];
  }
  return compute_advantages(subset);
}

double clipped_token_objective(double ratio, double advantage, double clip_low, double clip_high) {
  require(ratio > 0.0, "clipped objective: ratio must be positive");
  const double clipped = std::clamp(ratio, 1.0 - clip_low, 1.0 + clip_high);
  return std::min(ratio * advantage, clipped * advantage);
}

std::vector<std::vector<double>> importance_ratios(const PolicyParams& theta, const PolicyParams& old,
                                                   const EpisodeRecord& episode) {
  require(theta.vocab == old.vocab, "importance ratios: policies must share a vocabulary");
  std::vector<std::vector<double>> out;
  out.reserve(episode.steps.size());
  for (const StepRecord& step : episode.steps) {
    const auto now = PromptScorer(theta, step.prompt).sequence_log_probs(step.completion_tokens);
    const auto then = PromptScorer(old, step.prompt).sequence_log_probs(step.completion_tokens);
    std::vector<double> w(now.size());
    for (std::size_t k = 0; k < now.size(); ++k) w[k] = std::exp(now[k] - then[k]);
    out.push_back(std::move(w));
  }
  return out;
}

double kl_penalty(const PolicyParams& theta, const PolicyParams& reference, const EpisodeRecord& episode) {
  require(theta.vocab == reference.vocab, "kl: policies must share a vocabulary");
  double sum = 0.0;
  std::size_t n = 0;
  for (const StepRecord& step : episode.steps) {
    const auto cur = PromptScorer(theta, step.prompt).sequence_log_probs(step.completion_tokens);
    const auto ref = PromptScorer(reference, step.prompt).sequence_log_probs(step.completion_tokens);
    for (std::size_t k = 0; k < cur.size(); ++k) {
      const double log_r = ref[k] - cur[k];
      sum += std::exp(log_r) - log_r - 1.0;
    }
    n += cur.size();
  }
  return n == 0 ? 0.0 : sum / static_cast<double>(n);
}

SurrogateResult surrogate_objective(std::span<const WeightedEpisode> group, const PolicyParams& theta,
                                    const PolicyParams& old, const PolicyParams& reference,
                                    const TrainerConfig& config, bool with_gradient) {
  require(!group.empty(), "surrogate: empty group");
  require(theta.vocab == old.vocab && theta.vocab == reference.vocab, "surrogate: policies must share a vocabulary");
  SurrogateResult res;
  if (with_gradient) res.gradient = Eigen::MatrixXd::Zero(theta.weights.rows(), theta.weights.cols());
  const double inv_group = 1.0 / static_cast<double>(group.size());
  const double lo = 1.0 - config.clip_low;
  const double hi = 1.0 + config.clip_high;
  std::size_t included = 0;
  double kl_total = 0.0;

  for (const WeightedEpisode& we : group) {
    const EpisodeRecord& ep = *we.episode;
    const std::size_t n_tokens = ep.generated_tokens();
    if (n_tokens == 0) {
      ++res.skipped_episodes;
      continue;
    }
    ++included;
    const double A = we.advantage;
    const double scale = inv_group / static_cast<double>(n_tokens);
    double clip_sum = 0.0;
    double kl_sum = 0.0;
    for (const StepRecord& step : ep.steps) {
      if (step.completion_tokens.empty()) continue;
      const PromptScorer cur(theta, step.prompt);
      const auto lp = cur.sequence_log_probs(step.completion_tokens);
      const auto lp_old = PromptScorer(old, step.prompt).sequence_log_probs(step.completion_tokens);
      const auto lp_ref = PromptScorer(reference, step.prompt).sequence_log_probs(step.completion_tokens);
      std::vector<double> coeff(lp.size());
      for (std::size_t k = 0; k < lp.size(); ++k) {
        if (!std::isfinite(lp[k]) || !std::isfinite(lp_old[k]) || !std::isfinite(lp_ref[k]))
          throw TrainingDiverged("non-finite log-probability");
        const double w = std::exp(lp[k] - lp_old[k]);
        const double value = clipped_token_objective(w, A, config.clip_low, config.clip_high);
        clip_sum += value;
        // d/dtheta of the selected branch: w A dlogp unless the clipped,
        // constant branch is the minimum.
        const bool inside = w >= lo && w <= hi;
        const bool unclipped_selected = inside || w * A <= std::clamp(w, lo, hi) * A;
        if (!unclipped_selected) ++res.clipped_tokens;
        const double log_r = lp_ref[k] - lp[k];
        const double r = std::exp(log_r);
        kl_sum += r - log_r - 1.0;
        coeff[k] = scale * ((unclipped_selected ? w * A : 0.0) - config.kl_weight * (1.0 - r));
      }
      res.tokens += lp.size();
      if (with_gradient) cur.accumulate_gradient(step.completion_tokens, coeff, res.gradient);
    }
    const double kl_j = kl_sum / static_cast<double>(n_tokens);
    res.clipped_term += inv_group * clip_sum / static_cast<double>(n_tokens);
    res.objective += inv_group * (clip_sum / static_cast<double>(n_tokens) - config.kl_weight * kl_j);
    kl_total += kl_j;
  }
  res.kl = included == 0 ? 0.0 : kl_total / static_cast<double>(included);
  return res;
}

std::vector<EpisodeRecord> rollout_group(const TrainingSetup& setup, const LearnerPolicy& policy,
                                         const TrainerConfig& config, std::size_t iteration) {
  const auto initial = make_environment(setup.env, mix_seed(config.seed, iteration, kInitialStateStream));
  const auto opponents = make_opponents(setup.env);
  const auto borrowed = borrow(opponents);
  const std::size_t cap = setup.env.effective_step_cap();
  std::vector<EpisodeRecord> episodes(config.group_size);
  parallel_for(config.group_size, config.workers, [&](std::size_t j) {
    auto env = initial->clone();
    episodes[j] = run_episode(*env, policy, borrowed, mix_seed(config.seed, iteration, j + 1), cap);
  });
  return episodes;
}

TrainResult train(const TrainingSetup& setup, PolicyParams initial, const PolicyParams& reference,
                  const TrainerConfig& config, std::size_t first_iteration, const IterationCallback& on_iteration,
                  const std::function<bool()>& should_stop) {
  config.validate();
  setup.env.validate();
  setup.generation.validate();
  require(initial.all_finite(), "train: initial parameters must be finite");
  require(initial.vocab == reference.vocab && initial.weights.rows() == reference.weights.rows() &&
              initial.weights.cols() == reference.weights.cols(),
          "train: reference model must match the policy shape");
  require(first_iteration >= 1, "train: iterations are numbered from 1");

  TrainResult result{std::move(initial), {}};
  PolicyParams& theta = result.params;

  for (std::size_t it = first_iteration; it <= config.iterations; ++it) {
    if (should_stop && should_stop()) break;
    const ParamsSnapshot old = snapshot(theta);
    const LapPolicy rollout_policy(old, setup.generation, setup.prompt);
    const std::vector<EpisodeRecord> episodes = rollout_group(setup, rollout_policy, config, it);

    const auto G = static_cast<Eigen::Index>(episodes.size());
    Eigen::VectorXd composite(G);
    IterationMetrics m;
    m.iteration = it;
    std::size_t steps = 0;
    std::size_t tokens = 0;
    for (Eigen::Index j = 0; j < G; ++j) {
      const auto& ep = episodes[static_cast<std::size_t>(j)];
      composite[j] = ep.composite_reward;
      m.mean_env_reward += ep.total_env_reward;
      m.success_rate += ep.terminal_reason == TerminalReason::goal ? 1.0 : 0.0;
      steps += ep.steps.size();
      tokens += ep.generated_tokens();
    }
    m.mean_env_reward /= static_cast<double>(G);
    m.success_rate /= static_cast<double>(G);
    m.mean_composite = composite.mean();
    m.std_composite = std::sqrt((composite.array() - m.mean_composite).square().mean());
    m.mean_tokens_per_step = steps == 0 ? 0.0 : static_cast<double>(tokens) / static_cast<double>(steps);

    AdvantageGroup group = compute_advantages(composite);
    std::vector<std::size_t> kept(episodes.size());
    std::iota(kept.begin(), kept.end(), std::size_t{0});
    if (config.sampling_enabled()) {
      Rng rng(mix_seed(config.seed, it, kSamplingStream));
      kept = aaw_sample(group.advantages, config.episode_temperature, config.sampled_size, rng);
      // The update depends on the kept set only; a fixed order keeps the
      // summation identical to the unsampled path when G' = G.
      std::sort(kept.begin(), kept.end());
      group = recompute_sampled_advantages(composite, kept);
    }
    m.sampled = kept;
    m.degenerate = group.degenerate;
    m.mean_abs_advantage = group.advantages.cwiseAbs().mean();

    std::vector<WeightedEpisode> batch;
    batch.reserve(kept.size());
    for (std::size_t i = 0; i < kept.size(); ++i)
      batch.push_back({&episodes[kept[i]], group.advantages[static_cast<Eigen::Index>(i)]});

    for (std::size_t epoch = 0; epoch < config.inner_epochs; ++epoch) {
      SurrogateResult s;
      try {
        s = surrogate_objective(batch, theta, *old, reference, config, true);
      } catch (const TrainingDiverged& e) {
        throw TrainingDiverged(diagnostic_dump(e.what(), it, theta, Eigen::MatrixXd(), group));
      }
      if (!s.gradient.allFinite()) throw TrainingDiverged(diagnostic_dump("non-finite gradient", it, theta, s.gradient, group));
      if (epoch == 0) {
        m.objective = s.objective;
        m.kl = s.kl;
        m.grad_norm = s.gradient.norm();
        m.skipped_episodes = s.skipped_episodes;
      }
      Eigen::MatrixXd next = theta.weights + config.learning_rate * s.gradient;
      if (!next.allFinite()) throw TrainingDiverged(diagnostic_dump("non-finite update", it, theta, s.gradient, group));
      theta.weights = std::move(next);
    }
    if (on_iteration) on_iteration(m, theta);
    result.history.push_back(std::move(m));
  }
  return result;
}

TrainResult train(const TrainingSetup& setup, const LearnerPolicy& policy, const TrainerConfig& config) {
  const PolicyParams* params = policy.trainable_params();
  require(params != nullptr, "train: policy exposes no token log-probabilities and cannot be trained");
  return train(setup, *params, *params, config);
}

}  // namespace msgrpo
