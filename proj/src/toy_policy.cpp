#include "msgrpo/toy_policy.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace msgrpo {

int FeatureSpec::bucket(std::size_t position) const {
  const auto b = static_cast<std::size_t>(position_buckets);
  const auto h = static_cast<std::size_t>(std::max(1, position_horizon));
  return static_cast<int>(std::min(b - 1, position * b / h));
}

PolicyParams PolicyParams::zeros(Vocabulary vocab, FeatureSpec features) {
  require(features.ngram_dim >= 1 && features.ngram_order >= 1 && features.position_buckets >= 1 &&
              features.position_horizon >= 1,
          "feature spec: dimensions must be positive");
  PolicyParams p{std::move(vocab), std::move(features), {}};
  p.weights = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(p.vocab.size()), p.features.dimension(p.vocab.size()));
  return p;
}

PolicyParams format_prior_params(Vocabulary vocab, FeatureSpec features, double strength) {
  PolicyParams p = PolicyParams::zeros(std::move(vocab), std::move(features));
  const Vocabulary& v = p.vocab;
  const int end = v.end_id();
  const int think = v.id_of("<think>");
  const int think_close = v.id_of("</think>");
  const int action = v.id_of("<action>");
  const int action_close = v.id_of("</action>");
  std::vector<int> directions;
  for (Direction d : kDirections) directions.push_back(v.id_of(to_string(d)));
  std::vector<int> fillers;
  for (int t = 0; t < static_cast<int>(v.size()); ++t) {
    if (t == end || t == think || t == think_close || t == action || t == action_close) continue;
    if (std::find(directions.begin(), directions.end(), t) != directions.end()) continue;
    fillers.push_back(t);
  }

  const double single = strength + 2.0;
  auto prefer = [&](int prev, int next, double value) { p.weights(next, p.previous_block() + prev) = value; };
  prefer(end, think, single);
  for (int f : fillers) prefer(think, f, strength);
  for (int f : fillers) {
    for (int g : fillers) prefer(f, g, strength - 1.5);
    prefer(f, think_close, strength + 1.0);
  }
  prefer(think_close, action, single);
  for (int d : directions) {
    prefer(action, d, strength);
    prefer(d, action_close, single);
  }
  prefer(action_close, end, single);
  return p;
}

ParamsSnapshot snapshot(const PolicyParams& params) { return std::make_shared<const PolicyParams>(params); }

Eigen::VectorXd prompt_features(const FeatureSpec& spec, std::string_view prompt) {
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(spec.ngram_dim);
  const auto n = static_cast<std::size_t>(spec.ngram_order);
  std::vector<std::uint64_t> hashes;
  for (std::size_t i = 0; i + n <= prompt.size(); ++i) hashes.push_back(stable_hash(prompt.substr(i, n)));
  std::sort(hashes.begin(), hashes.end());
  hashes.erase(std::unique(hashes.begin(), hashes.end()), hashes.end());
  for (std::uint64_t h : hashes) {
    const double sign = ((h >> 40) & 1) ? -1.0 : 1.0;
    phi[static_cast<Eigen::Index>(h % static_cast<std::uint64_t>(spec.ngram_dim))] += sign;
  }
  const double norm = phi.norm();
  if (norm > 0.0) phi *= spec.ngram_scale / norm;
  return phi;
}

PromptScorer::PromptScorer(const PolicyParams& params, std::string_view prompt)
    : params_(params), phi_prompt_(msgrpo::prompt_features(params.features, prompt)) {
  prompt_logits_ = params_.weights.leftCols(params_.features.ngram_dim) * phi_prompt_;
}

Eigen::VectorXd PromptScorer::logits(std::span<const TokenId> prefix) const {
  const TokenId prev = prefix.empty() ? params_.vocab.end_id() : prefix.back();
  require(params_.vocab.contains(prev), "token model: prefix token outside vocabulary");
  return prompt_logits_ + params_.weights.col(params_.previous_block() + prev) +
         params_.weights.col(params_.position_block() + params_.features.bucket(prefix.size()));
}

Eigen::VectorXd PromptScorer::log_probs(std::span<const TokenId> prefix) const { return log_softmax(logits(prefix)); }

std::vector<double> PromptScorer::sequence_log_probs(std::span<const TokenId> completion) const {
  std::vector<double> out(completion.size());
  for (std::size_t k = 0; k < completion.size(); ++k) {
    require(params_.vocab.contains(completion[k]), "token model: completion token outside vocabulary");
    out[k] = log_probs(completion.first(k))[completion[k]];
  }
  return out;
}

void PromptScorer::accumulate_gradient(std::span<const TokenId> completion, std::span<const double> coeffs,
                                       Eigen::MatrixXd& grad) const {
  require(coeffs.size() == completion.size(), "token model: one coefficient per token required");
  require(grad.rows() == params_.weights.rows() && grad.cols() == params_.weights.cols(),
          "token model: gradient shape mismatch");
  Eigen::VectorXd prompt_coeff = Eigen::VectorXd::Zero(grad.rows());
  for (std::size_t k = 0; k < completion.size(); ++k) {
    if (coeffs[k] == 0.0) continue;
    const TokenId y = completion[k];
    require(params_.vocab.contains(y), "token model: completion token outside vocabulary");
    auto prefix = completion.first(k);
    Eigen::VectorXd residual = -log_probs(prefix).array().exp().matrix();
    residual[y] += 1.0;
    residual *= coeffs[k];
    prompt_coeff += residual;
    const TokenId prev = prefix.empty() ? params_.vocab.end_id() : prefix.back();
    grad.col(params_.previous_block() + prev) += residual;
    grad.col(params_.position_block() + params_.features.bucket(k)) += residual;
  }
  grad.leftCols(params_.features.ngram_dim).noalias() += prompt_coeff * phi_prompt_.transpose();
}

Eigen::VectorXd token_logprobs(const PolicyParams& params, std::string_view prompt, std::span<const TokenId> prefix) {
  return PromptScorer(params, prompt).log_probs(prefix);
}

void GenerationConfig::validate() const {
  require(std::isfinite(temperature) && temperature > 0.0, "generation: temperature must be > 0");
  require(max_tokens >= 1, "generation: max_tokens must be >= 1");
}

std::vector<TokenId> sample_completion(const PolicyParams& params, const GenerationConfig& gen, std::string_view prompt,
                                       Rng& rng) {
  gen.validate();
  const PromptScorer scorer(params, prompt);
  const auto vocab_size = static_cast<std::size_t>(params.vocab.size());
  const std::size_t keep = (gen.top_k == 0 || gen.top_k > vocab_size) ? vocab_size : gen.top_k;

  std::vector<TokenId> out;
  std::vector<TokenId> order(vocab_size);
  while (out.size() < gen.max_tokens) {
    Eigen::VectorXd scaled = scorer.logits(out) / gen.temperature;
    std::iota(order.begin(), order.end(), 0);
    // Highest logit first; ties resolved towards the lower token id.
    std::stable_sort(order.begin(), order.end(), [&](TokenId a, TokenId b) { return scaled[a] > scaled[b]; });
    const double top = scaled[order[0]];
    std::vector<double> weight(keep);
    double total = 0.0;
    for (std::size_t i = 0; i < keep; ++i) {
      weight[i] = std::exp(scaled[order[i]] - top);
      total += weight[i];
    }
    double u = uniform01(rng) * total;
    TokenId chosen = order[keep - 1];
    for (std::size_t i = 0; i < keep; ++i) {
      if (u < weight[i]) {
        chosen = order[i];
        break;
      }
      u -= weight[i];
    }
    out.push_back(chosen);
    if (chosen == params.vocab.end_id()) break;
  }
  return out;
}

Eigen::MatrixXd grad_logprob(const PolicyParams& params, std::string_view prompt, std::span<const TokenId> completion) {
  Eigen::MatrixXd grad = Eigen::MatrixXd::Zero(params.weights.rows(), params.weights.cols());
  const std::vector<double> ones(completion.size(), 1.0);
  PromptScorer(params, prompt).accumulate_gradient(completion, ones, grad);
  return grad;
}

}  // namespace msgrpo
