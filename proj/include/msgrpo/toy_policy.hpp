#pragma once

// A log-linear autoregressive token model standing in for the language model
// of a language agent policy:
//
//   p(y_k | prompt, y_<k) = softmax(W * phi(prompt, y_<k))[y_k]
//
// with phi the concatenation of
//   * hashed character n-gram counts of the prompt (L2-normalised, scaled),
//   * a one-hot of the previous token (END marks the first position),
//   * a one-hot position bucket over [0, horizon).
//
// Log-probabilities are exact and the gradient of a completion's
// log-likelihood is sum_k (onehot(y_k) - p_k) phi_k^T.

#include <Eigen/Dense>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "msgrpo/common.hpp"
#include "msgrpo/vocabulary.hpp"

namespace msgrpo {

/// Prompt block: every distinct character n-gram of the prompt adds +-1 to
/// one of ngram_dim hashed buckets (sign from the hash), and the block is
/// scaled to norm ngram_scale. Counting distinct n-grams rather than
/// occurrences keeps the long static instructions from swamping the few
/// n-grams that change with the state.
struct FeatureSpec {
  std::string id = "char-ngram-hash/v1";
  int ngram_order = 12;
  int ngram_dim = 256;
  double ngram_scale = 32.0;
  int position_buckets = 8;
  int position_horizon = 200;

  int dimension(std::size_t vocab_size) const {
    return ngram_dim + static_cast<int>(vocab_size) + position_buckets;
  }
  int bucket(std::size_t position) const;

  friend bool operator==(const FeatureSpec&, const FeatureSpec&) = default;
};

/// Weights of the token model, shape |V| x F.
struct PolicyParams {
  Vocabulary vocab = default_vocabulary();
  FeatureSpec features;
  Eigen::MatrixXd weights;

  static PolicyParams zeros(Vocabulary vocab, FeatureSpec features = {});

  bool all_finite() const { return weights.allFinite(); }
  int prompt_block() const { return 0; }
  int previous_block() const { return features.ngram_dim; }
  int position_block() const { return features.ngram_dim + static_cast<int>(vocab.size()); }
};

inline constexpr double kFormatPriorStrength = 8.0;

/// Initial weights that encode the answer format as bigram preferences
/// (`<think>` filler... `</think><action>` direction `</action>` END) and
/// are indifferent to the prompt, so every direction is equally likely.
PolicyParams format_prior_params(Vocabulary vocab, FeatureSpec features = {}, double strength = kFormatPriorStrength);

using ParamsSnapshot = std::shared_ptr<const PolicyParams>;

/// Deep immutable copy; later updates to `params` never reach it.
ParamsSnapshot snapshot(const PolicyParams& params);

/// Hashed, normalised n-gram block of phi for a prompt.
Eigen::VectorXd prompt_features(const FeatureSpec& spec, std::string_view prompt);

/// Evaluates the model for one prompt. The prompt block of the logits is
/// computed once and reused for every prefix.
class PromptScorer {
 public:
  PromptScorer(const PolicyParams& params, std::string_view prompt);

  Eigen::VectorXd logits(std::span<const TokenId> prefix) const;
  Eigen::VectorXd log_probs(std::span<const TokenId> prefix) const;

  /// log p(y_k | prompt, y_<k) for each k.
  std::vector<double> sequence_log_probs(std::span<const TokenId> completion) const;

  /// grad += sum_k coeff[k] * d/dW log p(y_k | prompt, y_<k).
  void accumulate_gradient(std::span<const TokenId> completion, std::span<const double> coeffs,
                           Eigen::MatrixXd& grad) const;

  const Eigen::VectorXd& prompt_features() const { return phi_prompt_; }

 private:
  const PolicyParams& params_;
  Eigen::VectorXd phi_prompt_;
  Eigen::VectorXd prompt_logits_;
};

/// Log-softmax over a logit vector with max subtraction.
template <typename Derived>
Eigen::Matrix<typename Derived::Scalar, Eigen::Dynamic, 1> log_softmax(const Eigen::MatrixBase<Derived>& logits) {
  using Scalar = typename Derived::Scalar;
  const Scalar m = logits.maxCoeff();
  const Scalar lse = m + std::log((logits.array() - m).exp().sum());
  return (logits.array() - lse).matrix();
}

Eigen::VectorXd token_logprobs(const PolicyParams& params, std::string_view prompt, std::span<const TokenId> prefix);

struct GenerationConfig {
  double temperature = 1.0;
  std::size_t top_k = 0;  // 0 keeps the whole vocabulary
  std::size_t max_tokens = 200;

  void validate() const;
  friend bool operator==(const GenerationConfig&, const GenerationConfig&) = default;
};

/// Autoregressive sampling: temperature scaling, then top-k truncation and
/// renormalisation. Stops after END (which is kept) or at max_tokens.
std::vector<TokenId> sample_completion(const PolicyParams& params, const GenerationConfig& gen, std::string_view prompt,
                                       Rng& rng);

/// Gradient of sum_k log p(y_k | prompt, y_<k) with respect to the weights.
Eigen::MatrixXd grad_logprob(const PolicyParams& params, std::string_view prompt, std::span<const TokenId> completion);

}  // namespace msgrpo
