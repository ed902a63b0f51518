#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "msgrpo/toy_policy.hpp"
#include "msgrpo/trainer.hpp"
#include "support.hpp"

using namespace msgrpo;

namespace {

const Vocabulary& tiny_vocab() {
  static const Vocabulary v({"<END>", "a", "b"});
  return v;
}

FeatureSpec small_spec() {
  FeatureSpec f;
  f.ngram_order = 2;
  f.ngram_dim = 6;
  f.ngram_scale = 1.5;
  f.position_buckets = 3;
  f.position_horizon = 6;
  return f;
}

oracle::TokenModel model_of(const PolicyParams& p) {
  const FeatureSpec& f = p.features;
  return {f.ngram_order, f.ngram_dim, f.position_buckets, f.position_horizon, f.ngram_scale, p.vocab.size(),
          p.vocab.end_id()};
}

PolicyParams random_params(const Vocabulary& v, const FeatureSpec& f, Rng& rng, double scale = 1.0) {
  PolicyParams p = PolicyParams::zeros(v, f);
  for (Eigen::Index i = 0; i < p.weights.size(); ++i) p.weights.data()[i] = scale * (2 * uniform01(rng) - 1);
  return p;
}

std::string random_prompt(Rng& rng) {
  std::string s;
  for (int i = 0, n = 1 + static_cast<int>(rng() % 12); i < n; ++i) s += "xyz ab"[rng() % 6];
  return s;
}

std::vector<TokenId> random_tokens(Rng& rng, std::size_t vocab, std::size_t max_len) {
  std::vector<TokenId> out(rng() % (max_len + 1));
  for (auto& t : out) t = static_cast<TokenId>(rng() % vocab);
  return out;
}

}  // namespace

TEST_CASE("zero weights give the uniform distribution") {
  const PolicyParams p = PolicyParams::zeros(default_vocabulary());
  const std::vector<TokenId> prefix{3, 5};
  const Eigen::VectorXd lp = token_logprobs(p, "some prompt", prefix);
  for (Eigen::Index i = 0; i < lp.size(); ++i) CHECK(lp[i] == doctest::Approx(-std::log(24.0)).epsilon(1e-14));
}

TEST_CASE("adding one vector to every row leaves probabilities unchanged") {
  Rng rng(1);
  PolicyParams p = random_params(tiny_vocab(), small_spec(), rng);
  const Eigen::VectorXd before = token_logprobs(p, "xyzzy", std::vector<TokenId>{1});
  Eigen::RowVectorXd shift(p.weights.cols());
  for (Eigen::Index i = 0; i < shift.size(); ++i) shift[i] = 3.0 * uniform01(rng);
  p.weights.rowwise() += shift;
  const Eigen::VectorXd after = token_logprobs(p, "xyzzy", std::vector<TokenId>{1});
  CHECK((before - after).cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("probabilities match an extended-precision evaluation") {
  Rng rng(2);
  for (int trial = 0; trial < 200; ++trial) {
    const PolicyParams p = random_params(tiny_vocab(), small_spec(), rng, 2.0);
    const std::string prompt = random_prompt(rng);
    const auto prefix = random_tokens(rng, 3, 7);
    const Eigen::VectorXd lp = token_logprobs(p, prompt, prefix);
    const auto want = model_of(p).probs(p.weights, prompt, prefix);
    double sum = 0;
    for (std::size_t t = 0; t < 3; ++t) {
      CHECK(std::abs(std::exp(lp[static_cast<Eigen::Index>(t)]) - static_cast<double>(want[t])) < 1e-13);
      sum += std::exp(lp[static_cast<Eigen::Index>(t)]);
    }
    CHECK(std::abs(sum - 1.0) < 1e-9);
  }
}

TEST_CASE("default feature map agrees with the oracle on real prompts") {
  Rng rng(3);
  const PolicyParams p = random_params(default_vocabulary(), FeatureSpec{}, rng, 0.05);
  const std::string prompt = "Frozen Lake. agent: (1,2)\ngoal: (3,3)\nholes: (1,1)\n.H..\n..A.\n";
  const std::vector<TokenId> prefix{p.vocab.id_of("<think>")};
  const Eigen::VectorXd lp = token_logprobs(p, prompt, prefix);
  const auto want = model_of(p).probs(p.weights, prompt, prefix);
  for (std::size_t t = 0; t < p.vocab.size(); ++t)
    CHECK(std::abs(std::exp(lp[static_cast<Eigen::Index>(t)]) - static_cast<double>(want[t])) < 1e-12);
  const Eigen::VectorXd phi = prompt_features(p.features, prompt);
  CHECK(phi.norm() == doctest::Approx(p.features.ngram_scale).epsilon(1e-12));
}

TEST_CASE("top_k = 1 is greedy decoding") {
  Rng rng(4);
  const PolicyParams p = random_params(tiny_vocab(), small_spec(), rng, 2.0);
  GenerationConfig gen;
  gen.top_k = 1;
  gen.max_tokens = 10;
  std::vector<TokenId> greedy;
  while (greedy.size() < gen.max_tokens) {
    const Eigen::VectorXd lp = token_logprobs(p, "prompt", greedy);
    Eigen::Index best;
    lp.maxCoeff(&best);
    greedy.push_back(static_cast<TokenId>(best));
    if (best == p.vocab.end_id()) break;
  }
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    Rng r(seed);
    CHECK(sample_completion(p, gen, "prompt", r) == greedy);
  }
}

TEST_CASE("max_tokens truncates when END never comes") {
  PolicyParams p = PolicyParams::zeros(default_vocabulary());
  // END gets a large negative logit from every previous-token and position feature.
  p.weights.row(p.vocab.end_id()).tail(p.weights.cols() - p.features.ngram_dim).setConstant(-1e3);
  GenerationConfig gen;
  gen.max_tokens = 3;
  Rng rng(5);
  for (int i = 0; i < 100; ++i) CHECK(sample_completion(p, gen, "x", rng).size() == 3);
}

TEST_CASE("zero weights sample every position uniformly") {
  const PolicyParams p = PolicyParams::zeros(default_vocabulary());
  const GenerationConfig gen;
  Rng rng(6);
  const std::size_t V = p.vocab.size();
  std::vector<std::vector<double>> counts(3, std::vector<double>(V, 0.0));
  for (int i = 0; i < 100000; ++i) {
    const auto y = sample_completion(p, gen, "prompt", rng);
    for (std::size_t k = 0; k < std::min<std::size_t>(3, y.size()); ++k) counts[k][static_cast<std::size_t>(y[k])] += 1;
  }
  const std::vector<double> uniform(V, 1.0 / static_cast<double>(V));
  for (std::size_t k = 0; k < 3; ++k) {
    const double x = oracle::chi_square_stat(counts[k], uniform);
    INFO("position " << k << " chi2 " << x);
    CHECK(oracle::chi_square_p(x, static_cast<int>(V) - 1) > 0.01);
  }
}

TEST_CASE("sampled first-token frequencies converge to the model probabilities") {
  Rng init(7);
  const PolicyParams p = random_params(default_vocabulary(), FeatureSpec{}, init, 0.1);
  GenerationConfig gen;
  gen.top_k = p.vocab.size();
  gen.max_tokens = 1;
  const Eigen::VectorXd prob = token_logprobs(p, "prompt", {}).array().exp();
  std::vector<double> freq(p.vocab.size(), 0.0);
  Rng rng(8);
  const int n = 100000;
  for (int i = 0; i < n; ++i) freq[static_cast<std::size_t>(sample_completion(p, gen, "prompt", rng)[0])] += 1.0 / n;
  double cdf_a = 0, cdf_b = 0, ks = 0;
  for (std::size_t t = 0; t < freq.size(); ++t) {
    cdf_a += freq[t];
    cdf_b += prob[static_cast<Eigen::Index>(t)];
    ks = std::max(ks, std::abs(cdf_a - cdf_b));
  }
  CHECK(ks < 0.01);
}

TEST_CASE("grad_logprob matches central finite differences") {
  Rng rng(9);
  double worst = 0;
  for (int trial = 0; trial < 100; ++trial) {
    PolicyParams p = random_params(tiny_vocab(), small_spec(), rng);
    const std::string prompt = random_prompt(rng);
    auto y = random_tokens(rng, 3, 5);
    if (y.empty()) y.push_back(1);
    const Eigen::MatrixXd g = grad_logprob(p, prompt, y);
    const auto model = model_of(p);
    Eigen::MatrixXd fd(g.rows(), g.cols());
    const double h = 1e-5;
    for (Eigen::Index i = 0; i < p.weights.size(); ++i) {
      const double w = p.weights.data()[i];
      p.weights.data()[i] = w + h;
      const auto up = model.logprob(p.weights, prompt, y);
      p.weights.data()[i] = w - h;
      const auto down = model.logprob(p.weights, prompt, y);
      p.weights.data()[i] = w;
      fd.data()[i] = static_cast<double>((up - down) / (2 * h));
    }
    const double rel = (g - fd).cwiseAbs().maxCoeff() / std::max(fd.cwiseAbs().maxCoeff(), 1e-12);
    worst = std::max(worst, rel);
  }
  INFO("worst relative error " << worst);
  CHECK(worst < 1e-4);
}

TEST_CASE("gradient closed forms") {
  const PolicyParams p = PolicyParams::zeros(default_vocabulary());
  const std::string prompt = "closed form prompt";
  const TokenId y = p.vocab.id_of("up");
  const Eigen::MatrixXd g = grad_logprob(p, prompt, std::vector<TokenId>{y});
  Eigen::VectorXd phi = Eigen::VectorXd::Zero(p.weights.cols());
  phi.head(p.features.ngram_dim) = prompt_features(p.features, prompt);
  phi[p.previous_block() + p.vocab.end_id()] = 1.0;
  phi[p.position_block() + 0] = 1.0;
  const double V = static_cast<double>(p.vocab.size());
  CHECK((g.row(y).transpose() - (1.0 - 1.0 / V) * phi).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((g.row(0).transpose() + (1.0 / V) * phi).cwiseAbs().maxCoeff() < 1e-12);

  CHECK(grad_logprob(p, prompt, {}).isZero(0.0));
}

TEST_CASE("gradients ignore the sampling temperature") {
  // The model is untempered; temperature only shapes sampling. A completion
  // drawn at any temperature gets the same log-probability and gradient.
  Rng rng(10);
  const PolicyParams p = random_params(tiny_vocab(), small_spec(), rng);
  for (double temp : {0.3, 1.0, 3.0}) {
    GenerationConfig gen;
    gen.temperature = temp;
    gen.max_tokens = 5;
    Rng r(11);
    const auto y = sample_completion(p, gen, "prompt", r);
    const double lp = static_cast<double>(model_of(p).logprob(p.weights, "prompt", y));
    double sum = 0;
    for (double v : PromptScorer(p, "prompt").sequence_log_probs(y)) sum += v;
    CHECK(std::abs(sum - lp) < 1e-12);
  }
}

TEST_CASE("snapshots are frozen copies") {
  Rng rng(12);
  PolicyParams theta = random_params(tiny_vocab(), small_spec(), rng);
  const ParamsSnapshot snap = snapshot(theta);
  const Eigen::VectorXd before = token_logprobs(*snap, "p", std::vector<TokenId>{1});
  theta.weights.array() += 1.0;
  theta.weights(0, 0) = 9.0;
  CHECK(token_logprobs(*snap, "p", std::vector<TokenId>{1}) == before);
  const ParamsSnapshot again = snapshot(*snap);
  CHECK(again->weights == snap->weights);
  CHECK(again.get() != snap.get());
}

TEST_CASE("reference equals the rollout policy at the first iteration") {
  TrainingSetup setup;
  setup.env.fixed_map = LakeMap::from_text("SFFF\nFHFH\nFFFH\nHFFG");
  TrainerConfig cfg;
  cfg.iterations = 1;
  cfg.group_size = 4;
  cfg.sampled_size = 4;
  const PolicyParams init = format_prior_params(default_vocabulary());
  const TrainResult r = train(setup, init, init, cfg);
  REQUIRE(r.history.size() == 1);
  CHECK(r.history[0].kl == 0.0);
}

TEST_CASE("vocabulary segmentation round-trips") {
  const Vocabulary& v = default_vocabulary();
  CHECK(v.size() == 24);
  const std::string text = "<think>go</think><action>left</action>";
  const auto ids = v.try_encode(text);
  REQUIRE(ids.has_value());
  CHECK(v.decode(*ids) == text);
  CHECK_FALSE(v.try_encode("\x01").has_value());
}
