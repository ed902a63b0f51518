#include "msgrpo/checkpoint.hpp"

#include <openssl/evp.h>

#include <fstream>
#include <sstream>

#include <json.hpp>

namespace msgrpo {

namespace {

using Json = nlohmann::json;

std::string read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("checkpoint: cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

}  // namespace

std::string sha256_hex(std::string_view bytes) {
  unsigned char digest[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), digest, &len, EVP_sha256(), nullptr) != 1)
    throw std::runtime_error("sha256: digest failed");
  static constexpr char kHex[] = "0123456789abcdef";
  std::string out;
  for (unsigned int i = 0; i < len; ++i) {
    out += kHex[digest[i] >> 4];
    out += kHex[digest[i] & 0xF];
  }
  return out;
}

std::string file_sha256(const std::filesystem::path& path) { return sha256_hex(read_bytes(path)); }

std::string serialize_checkpoint(const Checkpoint& c) {
  const PolicyParams& p = c.params;
  std::vector<double> data;
  data.reserve(static_cast<std::size_t>(p.weights.size()));
  for (Eigen::Index r = 0; r < p.weights.rows(); ++r)
    for (Eigen::Index k = 0; k < p.weights.cols(); ++k) data.push_back(p.weights(r, k));
  const FeatureSpec& f = p.features;
  Json j{{"schema_version", kCheckpointSchemaVersion},
         {"iteration", c.iteration},
         {"vocabulary", p.vocab.tokens()},
         {"features",
          {{"id", f.id},
           {"ngram_order", f.ngram_order},
           {"ngram_dim", f.ngram_dim},
           {"ngram_scale", f.ngram_scale},
           {"position_buckets", f.position_buckets},
           {"position_horizon", f.position_horizon}}},
         {"generation",
          {{"temperature", c.generation.temperature},
           {"top_k", c.generation.top_k},
           {"max_tokens", c.generation.max_tokens}}},
         {"template", {{"id", c.prompt.id()}, {"text", c.prompt.text()}}},
         {"weights", {{"rows", p.weights.rows()}, {"cols", p.weights.cols()}, {"data", data}}}};
  return j.dump(1) + "\n";
}

Checkpoint deserialize_checkpoint(std::string_view text) {
  try {
    const Json j = Json::parse(text);
    if (j.at("schema_version").get<int>() != kCheckpointSchemaVersion)
      throw std::invalid_argument("checkpoint: unsupported schema_version");
    FeatureSpec f;
    const Json& fj = j.at("features");
    f.id = fj.at("id").get<std::string>();
    f.ngram_order = fj.at("ngram_order").get<int>();
    f.ngram_dim = fj.at("ngram_dim").get<int>();
    f.ngram_scale = fj.at("ngram_scale").get<double>();
    f.position_buckets = fj.at("position_buckets").get<int>();
    f.position_horizon = fj.at("position_horizon").get<int>();
    if (f.id != FeatureSpec{}.id) throw std::invalid_argument("checkpoint: unknown feature map '" + f.id + "'");

    Checkpoint c;
    c.iteration = j.at("iteration").get<std::size_t>();
    c.params = PolicyParams::zeros(Vocabulary(j.at("vocabulary").get<std::vector<std::string>>()), f);
    const Json& w = j.at("weights");
    const auto rows = w.at("rows").get<Eigen::Index>();
    const auto cols = w.at("cols").get<Eigen::Index>();
    const auto data = w.at("data").get<std::vector<double>>();
    if (rows != c.params.weights.rows() || cols != c.params.weights.cols() ||
        data.size() != static_cast<std::size_t>(rows * cols))
      throw std::invalid_argument("checkpoint: weight shape does not match vocabulary and features");
    for (Eigen::Index r = 0; r < rows; ++r)
      for (Eigen::Index k = 0; k < cols; ++k) c.params.weights(r, k) = data[static_cast<std::size_t>(r * cols + k)];
    if (!c.params.all_finite()) throw std::invalid_argument("checkpoint: non-finite weights");
    const Json& g = j.at("generation");
    c.generation.temperature = g.at("temperature").get<double>();
    c.generation.top_k = g.at("top_k").get<std::size_t>();
    c.generation.max_tokens = g.at("max_tokens").get<std::size_t>();
    c.prompt = PromptTemplate(j.at("template").at("id").get<std::string>(), j.at("template").at("text").get<std::string>());
    return c;
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("checkpoint: ") + e.what());
  } catch (const ContractViolation& e) {
    throw std::invalid_argument(std::string("checkpoint: ") + e.what());
  }
}

std::string save_checkpoint(const Checkpoint& ckpt, const std::filesystem::path& path) {
  const std::string text = serialize_checkpoint(ckpt);
  const auto tmp = std::filesystem::path(path.string() + ".tmp");
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("checkpoint: cannot write " + path.string());
    out << text;
    if (!out.flush()) throw std::runtime_error("checkpoint: cannot write " + path.string());
  }
  std::filesystem::rename(tmp, path);
  return sha256_hex(text);
}

Checkpoint load_checkpoint(const std::filesystem::path& path, std::string_view expected_sha256) {
  const std::string text = read_bytes(path);
  if (!expected_sha256.empty() && sha256_hex(text) != expected_sha256)
    throw std::invalid_argument("checkpoint: content hash mismatch for " + path.string());
  return deserialize_checkpoint(text);
}

}  // namespace msgrpo
