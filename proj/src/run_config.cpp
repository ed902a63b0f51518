#include "msgrpo/run_config.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <limits>
#include <sstream>

#include <toml.hpp>

namespace msgrpo {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

std::string read_file(const std::filesystem::path& path, const std::string& what) {
  std::ifstream in(path, std::ios::binary);
  check(static_cast<bool>(in), what + ": cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

class Reader {
 public:
  Reader(const toml::node& node, std::string path) : node_(node), path_(std::move(path)) {}

  double real() const {
    auto v = node_.value<double>();
    check(v.has_value(), path_ + ": expected a number");
    return *v;
  }
  std::uint64_t count() const {
    auto v = node_.value<std::int64_t>();
    check(v.has_value() && node_.is_integer(), path_ + ": expected an integer");
    check(*v >= 0, path_ + ": must be >= 0");
    return static_cast<std::uint64_t>(*v);
  }
  std::string text() const {
    auto v = node_.value<std::string>();
    check(v.has_value(), path_ + ": expected a string");
    return *v;
  }
  std::vector<std::string> texts() const {
    const auto* arr = node_.as_array();
    check(arr != nullptr, path_ + ": expected an array of strings");
    std::vector<std::string> out;
    for (const auto& el : *arr) {
      auto v = el.value<std::string>();
      check(v.has_value(), path_ + ": expected an array of strings");
      out.push_back(*v);
    }
    return out;
  }

 private:
  const toml::node& node_;
  std::string path_;
};

void assign(RunConfig& c, const std::string& section, const std::string& key, const toml::node& node) {
  const std::string path = section + "." + key;
  const Reader r(node, path);
  TrainerConfig& t = c.trainer;
  if (section == "run") {
    if (key == "seed") c.seed = r.count();
    else if (key == "output_dir") c.output_dir = r.text();
    else if (key == "checkpoint_every") c.checkpoint_every = r.count();
    else if (key == "template") c.template_id = r.text();
    else if (key == "template_dir") c.template_dir = r.text();
    else throw std::invalid_argument(path + ": unknown key");
  } else if (section == "trainer") {
    if (key == "G") t.group_size = r.count();
    else if (key == "G_prime") t.sampled_size = r.count();
    else if (key == "T_ep") t.episode_temperature = r.real();
    else if (key == "eps_low") t.clip_low = r.real();
    else if (key == "eps_up") t.clip_high = r.real();
    else if (key == "beta") t.kl_weight = r.real();
    else if (key == "eta") t.learning_rate = r.real();
    else if (key == "M") t.iterations = r.count();
    else if (key == "inner_epochs") t.inner_epochs = r.count();
    else if (key == "workers") t.workers = r.count();
    else throw std::invalid_argument(path + ": unknown key");
  } else if (section == "env") {
    if (key == "variant") c.variant = r.text();
    else if (key == "hole_prob") c.hole_prob = r.real();
    else if (key == "map_seed") c.map_seed = r.count();
    else if (key == "map") c.map = r.text();
    else if (key == "map_file") c.map_file = r.text();
    else if (key == "step_cap") c.step_cap = r.count();
    else throw std::invalid_argument(path + ": unknown key");
  } else if (section == "generation") {
    if (key == "temperature") c.generation.temperature = r.real();
    else if (key == "top_k") c.generation.top_k = r.count();
    else if (key == "max_tokens") c.generation.max_tokens = r.count();
    else throw std::invalid_argument(path + ": unknown key");
  } else if (section == "policy") {
    if (key == "init") c.init = r.text();
    else if (key == "prior_strength") c.prior_strength = r.real();
    else throw std::invalid_argument(path + ": unknown key");
  } else if (section == "eval") {
    if (key == "suites") c.eval_suites = r.texts();
    else if (key == "episodes") c.eval_episodes = r.count();
    else if (key == "workers") c.eval_workers = r.count();
    else throw std::invalid_argument(path + ": unknown key");
  } else {
    throw std::invalid_argument(section + ": unknown section");
  }
}

// "a.b=value" -> value parsed as TOML when possible, else taken as a string.
void apply_override(toml::table& root, const std::string& override_text) {
  const auto eq = override_text.find('=');
  check(eq != std::string::npos, "--set " + override_text + ": expected section.key=value");
  const std::string path = override_text.substr(0, eq);
  const std::string value = override_text.substr(eq + 1);
  const auto dot = path.find('.');
  check(dot != std::string::npos && dot > 0 && dot + 1 < path.size() && path.find('.', dot + 1) == std::string::npos,
        "--set " + override_text + ": expected section.key=value");
  const std::string section = path.substr(0, dot);
  const std::string key = path.substr(dot + 1);

  toml::table* tbl = root[section].as_table();
  if (tbl == nullptr) {
    root.insert_or_assign(section, toml::table{});
    tbl = root[section].as_table();
  }
  try {
    toml::table parsed = toml::parse("v = " + value);
    tbl->insert_or_assign(key, *parsed.get("v"));
  } catch (const toml::parse_error&) {
    tbl->insert_or_assign(key, value);
  }
}

std::string map_rows(std::string text) {
  std::replace(text.begin(), text.end(), '/', '\n');
  return text;
}

}  // namespace

void RunConfig::validate() const {
  trainer.validate();
  check(trainer.seed == seed, "run.seed: trainer seed mismatch");
  check(!output_dir.empty(), "run.output_dir: must not be empty");
  check(checkpoint_every >= 1, "run.checkpoint_every: must be >= 1");
  check(seed <= static_cast<std::uint64_t>(std::numeric_limits<std::int64_t>::max()), "run.seed: too large");
  const int map_sources = (map_seed ? 1 : 0) + (map.empty() ? 0 : 1) + (map_file.empty() ? 0 : 1);
  check(map_sources <= 1, "env.map: give at most one of map_seed, map, map_file");
  check(std::isfinite(generation.temperature) && generation.temperature > 0.0,
        "generation.temperature: must be > 0");
  check(generation.max_tokens >= 1, "generation.max_tokens: must be >= 1");
  check(init == "format_prior" || init == "zeros", "policy.init: must be \"format_prior\" or \"zeros\"");
  check(std::isfinite(prior_strength), "policy.prior_strength: must be finite");
  check(eval_episodes >= 1, "eval.episodes: must be >= 1");
  check(eval_workers >= 1, "eval.workers: must be >= 1");
  for (const auto& s : eval_suites) {
    const auto& v = all_variants();
    check(s == "train" || std::find(v.begin(), v.end(), s) != v.end(), "eval.suites: unknown suite '" + s + "'");
  }
  env_config().validate();
}

EnvConfig RunConfig::env_config() const {
  EnvConfig e;
  e.variant = variant;
  e.hole_prob = hole_prob;
  e.step_cap = step_cap;
  try {
    if (map_seed) e.fixed_map = frozenlake_generate(*map_seed, 4, hole_prob);
    if (!map.empty()) e.fixed_map = LakeMap::from_text(map_rows(map));
    if (!map_file.empty()) e.fixed_map = LakeMap::from_text(read_file(map_file, "env.map_file"));
  } catch (const ContractViolation& err) {
    throw std::invalid_argument(std::string("env.map: ") + err.what());
  }
  return e;
}

TrainingSetup RunConfig::training_setup() const {
  TrainingSetup s;
  s.env = env_config();
  s.generation = generation;
  if (!template_dir.empty()) {
    s.prompt = load_template(template_dir, template_id);
  } else {
    check(template_id == canonical_template().id(), "run.template: unknown template '" + template_id + "'");
    s.prompt = canonical_template();
  }
  return s;
}

PolicyParams RunConfig::initial_params() const {
  if (init == "zeros") return PolicyParams::zeros(default_vocabulary());
  return format_prior_params(default_vocabulary(), {}, prior_strength);
}

RunConfig parse_run_config(std::string_view toml_text, const std::vector<std::string>& overrides) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw std::invalid_argument(msg.str());
  }
  for (const auto& o : overrides) apply_override(root, o);

  RunConfig c;
  for (auto&& [section, node] : root) {
    const std::string name(section.str());
    const auto* tbl = node.as_table();
    check(tbl != nullptr, name + ": expected a [" + name + "] section");
    for (auto&& [key, value] : *tbl) assign(c, name, std::string(key.str()), value);
  }
  c.trainer.seed = c.seed;
  c.validate();
  return c;
}

RunConfig load_run_config(const std::filesystem::path& path, const std::vector<std::string>& overrides) {
  return parse_run_config(read_file(path, "config"), overrides);
}

std::string to_toml(const RunConfig& c) {
  auto i64 = [](std::uint64_t v) { return static_cast<std::int64_t>(v); };
  const TrainerConfig& t = c.trainer;
  toml::table env{{"variant", c.variant}, {"hole_prob", c.hole_prob}, {"step_cap", i64(c.step_cap)}};
  if (c.map_seed) env.insert("map_seed", i64(*c.map_seed));
  if (!c.map.empty()) env.insert("map", c.map);
  if (!c.map_file.empty()) env.insert("map_file", c.map_file);
  toml::array suites;
  for (const auto& s : c.eval_suites) suites.push_back(s);

  toml::table root{
      {"run", toml::table{{"seed", i64(c.seed)},
                          {"output_dir", c.output_dir},
                          {"checkpoint_every", i64(c.checkpoint_every)},
                          {"template", c.template_id},
                          {"template_dir", c.template_dir}}},
      {"trainer", toml::table{{"G", i64(t.group_size)},
                              {"G_prime", i64(t.sampled_size)},
                              {"T_ep", t.episode_temperature},
                              {"eps_low", t.clip_low},
                              {"eps_up", t.clip_high},
                              {"beta", t.kl_weight},
                              {"eta", t.learning_rate},
                              {"M", i64(t.iterations)},
                              {"inner_epochs", i64(t.inner_epochs)},
                              {"workers", i64(t.workers)}}},
      {"env", env},
      {"generation", toml::table{{"temperature", c.generation.temperature},
                                 {"top_k", i64(c.generation.top_k)},
                                 {"max_tokens", i64(c.generation.max_tokens)}}},
      {"policy", toml::table{{"init", c.init}, {"prior_strength", c.prior_strength}}},
      {"eval", toml::table{{"suites", suites},
                           {"episodes", i64(c.eval_episodes)},
                           {"workers", i64(c.eval_workers)}}},
  };
  std::ostringstream out;
  out << root << "\n";
  return out.str();
}

}  // namespace msgrpo
