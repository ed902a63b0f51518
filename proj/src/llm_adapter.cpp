#include "msgrpo/llm_adapter.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <semaphore>
#include <sstream>
#include <thread>

#include <httplib.h>
#include <json.hpp>
#include <toml.hpp>

namespace msgrpo {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

bool transient_status(int status) { return status == 408 || status == 429 || status >= 500; }

template <typename T>
T required_value(const toml::node& node, std::string_view key) {
  if (auto v = node.value<T>()) return *v;
  throw std::invalid_argument("endpoint." + std::string(key) + ": wrong type");
}

std::size_t count_value(const toml::node& node, std::string_view key) {
  const auto v = required_value<std::int64_t>(node, key);
  check(v >= 0, "endpoint." + std::string(key) + ": must be >= 0");
  return static_cast<std::size_t>(v);
}

}  // namespace

void EndpointConfig::validate() const {
  check(base_url.starts_with("http://") || base_url.starts_with("https://"),
        "endpoint.base_url: must start with http:// or https://");
  check(!model.empty(), "endpoint.model: must not be empty");
  check(std::isfinite(timeout_s) && timeout_s > 0.0, "endpoint.timeout_s: must be > 0");
  check(max_tokens >= 1 && max_tokens <= kMaxAdapterTokens, "endpoint.max_tokens: must lie in [1, 4096]");
  check(std::isfinite(temperature) && temperature >= 0.0, "endpoint.temperature: must be >= 0");
  check(max_in_flight >= 1 && max_in_flight <= kMaxInFlightLimit, "endpoint.max_in_flight: must lie in [1, 64]");
}

EndpointConfig parse_endpoint_config(std::string_view toml_text) {
  toml::table root;
  try {
    root = toml::parse(toml_text);
  } catch (const toml::parse_error& e) {
    throw std::invalid_argument(std::string("endpoint: ") + std::string(e.description()));
  }
  const toml::table* tbl = &root;
  if (auto* nested = root["endpoint"].as_table()) tbl = nested;

  EndpointConfig c;
  for (auto&& [key, node] : *tbl) {
    const std::string k(key.str());
    if (k == "base_url") c.base_url = required_value<std::string>(node, k);
    else if (k == "model") c.model = required_value<std::string>(node, k);
    else if (k == "auth_env") c.auth_env = required_value<std::string>(node, k);
    else if (k == "timeout_s") c.timeout_s = required_value<double>(node, k);
    else if (k == "max_tokens") c.max_tokens = count_value(node, k);
    else if (k == "temperature") c.temperature = required_value<double>(node, k);
    else if (k == "retries") c.retries = count_value(node, k);
    else if (k == "backoff_ms") c.backoff_ms = count_value(node, k);
    else if (k == "max_in_flight") c.max_in_flight = count_value(node, k);
    else throw std::invalid_argument("endpoint." + k + ": unknown key");
  }
  c.validate();
  return c;
}

EndpointConfig load_endpoint_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("endpoint: cannot read " + path.string());
  std::stringstream ss;
  ss << in.rdbuf();
  return parse_endpoint_config(ss.str());
}

struct EndpointClient::Pool {
  explicit Pool(std::size_t n) : slots(static_cast<std::ptrdiff_t>(n)) {}
  std::counting_semaphore<kMaxInFlightLimit> slots;
};

EndpointClient::EndpointClient(EndpointConfig config, AdapterLogSink log)
    : config_(std::move(config)), log_(std::move(log)) {
  config_.validate();
  const auto scheme_end = config_.base_url.find("://") + 3;
  const auto path_start = config_.base_url.find('/', scheme_end);
  host_ = config_.base_url.substr(0, path_start);
  prefix_ = path_start == std::string::npos ? "" : config_.base_url.substr(path_start);
  while (!prefix_.empty() && prefix_.back() == '/') prefix_.pop_back();
  pool_ = std::make_unique<Pool>(config_.max_in_flight);
}

EndpointClient::~EndpointClient() = default;

std::string EndpointClient::complete(std::string_view prompt, std::string_view tag) const {
  nlohmann::json body = {
      {"model", config_.model},
      {"messages", nlohmann::json::array({{{"role", "user"}, {"content", std::string(prompt)}}})},
      {"max_tokens", config_.max_tokens},
      {"temperature", config_.temperature},
  };
  const std::string payload = body.dump();
  httplib::Headers headers;
  if (!tag.empty()) headers.emplace("X-Request-Tag", std::string(tag));
  if (!config_.auth_env.empty()) {
    if (const char* token = std::getenv(config_.auth_env.c_str()); token && *token)
      headers.emplace("Authorization", std::string("Bearer ") + token);
  }

  const auto timeout = std::chrono::duration<double>(config_.timeout_s);
  const auto timeout_us = std::chrono::duration_cast<std::chrono::microseconds>(timeout);
  auto say = [&](std::size_t attempt, const std::string& outcome) {
    if (log_) log_("adapter tag=" + std::string(tag) + " attempt=" + std::to_string(attempt) + " " + outcome);
  };

  std::string last_error;
  for (std::size_t attempt = 1; attempt <= config_.retries + 1; ++attempt) {
    if (attempt > 1) {
      const auto wait = std::chrono::milliseconds(config_.backoff_ms << std::min<std::size_t>(attempt - 2, 20));
      std::this_thread::sleep_for(wait);
    }
    ++attempts_;
    httplib::Result res;
    {
      pool_->slots.acquire();
      struct Release {
        Pool& p;
        ~Release() { p.slots.release(); }
      } release{*pool_};
      httplib::Client cli(host_);
      cli.set_connection_timeout(timeout_us);
      cli.set_read_timeout(timeout_us);
      cli.set_write_timeout(timeout_us);
      res = cli.Post(prefix_ + "/chat/completions", headers, payload, "application/json");
    }
    if (!res) {
      last_error = "transport failure: " + httplib::to_string(res.error());
      say(attempt, last_error);
      continue;
    }
    if (res->status < 200 || res->status >= 300) {
      last_error = "status " + std::to_string(res->status);
      say(attempt, last_error);
      if (transient_status(res->status)) continue;
      throw TransportError("endpoint returned " + last_error);
    }
    try {
      const auto j = nlohmann::json::parse(res->body);
      const auto& content = j.at("choices").at(0).at("message").at("content");
      if (!content.is_string()) throw ProtocolError("message content is not a string");
      say(attempt, "status " + std::to_string(res->status) + " ok");
      return content.get<std::string>();
    } catch (const nlohmann::json::exception& e) {
      say(attempt, "malformed body");
      throw ProtocolError(std::string("malformed chat completion: ") + e.what());
    } catch (const ProtocolError&) {
      say(attempt, "malformed body");
      throw;
    }
  }
  throw TransportError("endpoint failed after " + std::to_string(config_.retries + 1) + " attempts: " + last_error);
}

AdapterPolicy::AdapterPolicy(EndpointConfig config, PromptTemplate tmpl, AdapterLogSink log)
    : client_(std::move(config), std::move(log)), tmpl_(std::move(tmpl)) {}

Decision AdapterPolicy::act(const Observation& observation, Rng&, const StepContext& ctx) const {
  Decision d;
  d.prompt = build_prompt(tmpl_, observation.text);
  ++requests_;
  try {
    d.completion_text =
        client_.complete(d.prompt, "ep" + std::to_string(ctx.episode_seed) + "-t" + std::to_string(ctx.step_index));
  } catch (const ProtocolError&) {
    ++protocol_errors_;
  } catch (const TransportError&) {
    ++transport_errors_;
  }
  d.completion_length = approximate_token_count(d.completion_text);
  d.parsed = parse_action(d.completion_text);
  return d;
}

std::unique_ptr<AdapterPolicy> as_policy(const EndpointConfig& config, PromptTemplate tmpl, AdapterLogSink log) {
  return std::make_unique<AdapterPolicy>(config, std::move(tmpl), std::move(log));
}

}  // namespace msgrpo
