#pragma once

// Evaluation-only bridge to a remote chat-completions endpoint. The remote
// model is a black box that returns text, so the policy built here has no
// token log-probabilities and the trainer refuses it.

#include <atomic>
#include <chrono>
#include <filesystem>
#include <functional>
#include <memory>
#include <stdexcept>
#include <string>

#include "msgrpo/lap_policy.hpp"
#include "msgrpo/tmsg.hpp"

namespace msgrpo {

inline constexpr std::size_t kMaxAdapterTokens = 4096;
inline constexpr std::size_t kMaxInFlightLimit = 64;

struct EndpointConfig {
  std::string base_url;        // scheme://host[:port][/prefix]; requests go to {prefix}/chat/completions
  std::string model = "default";
  std::string auth_env;        // name of the variable holding the bearer token; empty sends none
  double timeout_s = 30.0;
  std::size_t max_tokens = 512;
  double temperature = 0.0;
  std::size_t retries = 3;     // extra attempts after the first
  std::size_t backoff_ms = 200;  // doubled after every failed attempt
  std::size_t max_in_flight = 4;

  /// Throws std::invalid_argument naming the offending field.
  void validate() const;
};

/// Reads an [endpoint] table (or top-level keys) from a TOML file.
EndpointConfig load_endpoint_config(const std::filesystem::path& path);
EndpointConfig parse_endpoint_config(std::string_view toml_text);

/// Connection failure, timeout or non-success status, after all retries.
class TransportError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A 2xx response whose body is not a chat completion.
class ProtocolError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Receives one line per attempt. Lines never contain the auth token.
using AdapterLogSink = std::function<void(const std::string&)>;

class EndpointClient {
 public:
  explicit EndpointClient(EndpointConfig config, AdapterLogSink log = {});
  ~EndpointClient();
  EndpointClient(const EndpointClient&) = delete;
  EndpointClient& operator=(const EndpointClient&) = delete;

  /// One single-turn request carrying the whole prompt. `tag` is sent as the
  /// X-Request-Tag header so concurrent episodes can be told apart.
  std::string complete(std::string_view prompt, std::string_view tag = {}) const;

  const EndpointConfig& config() const { return config_; }
  std::size_t attempts() const { return attempts_.load(); }

 private:
  struct Pool;

  EndpointConfig config_;
  AdapterLogSink log_;
  std::string host_;    // scheme://host:port
  std::string prefix_;  // path prefix without trailing slash
  std::unique_ptr<Pool> pool_;
  mutable std::atomic<std::size_t> attempts_{0};
};

/// A LAP whose language model is the remote endpoint. Failed requests
/// become an empty completion (parsed as no action) and are counted.
class AdapterPolicy final : public LearnerPolicy {
 public:
  explicit AdapterPolicy(EndpointConfig config, PromptTemplate tmpl = canonical_template(), AdapterLogSink log = {});

  Decision act(const Observation& observation, Rng& rng, const StepContext& ctx) const override;

  std::size_t requests() const { return requests_.load(); }
  std::size_t transport_errors() const { return transport_errors_.load(); }
  std::size_t protocol_errors() const { return protocol_errors_.load(); }
  const EndpointClient& client() const { return client_; }

 private:
  EndpointClient client_;
  PromptTemplate tmpl_;
  mutable std::atomic<std::size_t> requests_{0};
  mutable std::atomic<std::size_t> transport_errors_{0};
  mutable std::atomic<std::size_t> protocol_errors_{0};
};

std::unique_ptr<AdapterPolicy> as_policy(const EndpointConfig& config, PromptTemplate tmpl = canonical_template(),
                                         AdapterLogSink log = {});

}  // namespace msgrpo
