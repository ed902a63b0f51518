#pragma once

// The train / eval / play / oracle commands, callable without a process
// boundary. Each returns an exit status: 0 success, 1 usage or configuration
// error, 2 runtime failure.

#include <cstdint>
#include <optional>
#include <ostream>
#include <string>
#include <vector>

namespace msgrpo {

inline constexpr int kExitOk = 0;
inline constexpr int kExitUsage = 1;
inline constexpr int kExitRuntime = 2;

struct TrainOptions {
  std::string config_path;
  std::vector<std::string> overrides;  // "section.key=value"
  std::string resume_dir;              // continue this run from its latest checkpoint
  std::size_t stop_after = 0;          // testing aid: stop once this iteration is logged
  bool quiet = false;
};

struct EvalOptions {
  std::string checkpoint;
  std::string baseline;  // second checkpoint; prints initial/final/delta rows
  std::string endpoint;  // endpoint TOML instead of a checkpoint
  std::vector<std::string> suites{"all"};
  std::size_t episodes = 0;  // 0 keeps the suite default
  std::string map;           // fixed map for lake suites, rows separated by '/'
  std::size_t workers = 1;
  std::string log_path;  // append eval_report records here
};

struct PlayOptions {
  std::string variant = "frozenlake-not-slippery";
  std::uint64_t seed = 0;
  std::string policy = "random";  // vi | random | checkpoint:<path> | endpoint:<toml>
  std::string map;
  std::optional<std::uint64_t> map_seed;
  std::size_t step_cap = 0;
  std::string episode_log;  // replay the first episode record of this log instead
  std::string write_log;    // write the played episode as a log record
};

struct OracleOptions {
  std::string variant = "frozenlake-not-slippery";
  std::uint64_t map_seed = 0;
  double hole_prob = 0.2;
  std::string map;
};

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err);
int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err);
int cmd_play(const PlayOptions& options, std::ostream& out, std::ostream& err);
int cmd_oracle(const OracleOptions& options, std::ostream& out, std::ostream& err);

}  // namespace msgrpo
