#pragma once

// Line-delimited JSON run logs and their schema.
//
//   {"schema_version":1,"kind":"iteration_metrics","seq":7,"payload":{...}}
//
// `seq` is a per-log counter standing in for a timestamp, so two runs of the
// same configuration produce byte-identical logs.

#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "msgrpo/oracles.hpp"
#include "msgrpo/trainer.hpp"

namespace msgrpo {

using Json = nlohmann::json;

inline constexpr int kLogSchemaVersion = 1;

enum class RecordKind { iteration_metrics, episode, eval_report, checkpoint_ref };

std::string_view to_string(RecordKind kind);
RecordKind record_kind_from_string(std::string_view name);  // throws std::invalid_argument

struct RunLogRecord {
  RecordKind kind = RecordKind::iteration_metrics;
  std::uint64_t seq = 0;
  Json payload = Json::object();

  Json to_json() const;
  /// Validates against the schema; throws std::invalid_argument.
  static RunLogRecord from_json(const Json& j);
};

/// Throws std::invalid_argument describing the first schema violation.
void validate_record(const Json& j);

Json to_json(const IterationMetrics& m);
Json to_json(const EvalMetrics& m, std::string_view checkpoint_id);
Json to_json(const ComparisonReport& r);
ComparisonReport comparison_from_json(const Json& j);
Json to_json(const EpisodeRecord& episode, std::string_view variant);
EpisodeRecord episode_from_json(const Json& j);

/// Appends records to a file, one per line, flushing after each.
class RunLogWriter {
 public:
  /// `next_seq` continues an existing log (resume).
  RunLogWriter(const std::filesystem::path& path, std::uint64_t next_seq = 0, bool append = false);

  void write(RecordKind kind, Json payload);
  std::uint64_t next_seq() const { return seq_; }

 private:
  std::ofstream out_;
  std::uint64_t seq_;
};

/// Reads and validates every line of a log.
std::vector<RunLogRecord> read_run_log(const std::filesystem::path& path);

}  // namespace msgrpo
