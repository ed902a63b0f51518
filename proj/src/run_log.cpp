#include "msgrpo/run_log.hpp"

#include <utility>

namespace msgrpo {

namespace {

void check(bool ok, const std::string& message) {
  if (!ok) throw std::invalid_argument(message);
}

enum class Field { number, integer, boolean, string, array, object };

bool has_type(const Json& v, Field f) {
  switch (f) {
    case Field::number: return v.is_number();
    case Field::integer: return v.is_number_integer();
    case Field::boolean: return v.is_boolean();
    case Field::string: return v.is_string();
    case Field::array: return v.is_array();
    case Field::object: return v.is_object();
  }
  return false;
}

using Schema = std::vector<std::pair<const char*, Field>>;

const Schema& payload_schema(RecordKind kind) {
  static const Schema iteration{{"iteration", Field::integer},    {"mean_composite", Field::number},
                                {"std_composite", Field::number}, {"mean_env_reward", Field::number},
                                {"success_rate", Field::number},  {"mean_abs_advantage", Field::number},
                                {"degenerate", Field::boolean},   {"sampled", Field::array},
                                {"objective", Field::number},     {"kl", Field::number},
                                {"grad_norm", Field::number},     {"skipped_episodes", Field::integer}};
  static const Schema episode{{"variant", Field::string},          {"seed", Field::integer},
                              {"terminal_reason", Field::string},  {"composite_reward", Field::number},
                              {"total_env_reward", Field::number}, {"final_observation", Field::string},
                              {"steps", Field::array}};
  static const Schema eval{{"suite_id", Field::string},     {"checkpoint_id", Field::string},
                           {"episodes", Field::integer},    {"mean_reward", Field::number},
                           {"std_reward", Field::number},   {"success_rate", Field::number},
                           {"invalid_rate", Field::number}, {"mean_length", Field::number},
                           {"rewards", Field::array}};
  static const Schema checkpoint{{"iteration", Field::integer}, {"path", Field::string}, {"sha256", Field::string}};
  switch (kind) {
    case RecordKind::iteration_metrics: return iteration;
    case RecordKind::episode: return episode;
    case RecordKind::eval_report: return eval;
    case RecordKind::checkpoint_ref: return checkpoint;
  }
  return iteration;
}

Json action_json(const Action& a) { return a ? Json(std::string(to_string(*a))) : Json(nullptr); }

Action action_from(const Json& j) {
  if (j.is_null()) return kNoAction;
  auto d = direction_from_word(j.get<std::string>());
  check(d.has_value(), "episode: unknown action '" + j.get<std::string>() + "'");
  return d;
}

}  // namespace

std::string_view to_string(RecordKind kind) {
  switch (kind) {
    case RecordKind::iteration_metrics: return "iteration_metrics";
    case RecordKind::episode: return "episode";
    case RecordKind::eval_report: return "eval_report";
    case RecordKind::checkpoint_ref: return "checkpoint_ref";
  }
  return "?";
}

RecordKind record_kind_from_string(std::string_view name) {
  for (RecordKind k : {RecordKind::iteration_metrics, RecordKind::episode, RecordKind::eval_report,
                       RecordKind::checkpoint_ref}) {
    if (to_string(k) == name) return k;
  }
  throw std::invalid_argument("log record: unknown kind '" + std::string(name) + "'");
}

void validate_record(const Json& j) {
  check(j.is_object(), "log record: not an object");
  for (const char* key : {"schema_version", "kind", "seq", "payload"})
    check(j.contains(key), std::string("log record: missing '") + key + "'");
  check(j.size() == 4, "log record: unexpected top-level field");
  check(j["schema_version"].is_number_integer() && j["schema_version"].get<int>() == kLogSchemaVersion,
        "log record: unsupported schema_version");
  check(j["seq"].is_number_unsigned() || (j["seq"].is_number_integer() && j["seq"].get<std::int64_t>() >= 0),
        "log record: seq must be a non-negative integer");
  check(j["kind"].is_string(), "log record: kind must be a string");
  const RecordKind kind = record_kind_from_string(j["kind"].get<std::string>());
  const Json& p = j["payload"];
  check(p.is_object(), "log record: payload must be an object");
  for (const auto& [key, type] : payload_schema(kind)) {
    check(p.contains(key), std::string("log record: ") + std::string(to_string(kind)) + " payload lacks '" + key + "'");
    check(has_type(p[key], type), std::string("log record: ") + std::string(to_string(kind)) + "." + key + " has the wrong type");
  }
}

Json RunLogRecord::to_json() const {
  return Json{{"schema_version", kLogSchemaVersion}, {"kind", std::string(to_string(kind))}, {"seq", seq}, {"payload", payload}};
}

RunLogRecord RunLogRecord::from_json(const Json& j) {
  validate_record(j);
  return {record_kind_from_string(j["kind"].get<std::string>()), j["seq"].get<std::uint64_t>(), j["payload"]};
}

Json to_json(const IterationMetrics& m) {
  return Json{{"iteration", m.iteration},
              {"mean_composite", m.mean_composite},
              {"std_composite", m.std_composite},
              {"mean_env_reward", m.mean_env_reward},
              {"success_rate", m.success_rate},
              {"mean_abs_advantage", m.mean_abs_advantage},
              {"mean_tokens_per_step", m.mean_tokens_per_step},
              {"degenerate", m.degenerate},
              {"sampled", m.sampled},
              {"objective", m.objective},
              {"kl", m.kl},
              {"grad_norm", m.grad_norm},
              {"skipped_episodes", m.skipped_episodes}};
}

Json to_json(const EvalMetrics& m, std::string_view checkpoint_id) {
  return Json{{"suite_id", m.suite_id},         {"checkpoint_id", std::string(checkpoint_id)},
              {"episodes", m.episodes},         {"mean_reward", m.mean_reward},
              {"std_reward", m.std_reward},     {"success_rate", m.success_rate},
              {"invalid_rate", m.invalid_rate}, {"mean_length", m.mean_length},
              {"rewards", m.rewards}};
}

Json to_json(const ComparisonReport& r) {
  return Json{{"suite_id", r.suite_id},         {"initial_mean", r.initial_mean}, {"initial_std", r.initial_std},
              {"final_mean", r.final_mean},     {"final_std", r.final_std},     {"delta_mean", r.delta_mean},
              {"delta_std", r.delta_std}};
}

ComparisonReport comparison_from_json(const Json& j) {
  ComparisonReport r;
  r.suite_id = j.at("suite_id").get<std::string>();
  r.initial_mean = j.at("initial_mean").get<double>();
  r.initial_std = j.at("initial_std").get<double>();
  r.final_mean = j.at("final_mean").get<double>();
  r.final_std = j.at("final_std").get<double>();
  r.delta_mean = j.at("delta_mean").get<double>();
  r.delta_std = j.at("delta_std").get<double>();
  return r;
}

Json to_json(const EpisodeRecord& ep, std::string_view variant) {
  Json steps = Json::array();
  for (const StepRecord& s : ep.steps) {
    steps.push_back(Json{{"observation", s.observation},
                         {"completion_text", s.completion_text},
                         {"completion_tokens", s.completion_tokens},
                         {"completion_length", s.completion_length},
                         {"parsed_action", action_json(s.parsed_action.value)},
                         {"applied_action", action_json(s.applied_action)},
                         {"env_reward", s.env_reward},
                         {"invalid_penalty", s.invalid_penalty},
                         {"format", Json{{"length", s.format.length},
                                         {"structure", s.format.structure},
                                         {"extra_text", s.format.extra_text}}}});
  }
  return Json{{"variant", std::string(variant)},
              {"seed", ep.seed},
              {"terminal_reason", std::string(to_string(ep.terminal_reason))},
              {"composite_reward", ep.composite_reward},
              {"total_env_reward", ep.total_env_reward},
              {"final_observation", ep.final_observation},
              {"steps", steps}};
}

EpisodeRecord episode_from_json(const Json& j) {
  EpisodeRecord ep;
  try {
    ep.seed = j.at("seed").get<std::uint64_t>();
    ep.terminal_reason = terminal_reason_from_string(j.at("terminal_reason").get<std::string>());
    ep.composite_reward = j.at("composite_reward").get<double>();
    ep.total_env_reward = j.at("total_env_reward").get<double>();
    ep.final_observation = j.at("final_observation").get<std::string>();
    for (const Json& s : j.at("steps")) {
      StepRecord r;
      r.observation = s.at("observation").get<std::string>();
      r.completion_text = s.at("completion_text").get<std::string>();
      r.completion_tokens = s.at("completion_tokens").get<std::vector<TokenId>>();
      r.completion_length = s.at("completion_length").get<std::size_t>();
      r.parsed_action = parse_action(r.completion_text);
      r.applied_action = action_from(s.at("applied_action"));
      r.env_reward = s.at("env_reward").get<double>();
      r.invalid_penalty = s.at("invalid_penalty").get<double>();
      const Json& f = s.at("format");
      r.format = {f.at("length").get<double>(), f.at("structure").get<double>(), f.at("extra_text").get<double>()};
      check(action_from(s.at("parsed_action")) == r.parsed_action.value, "episode: parsed_action disagrees with text");
      ep.steps.push_back(std::move(r));
    }
  } catch (const Json::exception& e) {
    throw std::invalid_argument(std::string("episode: ") + e.what());
  }
  return ep;
}

RunLogWriter::RunLogWriter(const std::filesystem::path& path, std::uint64_t next_seq, bool append)
    : out_(path, append ? std::ios::app | std::ios::binary : std::ios::trunc | std::ios::binary), seq_(next_seq) {
  if (!out_) throw std::runtime_error("run log: cannot open " + path.string());
}

void RunLogWriter::write(RecordKind kind, Json payload) {
  const RunLogRecord rec{kind, seq_++, std::move(payload)};
  const Json j = rec.to_json();
  validate_record(j);
  out_ << j.dump() << '\n';
  out_.flush();
}

std::vector<RunLogRecord> read_run_log(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("run log: cannot read " + path.string());
  std::vector<RunLogRecord> out;
  std::size_t line_no = 0;
  for (std::string line; std::getline(in, line);) {
    ++line_no;
    if (line.empty()) continue;
    try {
      out.push_back(RunLogRecord::from_json(Json::parse(line)));
    } catch (const Json::exception& e) {
      throw std::invalid_argument("run log line " + std::to_string(line_no) + ": " + e.what());
    } catch (const std::invalid_argument& e) {
      throw std::invalid_argument("run log line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  return out;
}

}  // namespace msgrpo
