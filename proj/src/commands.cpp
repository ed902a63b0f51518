#include "msgrpo/commands.hpp"

#include <algorithm>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <sstream>

#include "msgrpo/checkpoint.hpp"
#include "msgrpo/llm_adapter.hpp"
#include "msgrpo/oracles.hpp"
#include "msgrpo/run_config.hpp"
#include "msgrpo/run_log.hpp"

namespace msgrpo {

namespace fs = std::filesystem;

namespace {

struct UsageError : std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

template <typename Fn>
int guarded(std::ostream& err, Fn&& fn) {
  try {
    return fn();
  } catch (const TrainingDiverged& e) {
    err << "error: training diverged: " << e.what() << "\n";
    return kExitRuntime;
  } catch (const std::invalid_argument& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const ContractViolation& e) {
    err << "error: " << e.what() << "\n";
    return kExitUsage;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return kExitRuntime;
  }
}

std::string checkpoint_name(std::size_t iteration) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "iter_%06zu", iteration);
  return buf;
}

std::string read_text(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  std::ostringstream buf;
  buf << in.rdbuf();
  return buf.str();
}

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out || !(out << text) || !out.flush()) throw std::runtime_error("cannot write " + path.string());
}

std::optional<LakeMap> inline_map(const std::string& text) {
  if (text.empty()) return std::nullopt;
  std::string rows = text;
  std::replace(rows.begin(), rows.end(), '/', '\n');
  return LakeMap::from_text(rows);
}

std::vector<std::string> expand_suites(const std::vector<std::string>& requested) {
  std::vector<std::string> out;
  for (const auto& s : requested) {
    if (s == "all") {
      out.insert(out.end(), all_variants().begin(), all_variants().end());
    } else {
      const auto& v = all_variants();
      if (std::find(v.begin(), v.end(), s) == v.end()) throw std::invalid_argument("--suite: unknown suite '" + s + "'");
      out.push_back(s);
    }
  }
  return out;
}

/// A suite over the training environment itself ("train") or a standard
/// variant suite.
EvalSuite make_suite(const std::string& id, std::size_t episodes, const EnvConfig& train_env) {
  if (id != "train") return standard_suite(id, episodes);
  EvalSuite suite{id, train_env, {}};
  for (std::size_t i = 0; i < episodes; ++i) suite.seeds.push_back(mix_seed(stable_hash(id), i));
  return suite;
}

void print_step(std::ostream& out, std::size_t index, const StepRecord& s) {
  out << "--- step " << index << " ---\n" << s.observation;
  out << "completion: " << s.completion_text << "\n";
  out << "action: " << action_to_string(s.applied_action) << (s.parsed_action.valid() ? "" : " (unparseable)") << "\n";
  out << std::setprecision(6) << "reward: " << s.total() << " (env " << s.env_reward << ", invalid " << s.invalid_penalty
      << ", format " << s.format.total() << ")\n";
}

void print_episode(std::ostream& out, const EpisodeRecord& ep, std::string_view variant) {
  out << "episode " << variant << " seed " << ep.seed << "\n";
  for (std::size_t i = 0; i < ep.steps.size(); ++i) print_step(out, i + 1, ep.steps[i]);
  out << "--- final ---\n" << ep.final_observation;
  out << "result: " << to_string(ep.terminal_reason) << " after " << ep.steps.size() << " steps, env reward "
      << ep.total_env_reward << ", composite " << ep.composite_reward << "\n";
}

std::unique_ptr<LearnerPolicy> policy_from_checkpoint(const std::string& path) {
  if (!fs::exists(path)) throw std::invalid_argument("checkpoint not found: " + path);
  Checkpoint c = load_checkpoint(path);
  return std::make_unique<LapPolicy>(snapshot(c.params), c.generation, c.prompt);
}

std::string checkpoint_id(const std::string& path) {
  return fs::path(path).stem().string() + "@" + file_sha256(path).substr(0, 12);
}

// Keeps the log up to and including the last checkpoint reference.
std::optional<RunLogRecord> truncate_to_checkpoint(const fs::path& log_path) {
  if (!fs::exists(log_path)) return std::nullopt;
  const auto records = read_run_log(log_path);
  std::optional<std::size_t> last;
  for (std::size_t i = 0; i < records.size(); ++i)
    if (records[i].kind == RecordKind::checkpoint_ref) last = i;
  std::string kept;
  if (last) {
    for (std::size_t i = 0; i <= *last; ++i) kept += records[i].to_json().dump() + "\n";
  }
  write_text(log_path, kept);
  if (!last) return std::nullopt;
  return records[*last];
}

int run_train(const TrainOptions& opt, std::ostream& out) {
  const bool resume = !opt.resume_dir.empty();
  RunConfig config;
  fs::path dir;
  if (resume) {
    dir = opt.resume_dir;
    if (!fs::exists(dir / "config.toml")) throw UsageError("--resume: no config.toml in " + dir.string());
    if (!opt.overrides.empty()) throw UsageError("--resume: overrides would change the run; edit nothing on resume");
    config = load_run_config(dir / "config.toml");
  } else {
    if (opt.config_path.empty()) throw UsageError("train: --config is required");
    config = load_run_config(opt.config_path, opt.overrides);
    if (!config.map_file.empty()) {
      // Inline the map so the run directory is self-contained.
      config.map = read_text(config.map_file);
      config.map_file.clear();
      config.validate();
    }
    dir = config.output_dir;
    if (fs::exists(dir / "metrics.jsonl") && fs::file_size(dir / "metrics.jsonl") > 0)
      throw UsageError("run directory " + dir.string() + " already holds a run; pass --resume or pick another run.output_dir");
  }
  fs::create_directories(dir / "checkpoints");
  const std::string resolved = to_toml(config);
  if (parse_run_config(resolved) != config) throw std::logic_error("config does not round-trip");
  write_text(dir / "config.toml", resolved);

  const TrainingSetup setup = config.training_setup();
  const PolicyParams reference = config.initial_params();
  PolicyParams start = reference;
  std::size_t first_iteration = 1;
  std::uint64_t next_seq = 0;

  if (resume) {
    if (auto ref = truncate_to_checkpoint(dir / "metrics.jsonl")) {
      const auto& p = ref->payload;
      Checkpoint c = load_checkpoint(dir / p["path"].get<std::string>(), p["sha256"].get<std::string>());
      start = std::move(c.params);
      first_iteration = p["iteration"].get<std::size_t>() + 1;
      next_seq = ref->seq + 1;
    }
    if (!opt.quiet) out << "resuming " << dir.string() << " at iteration " << first_iteration << "\n";
  } else {
    save_checkpoint({0, reference, setup.generation, setup.prompt}, dir / "initial.json");
  }

  RunLogWriter log(dir / "metrics.jsonl", next_seq, true);
  const TrainerConfig& tc = config.trainer;
  std::size_t last_done = first_iteration - 1;
  auto on_iteration = [&](const IterationMetrics& m, const PolicyParams& theta) {
    log.write(RecordKind::iteration_metrics, to_json(m));
    last_done = m.iteration;
    if (m.iteration % config.checkpoint_every == 0 || m.iteration == tc.iterations) {
      const std::string rel = "checkpoints/" + checkpoint_name(m.iteration) + ".json";
      const std::string sha = save_checkpoint({m.iteration, theta, setup.generation, setup.prompt}, dir / rel);
      log.write(RecordKind::checkpoint_ref, Json{{"iteration", m.iteration}, {"path", rel}, {"sha256", sha}});
      if (!opt.quiet) {
        out << std::fixed << std::setprecision(3) << "iter " << std::setw(5) << m.iteration << "  C " << std::setw(7)
            << m.mean_composite << "  env " << std::setw(6) << m.mean_env_reward << "  |A| " << m.mean_abs_advantage
            << "  kl " << std::setprecision(4) << m.kl << "\n"
            << std::defaultfloat;
      }
    }
  };
  auto should_stop = [&] { return opt.stop_after > 0 && last_done >= opt.stop_after; };

  TrainResult result = first_iteration <= tc.iterations
                           ? train(setup, start, reference, tc, first_iteration, on_iteration, should_stop)
                           : TrainResult{start, {}};
  if (last_done < tc.iterations) {
    if (!opt.quiet) out << "stopped after iteration " << last_done << "\n";
    return kExitOk;
  }

  if (!config.eval_suites.empty()) {
    const LapPolicy initial(snapshot(reference), setup.generation, setup.prompt);
    const LapPolicy final_policy(snapshot(result.params), setup.generation, setup.prompt);
    std::vector<ComparisonReport> rows;
    for (const auto& id : config.eval_suites) {
      const EvalSuite suite = make_suite(id, config.eval_episodes, setup.env);
      const EvalMetrics a = evaluate(initial, suite, config.eval_workers);
      const EvalMetrics b = evaluate(final_policy, suite, config.eval_workers);
      log.write(RecordKind::eval_report, to_json(a, "initial"));
      log.write(RecordKind::eval_report, to_json(b, checkpoint_name(tc.iterations)));
      rows.push_back(compare(a, b));
    }
    if (!opt.quiet) out << format_comparison_table(rows);
  }
  if (!opt.quiet) out << "run directory: " << dir.string() << "\n";
  return kExitOk;
}

int run_eval(const EvalOptions& opt, std::ostream& out, std::ostream& err) {
  if (opt.checkpoint.empty() == opt.endpoint.empty())
    throw UsageError("eval: give exactly one of --checkpoint or --endpoint");
  if (!opt.baseline.empty() && opt.checkpoint.empty()) throw UsageError("eval: --baseline needs --checkpoint");
  const std::vector<std::string> suites = expand_suites(opt.suites);
  const std::optional<LakeMap> map = inline_map(opt.map);

  std::unique_ptr<LearnerPolicy> policy;
  const AdapterPolicy* adapter = nullptr;
  std::string id;
  if (!opt.checkpoint.empty()) {
    policy = policy_from_checkpoint(opt.checkpoint);
    id = checkpoint_id(opt.checkpoint);
  } else {
    if (!fs::exists(opt.endpoint)) throw UsageError("endpoint config not found: " + opt.endpoint);
    const EndpointConfig ec = load_endpoint_config(opt.endpoint);
    auto a = as_policy(ec);
    adapter = a.get();
    policy = std::move(a);
    id = "endpoint:" + ec.model;
  }
  std::unique_ptr<LearnerPolicy> baseline;
  std::string baseline_id;
  if (!opt.baseline.empty()) {
    baseline = policy_from_checkpoint(opt.baseline);
    baseline_id = checkpoint_id(opt.baseline);
  }

  std::optional<RunLogWriter> log;
  if (!opt.log_path.empty()) {
    std::uint64_t next = 0;
    if (fs::exists(opt.log_path)) {
      const auto existing = read_run_log(opt.log_path);
      if (!existing.empty()) next = existing.back().seq + 1;
    }
    log.emplace(opt.log_path, next, true);
  }

  std::vector<EvalMetrics> rows;
  std::vector<ComparisonReport> comparisons;
  for (const auto& s : suites) {
    EvalSuite suite = standard_suite(s, opt.episodes == 0 ? kDefaultEvalEpisodes : opt.episodes);
    if (map && is_lake_variant(s)) suite.env.fixed_map = map;
    const EvalMetrics m = evaluate(*policy, suite, opt.workers);
    if (log) log->write(RecordKind::eval_report, to_json(m, id));
    rows.push_back(m);
    if (baseline) {
      const EvalMetrics b = evaluate(*baseline, suite, opt.workers);
      if (log) log->write(RecordKind::eval_report, to_json(b, baseline_id));
      comparisons.push_back(compare(b, m));
    }
  }
  out << format_metrics_table(rows);
  if (baseline) out << "\n" << format_comparison_table(comparisons);
  if (adapter) {
    out << "adapter: " << adapter->requests() << " requests, " << adapter->transport_errors() << " transport errors, "
        << adapter->protocol_errors() << " protocol errors\n";
    if (adapter->transport_errors() > 0) err << "warning: endpoint failures were scored as unparseable steps\n";
  }
  return kExitOk;
}

int run_play(const PlayOptions& opt, std::ostream& out) {
  if (!opt.episode_log.empty()) {
    for (const RunLogRecord& r : read_run_log(opt.episode_log)) {
      if (r.kind != RecordKind::episode) continue;
      print_episode(out, episode_from_json(r.payload), r.payload["variant"].get<std::string>());
      return kExitOk;
    }
    throw UsageError("no episode record in " + opt.episode_log);
  }

  EnvConfig env;
  env.variant = opt.variant;
  env.step_cap = opt.step_cap;
  if (opt.map_seed && !opt.map.empty()) throw UsageError("play: give at most one of --map and --map-seed");
  if (opt.map_seed) env.fixed_map = frozenlake_generate(*opt.map_seed, 4, env.hole_prob);
  if (!opt.map.empty()) env.fixed_map = inline_map(opt.map);
  env.validate();

  std::unique_ptr<LearnerPolicy> policy;
  const std::string& src = opt.policy;
  if (src == "vi") {
    if (!is_lake_variant(env.variant)) throw UsageError("play: the value-iteration policy only plays frozen lake");
    policy = std::make_unique<ValueIterationPolicy>();
  } else if (src == "random") {
    policy = std::make_unique<ScriptedTextPolicy>(random_text_policy());
  } else if (src.starts_with("checkpoint:")) {
    policy = policy_from_checkpoint(src.substr(11));
  } else if (src.starts_with("endpoint:")) {
    policy = as_policy(load_endpoint_config(src.substr(9)));
  } else {
    throw UsageError("play: unknown policy source '" + src + "'");
  }

  auto environment = make_environment(env, opt.seed);
  const auto opponents = make_opponents(env);
  const EpisodeRecord ep = run_episode(*environment, *policy, borrow(opponents), opt.seed, env.effective_step_cap());
  if (!opt.write_log.empty()) {
    RunLogWriter log(opt.write_log);
    log.write(RecordKind::episode, to_json(ep, env.variant));
  }
  print_episode(out, ep, env.variant);
  return kExitOk;
}

char arrow(Direction d) {
  switch (d) {
    case Direction::Up: return '^';
    case Direction::Down: return 'v';
    case Direction::Left: return '<';
    case Direction::Right: return '>';
  }
  return '?';
}

int run_oracle(const OracleOptions& opt, std::ostream& out) {
  if (!is_lake_variant(opt.variant)) throw UsageError("oracle: value iteration is defined for frozen lake variants only");
  if (!(opt.hole_prob >= 0.0 && opt.hole_prob < 1.0)) throw UsageError("--hole-prob: must lie in [0, 1)");
  const LakeMap map = opt.map.empty() ? frozenlake_generate(opt.map_seed, 4, opt.hole_prob) : *inline_map(opt.map);
  const LakeVariant variant = opt.variant == kLakeSlippery ? LakeVariant::Slippery : LakeVariant::NotSlippery;
  const ValueTable table = value_iteration(map, variant);

  out << opt.variant;
  if (opt.map.empty()) out << ", map seed " << opt.map_seed << ", hole probability " << opt.hole_prob;
  out << "\n\nmap\n" << map.to_text() << "\nvalues (success probability)\n";
  out << std::fixed << std::setprecision(4);
  for (int r = 0; r < map.size(); ++r) {
    for (int c = 0; c < map.size(); ++c) out << (c ? " " : "") << table.at({r, c});
    out << "\n";
  }
  out << std::defaultfloat << "\ngreedy policy\n";
  for (int r = 0; r < map.size(); ++r) {
    for (int c = 0; c < map.size(); ++c) {
      const LakeCell cell = map.at({r, c});
      out << (cell == LakeCell::Hole ? 'H' : cell == LakeCell::Goal ? 'G' : arrow(table.action({r, c})));
    }
    out << "\n";
  }
  out << "\nsweeps: " << table.residuals.size() << ", final residual " << std::scientific << std::setprecision(2)
      << table.residuals.back() << std::defaultfloat << "\n";
  return kExitOk;
}

}  // namespace

int cmd_train(const TrainOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return run_train(options, out); });
}

int cmd_eval(const EvalOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return run_eval(options, out, err); });
}

int cmd_play(const PlayOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return run_play(options, out); });
}

int cmd_oracle(const OracleOptions& options, std::ostream& out, std::ostream& err) {
  return guarded(err, [&] { return run_oracle(options, out); });
}

}  // namespace msgrpo
