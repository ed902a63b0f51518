// msgrpo: train, evaluate and inspect language agent policies on the grid games.

#include <CLI11.hpp>
#include <iostream>

#include "msgrpo/commands.hpp"
#include "msgrpo/environments.hpp"

int main(int argc, char** argv) {
  using namespace msgrpo;
  CLI::App app{"Multi-step GRPO for text-mediated grid games"};
  app.require_subcommand(1);

  TrainOptions train;
  auto* t = app.add_subcommand("train", "Train the toy token policy with MS-GRPO");
  t->add_option("--config", train.config_path, "Run configuration (TOML)");
  t->add_option("--set", train.overrides, "Override a config key, e.g. --set trainer.M=5")->take_all();
  t->add_option("--resume", train.resume_dir, "Continue the run in this directory from its latest checkpoint");
  t->add_option("--stop-after", train.stop_after)->group("");  // testing aid: simulate an interrupted run
  t->add_flag("--quiet", train.quiet, "Only write the run directory");

  EvalOptions eval;
  auto* e = app.add_subcommand("eval", "Evaluate a checkpoint or an endpoint on fixed episode suites");
  e->add_option("--checkpoint", eval.checkpoint, "Checkpoint file");
  e->add_option("--baseline", eval.baseline, "Second checkpoint to compare against (initial column)");
  e->add_option("--endpoint", eval.endpoint, "Endpoint configuration (TOML) for a remote model");
  e->add_option("--suite", eval.suites, "Variant id or 'all' (repeatable)")->take_all();
  e->add_option("--episodes", eval.episodes, "Episodes per suite (default 50)");
  e->add_option("--map", eval.map, "Fixed map for lake suites, rows separated by '/'");
  e->add_option("--workers", eval.workers, "Parallel episode workers")->check(CLI::PositiveNumber);
  e->add_option("--log", eval.log_path, "Append eval_report records to this JSONL file");

  PlayOptions play;
  auto* p = app.add_subcommand("play", "Print one episode frame by frame");
  p->add_option("--variant", play.variant, "Game variant")->check(CLI::IsMember(all_variants()));
  p->add_option("--seed", play.seed, "Episode seed");
  p->add_option("--policy", play.policy, "vi | random | checkpoint:<path> | endpoint:<toml>");
  p->add_option("--map", play.map, "Fixed lake map, rows separated by '/'");
  p->add_option("--map-seed", play.map_seed, "Generate the lake map from this seed");
  p->add_option("--step-cap", play.step_cap, "Step cap (0 = variant default)");
  p->add_option("--episode-log", play.episode_log, "Replay the episode stored in this log");
  p->add_option("--write-log", play.write_log, "Save the played episode to this log");

  OracleOptions oracle;
  auto* o = app.add_subcommand("oracle", "Solve a lake map by value iteration");
  o->add_option("--variant", oracle.variant, "frozenlake-slippery or frozenlake-not-slippery");
  o->add_option("--map-seed", oracle.map_seed, "Map generation seed");
  o->add_option("--hole-prob", oracle.hole_prob, "Hole probability for generation");
  o->add_option("--map", oracle.map, "Explicit map, rows separated by '/'");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& err) {
    const int code = app.exit(err);
    return code == 0 ? kExitOk : kExitUsage;
  }

  if (t->parsed()) return cmd_train(train, std::cout, std::cerr);
  if (e->parsed()) return cmd_eval(eval, std::cout, std::cerr);
  if (p->parsed()) return cmd_play(play, std::cout, std::cerr);
  return cmd_oracle(oracle, std::cout, std::cerr);
}
