// Command-line entry point: training, suite evaluation, gap curve, step
// benchmark, scenario gallery and single-episode traces.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "svo/config/config.hpp"
#include "svo/env/trace.hpp"
#include "svo/eval/benchmark.hpp"
#include "svo/eval/gallery.hpp"
#include "svo/eval/gapcurve.hpp"
#include "svo/eval/suite.hpp"
#include "svo/nn/checkpoint.hpp"
#include "svo/rl/policy.hpp"
#include "svo/rl/trainer.hpp"

namespace fs = std::filesystem;
using namespace svo;

namespace {

constexpr const char* kOutDirEnv = "SVO_OUT_DIR";

/// --out wins, then $SVO_OUT_DIR, then the per-command default.
fs::path output_dir(const std::string& flag, const std::string& fallback) {
  if (!flag.empty()) return flag;
  if (const char* env = std::getenv(kOutDirEnv); env && *env) return env;
  return fallback;
}

std::ofstream open_output(const fs::path& path) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

config::ToolkitConfig load(const std::string& path) {
  return path.empty() ? config::ToolkitConfig{} : config::load_config(path);
}

void write_schema(const fs::path& dir) { open_output(dir / "schema.json") << eval::output_schema().dump(2) << '\n'; }

env::PedVariant parse_variant(const std::string& s) {
  if (s == "aware") return env::PedVariant::Aware;
  if (s == "unaware") return env::PedVariant::Unaware;
  throw Error("unknown suite '" + s + "'");
}

std::string label_of(const fs::path& checkpoint) {
  const fs::path parent = checkpoint.parent_path().filename();
  return parent.empty() ? checkpoint.stem().string() : (parent / checkpoint.stem()).string();
}

struct Common {
  std::string config;
  std::string out;
  int threads = 1;
};

// ---------------------------------------------------------------------------

struct TrainArgs {
  std::string algo;
  double svo = -1.0;
  std::uint64_t steps = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool full_scale = false;
};

int run_train(const Common& common, const TrainArgs& a) {
  config::ToolkitConfig cfg = load(common.config);
  if (!a.algo.empty()) cfg.train.algo = a.algo == "ppo" ? nn::Algo::Ppo : nn::Algo::Sac;
  if (a.svo >= 0.0) cfg.train.svo_deg = a.svo;
  if (a.seed_set) cfg.train.seed = a.seed;
  if (a.steps > 0) {
    cfg.train.total_steps = a.steps;
  } else if (!cfg.sets("train.steps")) {
    cfg.train.total_steps = rl::default_steps(cfg.train.algo, a.full_scale);
  }
  cfg.validate();
  const std::string hash = config::config_hash(cfg);
  const fs::path dir = output_dir(common.out, "svo_out/train");
  fs::create_directories(dir);
  open_output(dir / "config.ini") << config::canonical_text(cfg);
  std::cout << "training " << nn::to_string(cfg.train.algo) << " svo " << format_double(cfg.train.svo_deg)
            << " deg, " << cfg.train.total_steps << " steps, seed " << cfg.train.seed << ", config "
            << hash << '\n';
  const rl::TrainResult r = rl::train_to_directory(cfg.train, cfg.env_settings(), hash, dir);
  if (!r.metrics.empty()) {
    const rl::MetricsRow& last = r.metrics.back();
    std::cout << "final mean episode reward " << format_double(last.mean_ep_reward)
              << ", mean episode length " << format_double(last.mean_ep_len) << '\n';
  }
  std::cout << "wrote " << (dir / "final.ckpt").string() << '\n';
  return 0;
}

// ---------------------------------------------------------------------------

struct EvalArgs {
  std::vector<std::string> checkpoints;
  std::vector<double> svo_tags;
  std::string suite = "aware";
  int episodes = 0;
  bool traces = false;
};

int run_eval(const Common& common, const EvalArgs& a) {
  config::ToolkitConfig cfg = load(common.config);
  eval::SuiteConfig suite = cfg.suite;
  suite.variant = parse_variant(a.suite);
  if (a.episodes > 0) suite.episodes = a.episodes;
  suite.threads = common.threads;
  suite.record_steps = suite.record_steps || a.traces;
  if (!a.svo_tags.empty() && a.svo_tags.size() != a.checkpoints.size())
    throw Error("--svo needs one tag per checkpoint");

  std::vector<eval::TaggedPolicy> policies;
  for (std::size_t i = 0; i < a.checkpoints.size(); ++i) {
    const nn::Checkpoint c = nn::load_checkpoint(a.checkpoints[i]);
    const double tag = a.svo_tags.empty() ? c.svo_deg : a.svo_tags[i];
    policies.push_back(eval::TaggedPolicy::from_checkpoint(c, tag, label_of(a.checkpoints[i])));
  }
  const std::string hash = config::config_hash(cfg);
  const auto runs = eval::run_suite(policies, suite, cfg.env_settings());

  const fs::path dir = output_dir(common.out, "svo_out/eval");
  {
    auto out = open_output(dir / "summary.csv");
    eval::write_summary_csv(out, runs, suite, hash);
  }
  {
    auto out = open_output(dir / "episodes.jsonl");
    eval::write_episodes_jsonl(out, runs, suite, hash);
  }
  write_schema(dir);
  eval::write_summary_csv(std::cout, runs, suite, hash);
  return 0;
}

// ---------------------------------------------------------------------------

struct GapArgs {
  double speed = 0.0;
  std::string side;
  int trials = 0;
};

int run_gapcurve(const Common& common, const GapArgs& a) {
  config::ToolkitConfig cfg = load(common.config);
  if (a.speed > 0.0) cfg.gapcurve.approach_speed = a.speed;
  if (!a.side.empty()) cfg.gapcurve.side = a.side == "far" ? ped::Side::Far : ped::Side::Near;
  if (a.trials > 0) cfg.gapcurve.trials = a.trials;
  cfg.validate();
  const auto curve = eval::gap_acceptance_curve(cfg.gapcurve, cfg.scenario, cfg.pedestrian);
  const fs::path dir = output_dir(common.out, "svo_out/gapcurve");
  const std::string hash = config::config_hash(cfg);
  {
    auto out = open_output(dir / "gapcurve.csv");
    eval::write_gap_curve_csv(out, curve, hash, cfg.gapcurve.seed);
  }
  write_schema(dir);
  eval::write_gap_curve_csv(std::cout, curve, hash, cfg.gapcurve.seed);
  return 0;
}

int run_pedbench(const Common& common, std::int64_t steps) {
  const eval::BenchmarkStats s = eval::ped_benchmark(steps);
  nlohmann::ordered_json j;
  j["toolkit"] = kToolkitVersion;
  j["steps"] = s.steps;
  j["median_ms"] = s.median_ms;
  j["p95_ms"] = s.p95_ms;
  j["mean_ms"] = s.mean_ms;
  const fs::path dir = output_dir(common.out, "svo_out/pedbench");
  open_output(dir / "pedbench.json") << j.dump(2) << '\n';
  std::cout << "pedestrian_step over " << s.steps << " random states: median " << s.median_ms
            << " ms, p95 " << s.p95_ms << " ms, mean " << s.mean_ms << " ms\n";
  return 0;
}

int run_gallery(const Common& common) {
  const config::ToolkitConfig cfg = load(common.config);
  const std::string hash = config::config_hash(cfg);
  const fs::path dir = output_dir(common.out, "svo_out/gallery");
  for (const eval::GalleryScenario& g : eval::gallery_scenarios(cfg.gallery, cfg.scenario)) {
    const eval::GalleryResult r = eval::run_gallery_scenario(g, cfg.gallery, cfg.scenario, cfg.pedestrian);
    auto out = open_output(dir / (g.name + ".jsonl"));
    eval::write_gallery_trace(out, r, hash);
    std::cout << g.name << ": " << (r.reached_goal ? "reached goal" : "did not reach goal") << " after "
              << format_double(r.time) << " s" << (r.crossed_ahead ? ", crossed ahead of the vehicle" : "")
              << '\n';
  }
  write_schema(dir);
  return 0;
}

// ---------------------------------------------------------------------------

struct TraceArgs {
  std::string checkpoint;
  std::string suite = "aware";
  std::uint64_t seed = 0;
  std::string side;
  std::vector<double> actions;
};

/// One episode as JSON lines, driven by a checkpoint or a scripted action
/// sequence (held at zero after it runs out).
int run_trace(const Common& common, const TraceArgs& a) {
  const config::ToolkitConfig cfg = load(common.config);
  env::EnvSettings settings = cfg.env_settings();
  settings.variant = parse_variant(a.suite);
  std::optional<rl::Policy> policy;
  double svo = cfg.train.svo_deg;
  if (!a.checkpoint.empty()) {
    const nn::Checkpoint c = nn::load_checkpoint(a.checkpoint);
    policy = rl::Policy::from_checkpoint(c);
    svo = c.svo_deg;
    settings.svo_rad = deg_to_rad(svo);
  }
  std::optional<bool> bottom;
  if (a.side == "bottom") bottom = true;
  if (a.side == "top") bottom = false;

  env::DrivingEnv environment(settings);
  const fs::path dir = output_dir(common.out, "svo_out/trace");
  auto out = open_output(dir / ("trace_" + std::to_string(a.seed) + ".jsonl"));
  env::TraceWriter writer(out);
  writer.header(a.seed, config::config_hash(cfg), svo, settings.variant);
  env::Observation obs = environment.reset(a.seed, bottom);
  std::size_t k = 0;
  env::Transition tr;
  do {
    const double u = policy ? policy->act(obs) : (k < a.actions.size() ? a.actions[k] : 0.0);
    ++k;
    tr = environment.step(u);
    writer.record(tr);
    obs = tr.obs;
  } while (!tr.done);
  std::cout << "episode ended with " << env::to_string(tr.outcome) << " after " << tr.info.step
            << " steps\n";
  return 0;
}

int run_config(const Common& common) {
  const config::ToolkitConfig cfg = load(common.config);
  std::cout << "# config_hash " << config::config_hash(cfg) << '\n' << config::canonical_text(cfg);
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pedestrian interaction simulator and SVO-shaped driving policy trainer"};
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kToolkitVersion));
  Common common;
  app.add_option("--threads", common.threads, "Parallel episode workers for evaluation")
      ->check(CLI::PositiveNumber);

  auto add_common = [&](CLI::App* sub, const std::string& what) {
    sub->add_option("--config", common.config, "Configuration file")->check(CLI::ExistingFile);
    sub->add_option("--out", common.out,
                    "Output directory for " + what + " (default: $" + kOutDirEnv + " or svo_out/...)");
  };

  TrainArgs train;
  auto* train_cmd = app.add_subcommand("train", "Train a policy");
  add_common(train_cmd, "metrics and checkpoints");
  train_cmd->add_option("--algo", train.algo, "ppo or sac")->check(CLI::IsMember({"ppo", "sac"}));
  train_cmd->add_option("--svo", train.svo, "Social value orientation [deg]")->check(CLI::Range(0.0, 90.0));
  train_cmd->add_option("--steps", train.steps, "Environment steps")->check(CLI::PositiveNumber);
  train_cmd->add_option("--seed", train.seed, "Random seed")->each([&](const std::string&) { train.seed_set = true; });
  train_cmd->add_flag("--full-scale", train.full_scale, "Default to the long training runs")
      ->excludes(train_cmd->get_option("--steps"));

  EvalArgs ev;
  auto* eval_cmd = app.add_subcommand("eval", "Run a test suite");
  add_common(eval_cmd, "summary.csv and episodes.jsonl");
  eval_cmd->add_option("--checkpoint", ev.checkpoints, "Checkpoint file (repeatable)")
      ->required()
      ->check(CLI::ExistingFile);
  eval_cmd->add_option("--svo", ev.svo_tags, "Expected SVO tag per checkpoint [deg]");
  eval_cmd->add_option("--suite", ev.suite, "aware or unaware")->check(CLI::IsMember({"aware", "unaware"}));
  eval_cmd->add_option("--episodes", ev.episodes, "Episode count (even)")->check(CLI::PositiveNumber);
  eval_cmd->add_flag("--traces", ev.traces, "Include per-step traces in episodes.jsonl");

  GapArgs gap;
  auto* gap_cmd = app.add_subcommand("gapcurve", "Crossing probability against time gap");
  add_common(gap_cmd, "gapcurve.csv");
  gap_cmd->add_option("--speed", gap.speed, "Approach speed [m/s]")->check(CLI::PositiveNumber);
  gap_cmd->add_option("--side", gap.side, "near or far")->check(CLI::IsMember({"near", "far"}));
  gap_cmd->add_option("--trials", gap.trials, "Trials per gap")->check(CLI::PositiveNumber);

  std::int64_t bench_steps = 100000;
  auto* bench_cmd = app.add_subcommand("pedbench", "Time the pedestrian step");
  add_common(bench_cmd, "pedbench.json");
  bench_cmd->add_option("--steps", bench_steps, "Timed steps")->check(CLI::Range(100000, 100000000));

  auto* gallery_cmd = app.add_subcommand("gallery", "Scripted pedestrian scenarios");
  add_common(gallery_cmd, "scenario traces");

  TraceArgs trace;
  auto* trace_cmd = app.add_subcommand("trace", "Record one episode");
  add_common(trace_cmd, "the trace");
  auto* trace_ckpt = trace_cmd->add_option("--checkpoint", trace.checkpoint, "Policy checkpoint")
                         ->check(CLI::ExistingFile);
  trace_cmd->add_option("--suite", trace.suite, "aware or unaware")->check(CLI::IsMember({"aware", "unaware"}));
  trace_cmd->add_option("--seed", trace.seed, "Scenario seed");
  trace_cmd->add_option("--side", trace.side, "Spawn pavement: bottom or top")
      ->check(CLI::IsMember({"bottom", "top"}));
  trace_cmd->add_option("--actions", trace.actions, "Scripted normalized actions")
      ->delimiter(',')
      ->excludes(trace_ckpt);

  auto* config_cmd = app.add_subcommand("config", "Print the canonical configuration and its hash");
  config_cmd->add_option("--config", common.config, "Configuration file")->check(CLI::ExistingFile);

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train_cmd) return run_train(common, train);
    if (*eval_cmd) return run_eval(common, ev);
    if (*gap_cmd) return run_gapcurve(common, gap);
    if (*bench_cmd) return run_pedbench(common, bench_steps);
    if (*gallery_cmd) return run_gallery(common);
    if (*trace_cmd) return run_trace(common, trace);
    if (*config_cmd) return run_config(common);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
