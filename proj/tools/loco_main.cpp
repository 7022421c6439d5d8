#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "loco/eval/eval.hpp"
#include "loco/io/checkpoint.hpp"
#include "loco/io/config.hpp"
#include "loco/io/csv.hpp"
#include "loco/rl/trainer.hpp"

namespace fs = std::filesystem;
using namespace loco;

namespace {

// Exclusive ownership of an output directory for the lifetime of the run.
class DirLock {
 public:
  explicit DirLock(const std::string& dir) : path_(dir + "/.lock") {
    fs::create_directories(dir);
    FILE* f = std::fopen(path_.c_str(), "wx");
    if (!f)
      throw std::runtime_error("output directory is locked by another run: " + dir +
                               " (remove " + path_ + " if that run is gone)");
    std::fclose(f);
    held_ = true;
  }
  ~DirLock() {
    if (held_) std::remove(path_.c_str());
  }
  DirLock(const DirLock&) = delete;
  DirLock& operator=(const DirLock&) = delete;

 private:
  std::string path_;
  bool held_ = false;
};

std::string default_run_dir(const io::RunConfig& config) {
  if (!config.out_dir.empty()) return config.out_dir;
  std::string root = "runs";
  if (const char* env = std::getenv("LOCO_OUT_ROOT")) root = env;
  return root + "/run_seed" + std::to_string(config.seed) + "_" + config.ablation;
}

void parse_terrain_spec(const std::string& spec, sim::TerrainKind& kind, int& level) {
  const auto colon = spec.find(':');
  if (colon == std::string::npos)
    throw std::runtime_error("terrain spec must be kind:level, e.g. smooth:0");
  kind = sim::terrain_kind_from_name(spec.substr(0, colon));
  level = std::stoi(spec.substr(colon + 1));
  if (level < 0 || level >= sim::kTerrainLevels)
    throw std::runtime_error("terrain level must be in [0, 9]");
}

int cmd_train(const std::string& config_path, const std::vector<std::string>& overrides,
              const std::string& resume_path) {
  std::unique_ptr<rl::Trainer> trainer;
  if (!resume_path.empty()) {
    if (!config_path.empty())
      std::cerr << "note: resuming from " << resume_path
                << "; the checkpoint's config snapshot takes precedence over --config\n";
    trainer = rl::Trainer::resume(resume_path, overrides);
  } else {
    if (config_path.empty()) {
      std::cerr << "error: train needs --config or --resume\n";
      return 2;
    }
    nlohmann::json j;
    {
      std::ifstream in(config_path);
      if (!in) {
        std::cerr << "error: cannot read config file: " << config_path << "\n";
        return 2;
      }
      in >> j;
    }
    for (const auto& o : overrides) io::apply_override(j, o);
    io::RunConfig config = io::config_from_json(j);
    const io::ValidationResult v = io::validate_config(config);
    for (const auto& w : v.warnings) std::cerr << "warning: " << w << "\n";
    if (!v.ok()) {
      for (const auto& e : v.errors) std::cerr << "error: " << e << "\n";
      return 2;
    }
    trainer = std::make_unique<rl::Trainer>(std::move(config));
  }

  const std::string out_dir = default_run_dir(trainer->config());
  DirLock lock(out_dir);
  std::cout << "run directory: " << out_dir << "\n";
  std::cout << "ablation: " << trainer->config().ablation
            << "  envs: " << trainer->config().ppo.num_envs
            << "  horizon: " << trainer->config().ppo.horizon
            << "  iterations: " << trainer->config().iterations << "\n";

  try {
    const std::string final_ckpt = trainer->run(out_dir, [](const rl::IterationStats& s) {
      if (s.iteration % 10 == 0 || s.iteration == 1) {
        std::printf("iter %5lld  reward %8.2f  len %6.1f  p_boot %.3f  kl %.4f\n",
                    static_cast<long long>(s.iteration), s.mean_episode_reward,
                    s.mean_episode_length, s.p_boot, s.ppo.approx_kl);
        std::fflush(stdout);
      }
    });
    std::cout << "final checkpoint: " << final_ckpt << "\n";
  } catch (const rl::TrainingFault& fault) {
    std::cerr << "training aborted: " << fault.what()
              << "\nthe last periodic checkpoint in " << out_dir << " is intact\n";
    return 3;
  }
  return 0;
}

int cmd_eval(const std::string& ckpt, const std::string& suite, int seeds,
             const std::string& ckpt_b, const std::string& terrain_spec,
             const std::string& out_dir_flag) {
  const io::PolicyBundle bundle = io::load_policy_bundle(ckpt);
  sim::TerrainKind kind = sim::TerrainKind::Smooth;
  int level = 0;
  if (!terrain_spec.empty()) parse_terrain_spec(terrain_spec, kind, level);

  std::string out_dir = out_dir_flag;
  if (out_dir.empty()) out_dir = default_run_dir(bundle.config) + "/eval";
  fs::create_directories(out_dir);

  const io::EvalConfig& ec = bundle.config.eval;
  const std::uint64_t base_seed = bundle.config.seed;

  if (suite == "ate") {
    eval::PolicySystem system(bundle, kind, level);
    eval::AteProtocol protocol;
    protocol.duration = ec.ate_duration;
    protocol.resample = ec.ate_resample;
    protocol.seeds = seeds > 0 ? seeds : ec.ate_seeds;
    protocol.ranges = bundle.config.env.commands;
    const eval::AteReport report = eval::ate_eval(system, protocol, base_seed);
    eval::export_ate_csv(report, out_dir + "/ate.csv");
    std::printf("ate over %zu seeds on %s (%d falls)\n", report.seeds.size(),
                system.terrain_label().c_str(), report.falls);
    std::printf("  vx  : %.4f +/- %.4f m/s\n", report.vx.mean, report.vx.stddev);
    std::printf("  vy  : %.4f +/- %.4f m/s\n", report.vy.mean, report.vy.stddev);
    std::printf("  yaw : %.4f +/- %.4f rad/s\n", report.yaw.mean, report.yaw.stddev);
    std::printf("wrote %s/ate.csv\n", out_dir.c_str());
    return 0;
  }

  if (suite == "push" || suite == "survival") {
    eval::PolicySystem system(bundle, kind, level);
    eval::SurvivalProtocol surv;
    surv.duration = ec.survival_duration;
    surv.trials = seeds > 0 ? seeds : ec.survival_trials;
    surv.resample = ec.ate_resample;
    surv.ranges = bundle.config.env.commands;
    eval::RobustnessReport report;
    if (suite == "push") {
      eval::PushProtocol push;
      push.interval = ec.push_interval;
      push.trial_seconds = ec.push_trial_seconds;
      push.trials = ec.push_trials;
      push.seeds = seeds > 0 ? seeds : 3;
      push.sweep_start = ec.push_sweep_start;
      push.sweep_step = ec.push_sweep_step;
      push.sweep_max = ec.push_sweep_max;
      push.resample = ec.ate_resample;
      push.ranges = bundle.config.env.commands;
      report = eval::robustness_push_test(system, push, surv, base_seed);
      std::printf("max push   : %.3f +/- %.3f m/s\n", report.max_push_mean, report.max_push_std);
    } else {
      eval::survival_eval(system, surv, base_seed, report);
    }
    std::printf("survival   : %.2f +/- %.2f %% of %.0f s\n", report.survival_mean,
                report.survival_std, surv.duration);
    eval::export_robustness_csv(report, out_dir + "/robustness.csv");
    std::printf("wrote %s/robustness.csv\n", out_dir.c_str());
    return 0;
  }

  if (suite == "estimation") {
    if (terrain_spec.empty()) {
      kind = sim::TerrainKind::Stairs;  // protocol default: a stairs walk
      level = 3;
    }
    const io::PolicyBundle other = ckpt_b.empty() ? bundle : io::load_policy_bundle(ckpt_b);
    eval::PolicySystem sys_a(bundle, kind, level);
    eval::PolicySystem sys_b(other, kind, level);
    eval::EstimationTrace trace = eval::estimation_error_eval(
        sys_a, sys_b, ec.estimation_duration, ec.ate_resample, base_seed,
        bundle.config.env.commands);
    trace.label_a = bundle.config.ablation;
    trace.label_b = ckpt_b.empty() ? bundle.config.ablation + "_again" : other.config.ablation;
    eval::export_estimation_csv(trace, out_dir + "/estimation.csv");
    std::printf("mean squared velocity estimation error on %s\n", sys_a.terrain_label().c_str());
    std::printf("  %-24s %.6f\n", trace.label_a.c_str(), trace.mean_a);
    std::printf("  %-24s %.6f\n", trace.label_b.c_str(), trace.mean_b);
    std::printf("wrote %s/estimation.csv\n", out_dir.c_str());
    return 0;
  }

  std::cerr << "error: unknown suite '" << suite
            << "' (expected one of: ate, push, survival, estimation)\n";
  return 2;
}

int cmd_replay(const std::string& ckpt, const std::string& terrain_spec, double duration,
               const std::string& out_path) {
  const io::PolicyBundle bundle = io::load_policy_bundle(ckpt);
  sim::TerrainKind kind = sim::TerrainKind::Smooth;
  int level = 0;
  parse_terrain_spec(terrain_spec, kind, level);

  std::vector<std::string> cols = {"time_s"};
  const char* base_cols[] = {"base_x", "base_y", "base_z", "quat_w", "quat_x", "quat_y", "quat_z",
                             "v_x", "v_y", "v_z", "omega_x", "omega_y", "omega_z"};
  for (const char* c : base_cols) cols.push_back(c);
  for (int i = 0; i < 12; ++i) cols.push_back("q_" + std::to_string(i));
  for (int i = 0; i < 12; ++i) cols.push_back("dq_" + std::to_string(i));
  for (int i = 0; i < 12; ++i) cols.push_back("tau_" + std::to_string(i));
  for (int i = 0; i < 12; ++i) cols.push_back("action_" + std::to_string(i));
  for (int i = 0; i < 4; ++i) cols.push_back("contact_" + std::to_string(i));
  for (const auto& name : task::RewardBreakdown::term_names()) cols.push_back("rew_" + name);
  cols.push_back("rew_total");
  for (const char* c : {"v_true_x", "v_true_y", "v_true_z", "v_est_x", "v_est_y", "v_est_z",
                        "latent_norm"})
    cols.push_back(c);
  io::CsvWriter csv(out_path, cols);

  eval::PolicySystem system(bundle, kind, level);
  system.reset(nn::Rng::mix(bundle.config.seed, 0x4E9));
  nn::Rng cmd_rng(nn::Rng::mix(bundle.config.seed, 0x11));
  task::Command cmd;
  const double dt = system.control_dt();
  const int steps = static_cast<int>(duration / dt);
  const int resample_steps =
      std::max(1, static_cast<int>(bundle.config.env.command_resample_seconds / dt));
  for (int t = 0; t < steps; ++t) {
    if (t % resample_steps == 0) cmd = task::sample_command(cmd_rng, bundle.config.env.commands);
    const eval::StepInfo info = system.step(cmd);
    const sim::SimState& s = system.state();
    std::vector<double> row;
    row.push_back(s.time);
    for (double v : s.base_position) row.push_back(v);
    for (double v : s.base_orientation) row.push_back(v);
    for (double v : s.linear_velocity) row.push_back(v);
    for (double v : s.angular_velocity) row.push_back(v);
    for (double v : s.joint_positions) row.push_back(v);
    for (double v : s.joint_velocities) row.push_back(v);
    for (double v : s.applied_torques) row.push_back(v);
    for (double v : system.last_action()) row.push_back(v);
    for (const auto& foot : s.feet) row.push_back(foot.in_contact ? 1.0 : 0.0);
    for (double v : system.last_reward().terms()) row.push_back(v);
    row.push_back(system.last_reward().total);
    for (double v : info.v_true_pre) row.push_back(v);
    for (double v : info.v_est_pre) row.push_back(v);
    double zn = 0.0;
    for (double z : system.last_latent()) zn += z * z;
    row.push_back(std::sqrt(zn));
    csv.row(row);
    if (info.fell) system.reset(nn::Rng::mix(bundle.config.seed, 0x4E9 + t + 1));
  }
  std::printf("wrote %d steps to %s\n", steps, out_path.c_str());
  return 0;
}

int cmd_validate(const std::string& config_path) {
  nlohmann::json j;
  {
    std::ifstream in(config_path);
    if (!in) {
      std::cerr << "error: cannot read config file: " << config_path << "\n";
      return 2;
    }
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      std::cerr << "error: config is not valid JSON: " << e.what() << "\n";
      return 1;
    }
  }
  io::RunConfig config;
  try {
    config = io::config_from_json(j);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  const io::ValidationResult v = io::validate_config(config);
  for (const auto& w : v.warnings) std::cout << "warning: " << w << "\n";
  for (const auto& e : v.errors) std::cout << "error: " << e << "\n";
  if (!v.ok()) return 1;
  std::cout << "effective config:\n" << io::config_to_json(config).dump(2) << "\n";
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"quadruped locomotion learning: train, evaluate, replay"};
  app.require_subcommand(1);

  std::string config_path, resume_path;
  std::vector<std::string> overrides;
  CLI::App* train = app.add_subcommand("train", "run the training loop");
  train->add_option("--config", config_path, "JSON config file");
  train->add_option("--override", overrides, "key.path=value config overrides")->take_all();
  train->add_option("--resume", resume_path, "checkpoint to continue from");

  std::string eval_ckpt, suite, eval_ckpt_b, eval_terrain, eval_out;
  int eval_seeds = 0;
  CLI::App* eval_cmd = app.add_subcommand("eval", "run an evaluation suite on a checkpoint");
  eval_cmd->add_option("--ckpt", eval_ckpt, "checkpoint file")->required();
  eval_cmd->add_option("--suite", suite, "ate | push | survival | estimation")->required();
  eval_cmd->add_option("--seeds", eval_seeds, "number of seeds/trials (0 = config default)");
  eval_cmd->add_option("--ckpt-b", eval_ckpt_b, "second checkpoint for the estimation suite");
  eval_cmd->add_option("--terrain", eval_terrain, "terrain kind:level (default smooth:0)");
  eval_cmd->add_option("--out", eval_out, "report directory");

  std::string replay_ckpt, replay_terrain, replay_out;
  double replay_duration = 10.0;
  CLI::App* replay = app.add_subcommand("replay", "export a deterministic rollout as CSV");
  replay->add_option("--ckpt", replay_ckpt, "checkpoint file")->required();
  replay->add_option("--terrain", replay_terrain, "terrain kind:level")->required();
  replay->add_option("--duration", replay_duration, "seconds to simulate")->required();
  replay->add_option("--out", replay_out, "output CSV path")->required();

  std::string validate_path;
  CLI::App* validate = app.add_subcommand("validate", "check a config file");
  validate->add_option("--config", validate_path, "JSON config file")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (train->parsed()) return cmd_train(config_path, overrides, resume_path);
    if (eval_cmd->parsed())
      return cmd_eval(eval_ckpt, suite, eval_seeds, eval_ckpt_b, eval_terrain, eval_out);
    if (replay->parsed())
      return cmd_replay(replay_ckpt, replay_terrain, replay_duration, replay_out);
    if (validate->parsed()) return cmd_validate(validate_path);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
