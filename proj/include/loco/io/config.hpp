#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "loco/rl/estimator.hpp"
#include "loco/rl/ppo.hpp"
#include "loco/rl/rollout.hpp"

namespace loco::io {

struct EvalConfig {
  double ate_duration = 600.0;       // s of commanded walking per seed
  double ate_resample = 10.0;        // s between command draws
  int ate_seeds = 5;
  double push_interval = 1.0;        // s between pushes
  int push_trials = 5;               // trials per candidate magnitude
  double push_trial_seconds = 30.0;  // survive this long to pass a trial
  double push_sweep_start = 0.1;     // m/s
  double push_sweep_step = 0.1;
  double push_sweep_max = 2.0;
  double survival_duration = 1800.0;  // s of random walking
  int survival_trials = 3;
  double estimation_duration = 30.0;  // s on stairs for the error trace
};

// Every tunable of the artifact with the documented defaults.
struct RunConfig {
  std::uint64_t seed = 0;
  bool seed_set = false;  // seed is the one field a config file must provide
  std::string ablation = "full";  // full | no-adaboot | estimator-only | baseline-no-estimator
  int iterations = 300;
  int checkpoint_every = 50;
  std::string out_dir;            // empty -> $LOCO_OUT_ROOT or ./runs
  double adaboot_reward_scale = 1.0;
  rl::EnvSetup env;
  rl::PpoConfig ppo;
  rl::EstimatorConfig estimator;
  EvalConfig eval;
};

struct ValidationResult {
  std::vector<std::string> errors;
  std::vector<std::string> warnings;
  bool ok() const { return errors.empty(); }
};

nlohmann::ordered_json config_to_json(const RunConfig& config);
// strict: unknown keys and type mismatches are errors; absent keys keep
// defaults except `seed`, which is required
RunConfig config_from_json(const nlohmann::json& j);
RunConfig load_config(const std::string& path);

// hard range/type errors plus advisory warnings for physically odd values
ValidationResult validate_config(const RunConfig& config);

// `path.to.key=value` applied onto the JSON form, then re-parsed strictly
void apply_override(nlohmann::json& j, const std::string& assignment);

std::string resolve_out_dir(const RunConfig& config);

}  // namespace loco::io
