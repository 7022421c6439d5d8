#include "loco/io/config.hpp"

#include <cmath>
#include <cstdlib>
#include <fstream>
#include <set>
#include <stdexcept>

namespace loco::io {

using json = nlohmann::json;
using ordered_json = nlohmann::ordered_json;

namespace {

// Tracks which keys were consumed so anything left over is rejected.
struct Reader {
  const json& j;
  std::string path;
  mutable std::set<std::string> used;

  Reader(const json& jj, std::string p) : j(jj), path(std::move(p)) {
    if (!j.is_object()) throw std::invalid_argument(path + ": expected an object");
  }

  template <typename T>
  void get(const char* key, T& out) const {
    auto it = j.find(key);
    if (it == j.end()) return;
    used.insert(key);
    try {
      out = it->get<T>();
    } catch (const json::exception&) {
      throw std::invalid_argument(path + "." + key + ": wrong type");
    }
  }

  template <typename T, std::size_t N>
  void get_array(const char* key, std::array<T, N>& out) const {
    auto it = j.find(key);
    if (it == j.end()) return;
    used.insert(key);
    if (!it->is_array() || it->size() != N)
      throw std::invalid_argument(path + "." + key + ": expected an array of " +
                                  std::to_string(N));
    for (std::size_t i = 0; i < N; ++i) out[i] = (*it)[i].get<T>();
  }

  const json* section(const char* key) const {
    auto it = j.find(key);
    if (it == j.end()) return nullptr;
    used.insert(key);
    return &*it;
  }

  void done() const {
    for (auto it = j.begin(); it != j.end(); ++it)
      if (!used.count(it.key()))
        throw std::invalid_argument(path + ": unknown key '" + it.key() + "'");
  }
};

template <typename Fn>
void with_section(const Reader& r, const char* key, Fn fn) {
  if (const json* sub = r.section(key)) {
    Reader sr(*sub, r.path + "." + std::string(key));
    fn(sr);
    sr.done();
  }
}

void read_robot(const Reader& r, sim::RobotConfig& c) {
  r.get("base_mass", c.base_mass);
  r.get_array("base_inertia", c.base_inertia);
  if (const json* sub = r.section("hip_offsets")) {
    if (!sub->is_array() || sub->size() != 4)
      throw std::invalid_argument(r.path + ".hip_offsets: expected 4 offsets");
    for (int leg = 0; leg < 4; ++leg)
      for (int k = 0; k < 3; ++k) c.hip_offsets[leg][k] = (*sub)[leg][k].get<double>();
  }
  r.get("thigh_length", c.thigh_length);
  r.get("calf_length", c.calf_length);
  r.get_array("stand_pose", c.stand_pose);
  r.get_array("joint_lower", c.joint_lower);
  r.get_array("joint_upper", c.joint_upper);
  r.get("torque_limit", c.torque_limit);
  r.get("reflected_inertia", c.reflected_inertia);
  r.get("body_height_target", c.body_height_target);
  r.get("foot_clearance_target", c.foot_clearance_target);
}

ordered_json robot_to_json(const sim::RobotConfig& c) {
  ordered_json j;
  j["base_mass"] = c.base_mass;
  j["base_inertia"] = c.base_inertia;
  j["hip_offsets"] = c.hip_offsets;
  j["thigh_length"] = c.thigh_length;
  j["calf_length"] = c.calf_length;
  j["stand_pose"] = c.stand_pose;
  j["joint_lower"] = c.joint_lower;
  j["joint_upper"] = c.joint_upper;
  j["torque_limit"] = c.torque_limit;
  j["reflected_inertia"] = c.reflected_inertia;
  j["body_height_target"] = c.body_height_target;
  j["foot_clearance_target"] = c.foot_clearance_target;
  return j;
}

}  // namespace

ordered_json config_to_json(const RunConfig& c) {
  ordered_json j;
  j["seed"] = c.seed;
  j["ablation"] = c.ablation;
  j["iterations"] = c.iterations;
  j["checkpoint_every"] = c.checkpoint_every;
  j["out_dir"] = c.out_dir;
  j["adaboot_reward_scale"] = c.adaboot_reward_scale;

  j["robot"] = robot_to_json(c.env.robot);

  j["pd"] = {{"kp", c.env.pd.kp},
             {"kd", c.env.pd.kd},
             {"control_hz", c.env.pd.control_hz},
             {"physics_hz", c.env.pd.physics_hz}};

  j["contact"] = {{"normal_stiffness", c.env.contact.normal_stiffness},
                  {"normal_damping", c.env.contact.normal_damping},
                  {"tangential_stiffness", c.env.contact.tangential_stiffness},
                  {"tangential_damping", c.env.contact.tangential_damping}};

  j["terrain"] = {{"extent", c.env.terrain.extent},
                  {"resolution", c.env.terrain.resolution},
                  {"rough_cell", c.env.terrain.rough_cell},
                  {"rough_amp_min", c.env.terrain.rough_amp_min},
                  {"rough_amp_max", c.env.terrain.rough_amp_max},
                  {"stair_run", c.env.terrain.stair_run},
                  {"stair_rise_min", c.env.terrain.stair_rise_min},
                  {"stair_rise_max", c.env.terrain.stair_rise_max},
                  {"stair_pad", c.env.terrain.stair_pad},
                  {"block_height_min", c.env.terrain.block_height_min},
                  {"block_height_max", c.env.terrain.block_height_max},
                  {"block_count", c.env.terrain.block_count},
                  {"friction", c.env.terrain.friction},
                  {"restitution", c.env.terrain.restitution}};

  j["domain_randomization"] = {{"payload_min", c.env.domain_rand.payload_min},
                               {"payload_max", c.env.domain_rand.payload_max},
                               {"kp_factor_min", c.env.domain_rand.kp_factor_min},
                               {"kp_factor_max", c.env.domain_rand.kp_factor_max},
                               {"kd_factor_min", c.env.domain_rand.kd_factor_min},
                               {"kd_factor_max", c.env.domain_rand.kd_factor_max},
                               {"motor_strength_min", c.env.domain_rand.motor_strength_min},
                               {"motor_strength_max", c.env.domain_rand.motor_strength_max},
                               {"com_shift_abs", c.env.domain_rand.com_shift_abs}};

  std::vector<std::string> kinds;
  for (auto k : c.env.terrain_kinds) kinds.push_back(sim::terrain_kind_name(k));
  j["terrain_kinds"] = kinds;

  j["commands"] = {{"vx_min", c.env.commands.vx_min},     {"vx_max", c.env.commands.vx_max},
                   {"vy_min", c.env.commands.vy_min},     {"vy_max", c.env.commands.vy_max},
                   {"yaw_min", c.env.commands.yaw_min},   {"yaw_max", c.env.commands.yaw_max},
                   {"deadband", c.env.commands.deadband}};

  j["observation_scales"] = {{"angular_velocity", c.env.scales.angular_velocity},
                             {"joint_velocity", c.env.scales.joint_velocity}};

  j["observation_noise"] = {{"enabled", c.env.noise.enabled},
                            {"angular_velocity", c.env.noise.angular_velocity},
                            {"gravity", c.env.noise.gravity},
                            {"joint_position", c.env.noise.joint_position},
                            {"joint_velocity", c.env.noise.joint_velocity}};

  j["action"] = {{"scale", c.env.action.scale}, {"clip", c.env.action.clip}};

  j["rewards"] = {{"lin_vel_tracking", c.env.rewards.lin_vel_tracking},
                  {"ang_vel_tracking", c.env.rewards.ang_vel_tracking},
                  {"lin_vel_z", c.env.rewards.lin_vel_z},
                  {"ang_vel_xy", c.env.rewards.ang_vel_xy},
                  {"orientation", c.env.rewards.orientation},
                  {"joint_accel", c.env.rewards.joint_accel},
                  {"joint_power", c.env.rewards.joint_power},
                  {"body_height", c.env.rewards.body_height},
                  {"foot_clearance", c.env.rewards.foot_clearance},
                  {"action_rate", c.env.rewards.action_rate},
                  {"action_smoothness", c.env.rewards.action_smoothness},
                  {"power_distribution", c.env.rewards.power_distribution}};

  j["curriculum"] = {{"promote_threshold", c.env.curriculum.promote_threshold},
                     {"demote_threshold", c.env.curriculum.demote_threshold},
                     {"max_level", c.env.curriculum.max_level}};

  j["episode"] = {{"seconds", c.env.episode_seconds},
                  {"command_resample_seconds", c.env.command_resample_seconds},
                  {"disturbance_max_force", c.env.disturbance_max_force},
                  {"disturbance_interval", c.env.disturbance_interval},
                  {"termination_tilt_deg", c.env.termination_tilt_rad * 180.0 / M_PI},
                  {"termination_base_clearance", c.env.termination_base_clearance}};

  j["ppo"] = {{"clip", c.ppo.clip},
              {"gae_lambda", c.ppo.gae_lambda},
              {"gamma", c.ppo.gamma},
              {"learning_rate", c.ppo.learning_rate},
              {"epochs", c.ppo.epochs},
              {"minibatches", c.ppo.minibatches},
              {"entropy_coef", c.ppo.entropy_coef},
              {"value_coef", c.ppo.value_coef},
              {"horizon", c.ppo.horizon},
              {"num_envs", c.ppo.num_envs},
              {"kl_stop", c.ppo.kl_stop},
              {"max_grad_norm", c.ppo.max_grad_norm}};

  j["estimator"] = {{"beta", c.estimator.beta},
                    {"sigma_floor", c.estimator.sigma_floor},
                    {"learning_rate", c.estimator.learning_rate},
                    {"minibatches", c.estimator.minibatches},
                    {"max_grad_norm", c.estimator.max_grad_norm}};

  j["eval"] = {{"ate_duration", c.eval.ate_duration},
               {"ate_resample", c.eval.ate_resample},
               {"ate_seeds", c.eval.ate_seeds},
               {"push_interval", c.eval.push_interval},
               {"push_trials", c.eval.push_trials},
               {"push_trial_seconds", c.eval.push_trial_seconds},
               {"push_sweep_start", c.eval.push_sweep_start},
               {"push_sweep_step", c.eval.push_sweep_step},
               {"push_sweep_max", c.eval.push_sweep_max},
               {"survival_duration", c.eval.survival_duration},
               {"survival_trials", c.eval.survival_trials},
               {"estimation_duration", c.eval.estimation_duration}};

  return j;
}

RunConfig config_from_json(const json& j) {
  RunConfig c;
  Reader r(j, "config");

  if (j.contains("seed")) {
    c.seed_set = true;
    r.get("seed", c.seed);
  }
  r.get("ablation", c.ablation);
  r.get("iterations", c.iterations);
  r.get("checkpoint_every", c.checkpoint_every);
  r.get("out_dir", c.out_dir);
  r.get("adaboot_reward_scale", c.adaboot_reward_scale);

  with_section(r, "robot", [&](const Reader& s) { read_robot(s, c.env.robot); });

  with_section(r, "pd", [&](const Reader& s) {
    s.get("kp", c.env.pd.kp);
    s.get("kd", c.env.pd.kd);
    s.get("control_hz", c.env.pd.control_hz);
    s.get("physics_hz", c.env.pd.physics_hz);
  });

  with_section(r, "contact", [&](const Reader& s) {
    s.get("normal_stiffness", c.env.contact.normal_stiffness);
    s.get("normal_damping", c.env.contact.normal_damping);
    s.get("tangential_stiffness", c.env.contact.tangential_stiffness);
    s.get("tangential_damping", c.env.contact.tangential_damping);
  });

  with_section(r, "terrain", [&](const Reader& s) {
    s.get("extent", c.env.terrain.extent);
    s.get("resolution", c.env.terrain.resolution);
    s.get("rough_cell", c.env.terrain.rough_cell);
    s.get("rough_amp_min", c.env.terrain.rough_amp_min);
    s.get("rough_amp_max", c.env.terrain.rough_amp_max);
    s.get("stair_run", c.env.terrain.stair_run);
    s.get("stair_rise_min", c.env.terrain.stair_rise_min);
    s.get("stair_rise_max", c.env.terrain.stair_rise_max);
    s.get("stair_pad", c.env.terrain.stair_pad);
    s.get("block_height_min", c.env.terrain.block_height_min);
    s.get("block_height_max", c.env.terrain.block_height_max);
    s.get("block_count", c.env.terrain.block_count);
    s.get("friction", c.env.terrain.friction);
    s.get("restitution", c.env.terrain.restitution);
  });

  with_section(r, "domain_randomization", [&](const Reader& s) {
    s.get("payload_min", c.env.domain_rand.payload_min);
    s.get("payload_max", c.env.domain_rand.payload_max);
    s.get("kp_factor_min", c.env.domain_rand.kp_factor_min);
    s.get("kp_factor_max", c.env.domain_rand.kp_factor_max);
    s.get("kd_factor_min", c.env.domain_rand.kd_factor_min);
    s.get("kd_factor_max", c.env.domain_rand.kd_factor_max);
    s.get("motor_strength_min", c.env.domain_rand.motor_strength_min);
    s.get("motor_strength_max", c.env.domain_rand.motor_strength_max);
    s.get("com_shift_abs", c.env.domain_rand.com_shift_abs);
  });

  if (const json* kinds = r.section("terrain_kinds")) {
    if (!kinds->is_array() || kinds->empty())
      throw std::invalid_argument("config.terrain_kinds: expected a non-empty array");
    c.env.terrain_kinds.clear();
    for (const auto& k : *kinds)
      c.env.terrain_kinds.push_back(sim::terrain_kind_from_name(k.get<std::string>()));
  }

  with_section(r, "commands", [&](const Reader& s) {
    s.get("vx_min", c.env.commands.vx_min);
    s.get("vx_max", c.env.commands.vx_max);
    s.get("vy_min", c.env.commands.vy_min);
    s.get("vy_max", c.env.commands.vy_max);
    s.get("yaw_min", c.env.commands.yaw_min);
    s.get("yaw_max", c.env.commands.yaw_max);
    s.get("deadband", c.env.commands.deadband);
  });

  with_section(r, "observation_scales", [&](const Reader& s) {
    s.get("angular_velocity", c.env.scales.angular_velocity);
    s.get("joint_velocity", c.env.scales.joint_velocity);
  });

  with_section(r, "observation_noise", [&](const Reader& s) {
    s.get("enabled", c.env.noise.enabled);
    s.get("angular_velocity", c.env.noise.angular_velocity);
    s.get("gravity", c.env.noise.gravity);
    s.get("joint_position", c.env.noise.joint_position);
    s.get("joint_velocity", c.env.noise.joint_velocity);
  });

  with_section(r, "action", [&](const Reader& s) {
    s.get("scale", c.env.action.scale);
    s.get("clip", c.env.action.clip);
  });

  with_section(r, "rewards", [&](const Reader& s) {
    s.get("lin_vel_tracking", c.env.rewards.lin_vel_tracking);
    s.get("ang_vel_tracking", c.env.rewards.ang_vel_tracking);
    s.get("lin_vel_z", c.env.rewards.lin_vel_z);
    s.get("ang_vel_xy", c.env.rewards.ang_vel_xy);
    s.get("orientation", c.env.rewards.orientation);
    s.get("joint_accel", c.env.rewards.joint_accel);
    s.get("joint_power", c.env.rewards.joint_power);
    s.get("body_height", c.env.rewards.body_height);
    s.get("foot_clearance", c.env.rewards.foot_clearance);
    s.get("action_rate", c.env.rewards.action_rate);
    s.get("action_smoothness", c.env.rewards.action_smoothness);
    s.get("power_distribution", c.env.rewards.power_distribution);
  });

  with_section(r, "curriculum", [&](const Reader& s) {
    s.get("promote_threshold", c.env.curriculum.promote_threshold);
    s.get("demote_threshold", c.env.curriculum.demote_threshold);
    s.get("max_level", c.env.curriculum.max_level);
  });

  with_section(r, "episode", [&](const Reader& s) {
    s.get("seconds", c.env.episode_seconds);
    s.get("command_resample_seconds", c.env.command_resample_seconds);
    s.get("disturbance_max_force", c.env.disturbance_max_force);
    s.get("disturbance_interval", c.env.disturbance_interval);
    double tilt_deg = c.env.termination_tilt_rad * 180.0 / M_PI;
    s.get("termination_tilt_deg", tilt_deg);
    c.env.termination_tilt_rad = tilt_deg * M_PI / 180.0;
    s.get("termination_base_clearance", c.env.termination_base_clearance);
  });

  with_section(r, "ppo", [&](const Reader& s) {
    s.get("clip", c.ppo.clip);
    s.get("gae_lambda", c.ppo.gae_lambda);
    s.get("gamma", c.ppo.gamma);
    s.get("learning_rate", c.ppo.learning_rate);
    s.get("epochs", c.ppo.epochs);
    s.get("minibatches", c.ppo.minibatches);
    s.get("entropy_coef", c.ppo.entropy_coef);
    s.get("value_coef", c.ppo.value_coef);
    s.get("horizon", c.ppo.horizon);
    s.get("num_envs", c.ppo.num_envs);
    s.get("kl_stop", c.ppo.kl_stop);
    s.get("max_grad_norm", c.ppo.max_grad_norm);
  });

  with_section(r, "estimator", [&](const Reader& s) {
    s.get("beta", c.estimator.beta);
    s.get("sigma_floor", c.estimator.sigma_floor);
    s.get("learning_rate", c.estimator.learning_rate);
    s.get("minibatches", c.estimator.minibatches);
    s.get("max_grad_norm", c.estimator.max_grad_norm);
  });

  with_section(r, "eval", [&](const Reader& s) {
    s.get("ate_duration", c.eval.ate_duration);
    s.get("ate_resample", c.eval.ate_resample);
    s.get("ate_seeds", c.eval.ate_seeds);
    s.get("push_interval", c.eval.push_interval);
    s.get("push_trials", c.eval.push_trials);
    s.get("push_trial_seconds", c.eval.push_trial_seconds);
    s.get("push_sweep_start", c.eval.push_sweep_start);
    s.get("push_sweep_step", c.eval.push_sweep_step);
    s.get("push_sweep_max", c.eval.push_sweep_max);
    s.get("survival_duration", c.eval.survival_duration);
    s.get("survival_trials", c.eval.survival_trials);
    s.get("estimation_duration", c.eval.estimation_duration);
  });

  r.done();
  return c;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read config file: " + path);
  json j;
  try {
    in >> j;
  } catch (const json::exception& e) {
    throw std::runtime_error("config parse error in " + path + ": " + e.what());
  }
  return config_from_json(j);
}

ValidationResult validate_config(const RunConfig& c) {
  ValidationResult v;
  auto err = [&](const std::string& m) { v.errors.push_back(m); };
  auto warn = [&](const std::string& m) { v.warnings.push_back(m); };

  if (!c.seed_set) err("seed: required field missing");
  try {
    rl::estimator_arch_from_ablation(c.ablation);
  } catch (const std::exception&) {
    err("ablation: must be one of full, no-adaboot, estimator-only, baseline-no-estimator");
  }
  if (c.iterations < 0) err("iterations: must be >= 0");
  if (c.checkpoint_every < 1) err("checkpoint_every: must be >= 1");
  if (c.adaboot_reward_scale <= 0.0) err("adaboot_reward_scale: must be > 0");

  const auto& e = c.env;
  if (e.robot.base_mass <= 0.0) err("robot.base_mass: must be > 0");
  for (double i : e.robot.base_inertia)
    if (i <= 0.0) err("robot.base_inertia: entries must be > 0");
  if (e.robot.thigh_length <= 0.0 || e.robot.calf_length <= 0.0)
    err("robot: link lengths must be > 0");
  if (e.robot.torque_limit <= 0.0) err("robot.torque_limit: must be > 0");
  if (e.robot.reflected_inertia <= 0.0) err("robot.reflected_inertia: must be > 0");
  for (int i = 0; i < sim::kNumJoints; ++i) {
    const int k = i % sim::kJointsPerLeg;
    if (e.robot.stand_pose[i] < e.robot.joint_lower[k] ||
        e.robot.stand_pose[i] > e.robot.joint_upper[k]) {
      err("robot.stand_pose: joint " + std::to_string(i) + " outside its limits");
      break;
    }
  }
  if (e.pd.control_hz <= 0 || e.pd.physics_hz <= 0) err("pd: rates must be > 0");
  else if (std::fmod(e.pd.physics_hz, e.pd.control_hz) != 0.0)
    err("pd.physics_hz: must be an integer multiple of control_hz");
  if (e.terrain.resolution <= 0.0 || e.terrain.rough_cell <= 0.0)
    err("terrain: resolutions must be > 0");
  if (e.terrain.extent <= 1.0) err("terrain.extent: must exceed 1 m");
  if (e.curriculum.max_level < 0 || e.curriculum.max_level >= sim::kTerrainLevels)
    err("curriculum.max_level: must be in [0, 9]");
  if (e.curriculum.demote_threshold >= e.curriculum.promote_threshold)
    err("curriculum: demote_threshold must be below promote_threshold");
  if (e.curriculum.promote_threshold > 1.0 || e.curriculum.demote_threshold < 0.0)
    err("curriculum: thresholds must lie in [0, 1]");
  if (e.episode_seconds <= 0.0) err("episode.seconds: must be > 0");
  if (e.disturbance_interval <= 0.0) err("episode.disturbance_interval: must be > 0");
  if (e.commands.vx_min > e.commands.vx_max || e.commands.vy_min > e.commands.vy_max ||
      e.commands.yaw_min > e.commands.yaw_max)
    err("commands: min must not exceed max");
  if (e.action.scale <= 0.0) err("action.scale: must be > 0");
  if (e.rewards.lin_vel_tracking < 0.0 || e.rewards.ang_vel_tracking < 0.0)
    err("rewards: tracking weights must be >= 0");

  const auto& p = c.ppo;
  if (p.clip <= 0.0 || p.clip >= 1.0) err("ppo.clip: must lie in (0, 1)");
  if (p.gae_lambda <= 0.0 || p.gae_lambda >= 1.0) err("ppo.gae_lambda: must lie in (0, 1)");
  if (p.gamma <= 0.0 || p.gamma >= 1.0) err("ppo.gamma: must lie in (0, 1)");
  if (p.learning_rate <= 0.0) err("ppo.learning_rate: must be > 0");
  if (p.epochs < 1) err("ppo.epochs: must be >= 1");
  if (p.minibatches < 1) err("ppo.minibatches: must be >= 1");
  if (p.horizon < 1) err("ppo.horizon: must be >= 1");
  if (p.num_envs < 2) err("ppo.num_envs: needs at least 2 (reward-variance bootstrap)");
  else if (static_cast<std::int64_t>(p.num_envs) * p.horizon % std::max(p.minibatches, 1) != 0)
    err("ppo: num_envs * horizon must divide evenly into minibatches");

  if (c.estimator.beta < 0.0) err("estimator.beta: must be >= 0");
  if (c.estimator.sigma_floor <= 0.0) err("estimator.sigma_floor: must be > 0");
  if (c.estimator.minibatches < 1) err("estimator.minibatches: must be >= 1");

  const auto& ev = c.eval;
  if (ev.ate_seeds < 1 || ev.push_trials < 1 || ev.survival_trials < 1)
    err("eval: trial and seed counts must be >= 1");
  if (ev.ate_duration <= 0.0 || ev.push_trial_seconds <= 0.0 || ev.survival_duration <= 0.0)
    err("eval: durations must be > 0");
  if (ev.push_sweep_step <= 0.0 || ev.push_sweep_max < ev.push_sweep_start)
    err("eval: push sweep must be increasing");

  // advisory sanity checks: legal, but probably not what you meant
  if (e.domain_rand.payload_min < -5.0 || e.domain_rand.payload_max > 10.0)
    warn("domain_randomization.payload: range far outside the documented [-1, 2] kg");
  if (e.domain_rand.kp_factor_min < 0.5 || e.domain_rand.kp_factor_max > 2.0)
    warn("domain_randomization.kp_factor: range far outside the documented [0.9, 1.1]");
  if (e.domain_rand.kd_factor_min < 0.5 || e.domain_rand.kd_factor_max > 2.0)
    warn("domain_randomization.kd_factor: range far outside the documented [0.9, 1.1]");
  if (e.domain_rand.motor_strength_min < 0.5 || e.domain_rand.motor_strength_max > 2.0)
    warn("domain_randomization.motor_strength: range far outside the documented [0.9, 1.1]");
  if (std::fabs(e.domain_rand.com_shift_abs) > 0.2)
    warn("domain_randomization.com_shift_abs: beyond 20 cm is physically dubious");
  if (e.disturbance_max_force > 100.0)
    warn("episode.disturbance_max_force: over 100 N will rarely be survivable");
  if (e.action.scale > 1.0) warn("action.scale: over 1 rad per unit is very aggressive");
  if (e.robot.base_mass < 2.0 || e.robot.base_mass > 100.0)
    warn("robot.base_mass: outside the plausible quadruped range");

  return v;
}

void apply_override(json& j, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos)
    throw std::invalid_argument("override must look like key.path=value: " + assignment);
  const std::string path = assignment.substr(0, eq);
  const std::string value = assignment.substr(eq + 1);

  json* node = &j;
  std::size_t start = 0;
  while (true) {
    const std::size_t dot = path.find('.', start);
    const std::string key = path.substr(start, dot - start);
    if (key.empty()) throw std::invalid_argument("bad override path: " + path);
    if (dot == std::string::npos) {
      json parsed;
      try {
        parsed = json::parse(value);
      } catch (const json::exception&) {
        parsed = value;  // plain string
      }
      (*node)[key] = parsed;
      return;
    }
    node = &(*node)[key];
    start = dot + 1;
  }
}

std::string resolve_out_dir(const RunConfig& config) {
  if (!config.out_dir.empty()) return config.out_dir;
  if (const char* root = std::getenv("LOCO_OUT_ROOT")) return root;
  return "runs";
}

}  // namespace loco::io
