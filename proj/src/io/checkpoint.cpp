#include "loco/io/checkpoint.hpp"

#include <fstream>
#include <stdexcept>

namespace loco::io {

using json = nlohmann::json;

json mlp_to_json(const nn::Mlp& net) {
  json j;
  j["layer_sizes"] = net.layer_sizes;
  j["activation"] = nn::activation_name(net.activation);
  j["activate_output"] = net.activate_output;
  json ws = json::array(), bs = json::array();
  for (const auto& w : net.weights) ws.push_back(w.values);
  for (const auto& b : net.biases) bs.push_back(b.values);
  j["weights"] = std::move(ws);
  j["biases"] = std::move(bs);
  return j;
}

void mlp_from_json(const json& j, nn::Mlp& net) {
  net.layer_sizes = j.at("layer_sizes").get<std::vector<int>>();
  net.activation = nn::activation_from_name(j.at("activation").get<std::string>());
  net.activate_output = j.at("activate_output").get<bool>();
  net.weights.clear();
  net.biases.clear();
  const json& ws = j.at("weights");
  const json& bs = j.at("biases");
  if (ws.size() + 1 != net.layer_sizes.size() || bs.size() != ws.size())
    throw std::runtime_error("checkpoint mlp: layer count mismatch");
  for (std::size_t l = 0; l < ws.size(); ++l) {
    nn::Tensor w = nn::Tensor::zeros({net.layer_sizes[l], net.layer_sizes[l + 1]});
    nn::Tensor b = nn::Tensor::zeros({1, net.layer_sizes[l + 1]});
    const auto wv = ws[l].get<std::vector<double>>();
    const auto bv = bs[l].get<std::vector<double>>();
    if (wv.size() != w.values.size() || bv.size() != b.values.size())
      throw std::runtime_error("checkpoint mlp: parameter size mismatch");
    w.values = wv;
    b.values = bv;
    net.weights.push_back(std::move(w));
    net.biases.push_back(std::move(b));
  }
}

json adam_to_json(const nn::Adam& opt) {
  json j;
  j["step"] = opt.step_count();
  j["learning_rate"] = opt.config().learning_rate;
  j["beta1"] = opt.config().beta1;
  j["beta2"] = opt.config().beta2;
  j["epsilon"] = opt.config().epsilon;
  j["m"] = opt.moments_m();
  j["v"] = opt.moments_v();
  return j;
}

void adam_from_json(const json& j, nn::Adam& opt) {
  opt.config().learning_rate = j.at("learning_rate").get<double>();
  opt.config().beta1 = j.at("beta1").get<double>();
  opt.config().beta2 = j.at("beta2").get<double>();
  opt.config().epsilon = j.at("epsilon").get<double>();
  opt.restore(j.at("step").get<std::int64_t>(),
              j.at("m").get<std::vector<std::vector<double>>>(),
              j.at("v").get<std::vector<std::vector<double>>>());
}

json sim_state_to_json(const sim::SimState& s) {
  json j;
  j["time"] = s.time;
  j["base_position"] = s.base_position;
  j["base_orientation"] = s.base_orientation;
  j["linear_velocity"] = s.linear_velocity;
  j["angular_velocity"] = s.angular_velocity;
  j["joint_positions"] = s.joint_positions;
  j["joint_velocities"] = s.joint_velocities;
  j["applied_torques"] = s.applied_torques;
  j["disturbance"] = s.disturbance;
  j["gravity_body"] = s.gravity_body;
  j["fault"] = s.fault;
  json feet = json::array();
  for (const auto& f : s.feet) {
    feet.push_back({{"position_world", f.position_world},
                    {"velocity_world", f.velocity_world},
                    {"force_world", f.force_world},
                    {"in_contact", f.in_contact},
                    {"anchor", f.anchor},
                    {"anchored", f.anchored}});
  }
  j["feet"] = std::move(feet);
  return j;
}

sim::SimState sim_state_from_json(const json& j) {
  sim::SimState s;
  s.time = j.at("time").get<double>();
  s.base_position = j.at("base_position").get<sim::Vec3>();
  s.base_orientation = j.at("base_orientation").get<sim::Quat>();
  s.linear_velocity = j.at("linear_velocity").get<sim::Vec3>();
  s.angular_velocity = j.at("angular_velocity").get<sim::Vec3>();
  s.joint_positions = j.at("joint_positions").get<sim::Vec12>();
  s.joint_velocities = j.at("joint_velocities").get<sim::Vec12>();
  s.applied_torques = j.at("applied_torques").get<sim::Vec12>();
  s.disturbance = j.at("disturbance").get<sim::Vec3>();
  s.gravity_body = j.at("gravity_body").get<sim::Vec3>();
  s.fault = j.at("fault").get<bool>();
  const json& feet = j.at("feet");
  for (int i = 0; i < sim::kNumLegs; ++i) {
    const json& f = feet.at(i);
    s.feet[i].position_world = f.at("position_world").get<sim::Vec3>();
    s.feet[i].velocity_world = f.at("velocity_world").get<sim::Vec3>();
    s.feet[i].force_world = f.at("force_world").get<sim::Vec3>();
    s.feet[i].in_contact = f.at("in_contact").get<bool>();
    s.feet[i].anchor = f.at("anchor").get<std::array<double, 2>>();
    s.feet[i].anchored = f.at("anchored").get<bool>();
  }
  return s;
}

json env_slot_to_json(const rl::EnvSlot& slot) {
  json j;
  j["terrain_kind"] = sim::terrain_kind_name(slot.curriculum.kind);
  j["terrain_level"] = slot.curriculum.level;
  j["terrain_seed"] = slot.terrain_seed;
  j["curriculum_promotions"] = slot.curriculum.promotions;
  j["curriculum_demotions"] = slot.curriculum.demotions;
  j["domain"] = {{"payload", slot.domain.payload},
                 {"kp_factor", slot.domain.kp_factor},
                 {"kd_factor", slot.domain.kd_factor},
                 {"motor_strength", slot.domain.motor_strength},
                 {"com_shift", slot.domain.com_shift}};
  j["state"] = sim_state_to_json(slot.state);
  j["disturbance_schedule"] = {{"max_force", slot.disturbance.max_force},
                               {"resample_interval", slot.disturbance.resample_interval},
                               {"next_resample", slot.disturbance.next_resample},
                               {"current", slot.disturbance.current}};
  j["command"] = {slot.command.vx, slot.command.vy, slot.command.yaw_rate};
  json frames = json::array();
  for (int f = 0; f < task::kTemporalFrames; ++f) frames.push_back(slot.stack.frame(f));
  j["stack"] = std::move(frames);
  j["observation"] = slot.observation;
  j["prev_action"] = slot.prev_action;
  j["prev_prev_action"] = slot.prev_prev_action;
  j["rng"] = slot.rng.serialize();
  j["episode_steps"] = slot.episode_steps;
  j["episode_reward"] = slot.episode_reward;
  j["tracking_sum"] = slot.tracking_sum;
  j["next_command_time"] = slot.next_command_time;
  j["last_episode_reward"] = slot.last_episode_reward;
  j["completed_episode"] = slot.completed_episode;
  j["episodes_done"] = slot.episodes_done;
  return j;
}

void env_slot_from_json(const json& j, const sim::TerrainConfig& terrain_config,
                        rl::EnvSlot& slot) {
  slot.curriculum.kind = sim::terrain_kind_from_name(j.at("terrain_kind").get<std::string>());
  slot.curriculum.level = j.at("terrain_level").get<int>();
  slot.terrain_seed = j.at("terrain_seed").get<std::uint64_t>();
  slot.curriculum.promotions = j.at("curriculum_promotions").get<std::int64_t>();
  slot.curriculum.demotions = j.at("curriculum_demotions").get<std::int64_t>();
  slot.terrain = sim::terrain_generate(slot.curriculum.kind, slot.curriculum.level,
                                       slot.terrain_seed, terrain_config);
  const json& d = j.at("domain");
  slot.domain.payload = d.at("payload").get<double>();
  slot.domain.kp_factor = d.at("kp_factor").get<double>();
  slot.domain.kd_factor = d.at("kd_factor").get<double>();
  slot.domain.motor_strength = d.at("motor_strength").get<double>();
  slot.domain.com_shift = d.at("com_shift").get<sim::Vec3>();
  slot.state = sim_state_from_json(j.at("state"));
  const json& ds = j.at("disturbance_schedule");
  slot.disturbance.max_force = ds.at("max_force").get<double>();
  slot.disturbance.resample_interval = ds.at("resample_interval").get<double>();
  slot.disturbance.next_resample = ds.at("next_resample").get<double>();
  slot.disturbance.current = ds.at("current").get<sim::Vec3>();
  const json& cmd = j.at("command");
  slot.command.vx = cmd.at(0).get<double>();
  slot.command.vy = cmd.at(1).get<double>();
  slot.command.yaw_rate = cmd.at(2).get<double>();
  const json& frames = j.at("stack");
  // frames are newest first; replay oldest -> newest
  slot.stack.reset(frames.at(task::kTemporalFrames - 1).get<task::Observation>());
  for (int f = task::kTemporalFrames - 2; f >= 0; --f)
    slot.stack.push(frames.at(f).get<task::Observation>());
  slot.observation = j.at("observation").get<task::Observation>();
  slot.prev_action = j.at("prev_action").get<task::Action>();
  slot.prev_prev_action = j.at("prev_prev_action").get<task::Action>();
  slot.rng.deserialize(j.at("rng").get<std::string>());
  slot.episode_steps = j.at("episode_steps").get<int>();
  slot.episode_reward = j.at("episode_reward").get<double>();
  slot.tracking_sum = j.at("tracking_sum").get<double>();
  slot.next_command_time = j.at("next_command_time").get<double>();
  slot.last_episode_reward = j.at("last_episode_reward").get<double>();
  slot.completed_episode = j.at("completed_episode").get<bool>();
  slot.episodes_done = j.at("episodes_done").get<std::int64_t>();
}

json nets_to_json(const rl::PolicyNet& policy, const rl::ValueNet& value,
                  const rl::ContextEstimator& estimator) {
  json j;
  j["policy"] = {{"trunk", mlp_to_json(policy.trunk)}, {"log_std", policy.head.log_std.values}};
  j["value"] = mlp_to_json(value.net);
  json e;
  switch (estimator.arch) {
    case rl::EstimatorArch::ContextVae:
      e["arch"] = "context-vae";
      break;
    case rl::EstimatorArch::VelocityOnly:
      e["arch"] = "velocity-only";
      break;
    case rl::EstimatorArch::None:
      e["arch"] = "none";
      break;
  }
  e["encoder"] = mlp_to_json(estimator.encoder);
  e["velocity_head"] = mlp_to_json(estimator.velocity_head);
  e["latent_mu"] = mlp_to_json(estimator.latent_mu);
  e["latent_log_sigma"] = mlp_to_json(estimator.latent_log_sigma);
  e["decoder"] = mlp_to_json(estimator.decoder);
  j["estimator"] = std::move(e);
  return j;
}

void nets_from_json(const json& j, rl::PolicyNet& policy, rl::ValueNet& value,
                    rl::ContextEstimator& estimator) {
  mlp_from_json(j.at("policy").at("trunk"), policy.trunk);
  const auto ls = j.at("policy").at("log_std").get<std::vector<double>>();
  policy.head.log_std = nn::Tensor::row(ls);
  mlp_from_json(j.at("value"), value.net);
  const json& e = j.at("estimator");
  const std::string arch = e.at("arch").get<std::string>();
  if (arch == "context-vae") estimator.arch = rl::EstimatorArch::ContextVae;
  else if (arch == "velocity-only") estimator.arch = rl::EstimatorArch::VelocityOnly;
  else if (arch == "none") estimator.arch = rl::EstimatorArch::None;
  else throw std::runtime_error("checkpoint: unknown estimator arch " + arch);
  mlp_from_json(e.at("encoder"), estimator.encoder);
  mlp_from_json(e.at("velocity_head"), estimator.velocity_head);
  mlp_from_json(e.at("latent_mu"), estimator.latent_mu);
  mlp_from_json(e.at("latent_log_sigma"), estimator.latent_log_sigma);
  mlp_from_json(e.at("decoder"), estimator.decoder);
}

void check_checkpoint_version(const json& j, const std::string& path) {
  if (!j.contains("format_version"))
    throw std::runtime_error(path + ": not a checkpoint (missing format_version)");
  const int v = j.at("format_version").get<int>();
  if (v != kCheckpointFormatVersion)
    throw std::runtime_error(path + ": checkpoint format version " + std::to_string(v) +
                             " is not supported (this build reads version " +
                             std::to_string(kCheckpointFormatVersion) + ")");
}

PolicyBundle load_policy_bundle(const std::string& path) {
  const json j = read_json_file(path);
  check_checkpoint_version(j, path);
  PolicyBundle b;
  b.config = config_from_json(j.at("config"));
  b.iteration = j.at("iteration").get<std::int64_t>();
  nets_from_json(j.at("nets"), b.policy, b.value, b.estimator);
  return b;
}

json read_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read: " + path);
  json j;
  in >> j;
  return j;
}

void write_json_file(const std::string& path, const json& j) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write: " + path);
  out << j.dump();
  out << '\n';
  if (!out) throw std::runtime_error("write failed: " + path);
}

}  // namespace loco::io
