#include "loco/task/task.hpp"

#include <algorithm>
#include <cmath>

#include "loco/sim/math3d.hpp"

namespace loco::task {

Command sample_command(nn::Rng& rng, const CommandRanges& ranges) {
  Command c;
  c.vx = rng.uniform(ranges.vx_min, ranges.vx_max);
  c.vy = rng.uniform(ranges.vy_min, ranges.vy_max);
  c.yaw_rate = rng.uniform(ranges.yaw_min, ranges.yaw_max);
  if (std::fabs(c.vx) < ranges.deadband) c.vx = 0.0;
  if (std::fabs(c.vy) < ranges.deadband) c.vy = 0.0;
  if (std::fabs(c.yaw_rate) < ranges.deadband) c.yaw_rate = 0.0;
  return c;
}

Observation assemble_observation(const sim::SimState& sim, const Command& command,
                                 const Action& prev_action, const ObservationScales& scales,
                                 const ObservationNoise& noise, nn::Rng& rng) {
  Observation o{};
  double omega[3], grav[3], q[12], dq[12];
  for (int i = 0; i < 3; ++i) {
    omega[i] = sim.angular_velocity[i];
    grav[i] = sim.gravity_body[i];
  }
  for (int i = 0; i < 12; ++i) {
    q[i] = sim.joint_positions[i];
    dq[i] = sim.joint_velocities[i];
  }
  if (noise.enabled) {
    for (int i = 0; i < 3; ++i) {
      omega[i] += rng.uniform(-noise.angular_velocity, noise.angular_velocity);
      grav[i] += rng.uniform(-noise.gravity, noise.gravity);
    }
    for (int i = 0; i < 12; ++i) {
      q[i] += rng.uniform(-noise.joint_position, noise.joint_position);
      dq[i] += rng.uniform(-noise.joint_velocity, noise.joint_velocity);
    }
  }
  int k = 0;
  for (int i = 0; i < 3; ++i) o[k++] = omega[i] * scales.angular_velocity;
  for (int i = 0; i < 3; ++i) o[k++] = grav[i];
  o[k++] = command.vx;
  o[k++] = command.vy;
  o[k++] = command.yaw_rate;
  for (int i = 0; i < 12; ++i) o[k++] = q[i];
  for (int i = 0; i < 12; ++i) o[k++] = dq[i] * scales.joint_velocity;
  for (int i = 0; i < 12; ++i) o[k++] = prev_action[i];
  return o;
}

Privileged assemble_privileged(const Observation& obs, const sim::SimState& sim,
                               const sim::TerrainMap& terrain) {
  Privileged s{};
  int k = 0;
  for (double v : obs) s[k++] = v;
  for (int i = 0; i < 3; ++i) s[k++] = sim.linear_velocity[i];
  for (int i = 0; i < 3; ++i) s[k++] = sim.disturbance[i];
  const auto scan = sim::height_scan(sim, terrain);
  for (double h : scan) s[k++] = h;
  return s;
}

void TemporalObservation::reset(const Observation& first) {
  for (auto& f : frames_) f = first;
  initialized_ = true;
}

void TemporalObservation::push(const Observation& obs) {
  if (!initialized_) {
    reset(obs);
    return;
  }
  for (int i = kTemporalFrames - 1; i > 0; --i) frames_[i] = frames_[i - 1];
  frames_[0] = obs;
}

std::vector<double> TemporalObservation::flatten() const {
  std::vector<double> flat(kTemporalDim);
  int k = 0;
  for (const auto& f : frames_)
    for (double v : f) flat[k++] = v;
  return flat;
}

sim::Vec12 action_to_target(const Action& action, const sim::RobotConfig& robot,
                            const ActionConfig& config) {
  sim::Vec12 target;
  for (int i = 0; i < kActionDim; ++i) {
    const double a = std::clamp(action[i], -config.clip, config.clip);
    double t = robot.stand_pose[i] + config.scale * a;
    const int j = i % sim::kJointsPerLeg;
    target[i] = std::clamp(t, robot.joint_lower[j], robot.joint_upper[j]);
  }
  return target;
}

const std::array<std::string, kNumRewardTerms>& RewardBreakdown::term_names() {
  static const std::array<std::string, kNumRewardTerms> names = {
      "lin_vel_tracking", "ang_vel_tracking", "lin_vel_z",   "ang_vel_xy",
      "orientation",      "joint_accel",      "joint_power", "body_height",
      "foot_clearance",   "action_rate",      "action_smoothness", "power_distribution"};
  return names;
}

RewardBreakdown compute_reward(const sim::SimState& before, const sim::SimState& after,
                               const Action& action, const Action& prev_action,
                               const Action& prev_prev_action, const Command& command,
                               const sim::RobotConfig& robot, const sim::TerrainMap& terrain,
                               const RewardWeights& weights, double control_dt) {
  RewardBreakdown r;

  // tracking terms use the post-step body twist
  const double evx = command.vx - after.linear_velocity[0];
  const double evy = command.vy - after.linear_velocity[1];
  r.lin_vel_tracking = weights.lin_vel_tracking * std::exp(-4.0 * (evx * evx + evy * evy));
  const double eyaw = command.yaw_rate - after.angular_velocity[2];
  r.ang_vel_tracking = weights.ang_vel_tracking * std::exp(-4.0 * eyaw * eyaw);

  const double vz = after.linear_velocity[2];
  r.lin_vel_z = weights.lin_vel_z * vz * vz;

  const double wx = after.angular_velocity[0], wy = after.angular_velocity[1];
  r.ang_vel_xy = weights.ang_vel_xy * (wx * wx + wy * wy);

  // horizontal projection of the unit gravity vector = tilt
  const double gx = after.gravity_body[0], gy = after.gravity_body[1];
  r.orientation = weights.orientation * (gx * gx + gy * gy);

  double acc2 = 0.0;
  for (int i = 0; i < sim::kNumJoints; ++i) {
    const double a = (after.joint_velocities[i] - before.joint_velocities[i]) / control_dt;
    acc2 += a * a;
  }
  r.joint_accel = weights.joint_accel * acc2;

  double power_abs = 0.0;
  std::array<double, sim::kNumJoints> power;
  for (int i = 0; i < sim::kNumJoints; ++i) {
    power[i] = after.applied_torques[i] * after.joint_velocities[i];
    power_abs += std::fabs(after.applied_torques[i]) * std::fabs(after.joint_velocities[i]);
  }
  r.joint_power = weights.joint_power * power_abs;

  const double h = sim::base_height_above_ground(after, terrain);
  const double dh = robot.body_height_target - h;
  r.body_height = weights.body_height * dh * dh;

  // swing feet only: squared clearance shortfall scaled by horizontal speed
  double clearance = 0.0;
  for (int leg = 0; leg < sim::kNumLegs; ++leg) {
    const sim::FootState& foot = after.feet[leg];
    if (foot.in_contact) continue;
    const double ground = terrain.height_at(foot.position_world[0], foot.position_world[1]);
    const double pz = foot.position_world[2] - ground;
    const double dz = robot.foot_clearance_target - pz;
    const double vxy = std::hypot(foot.velocity_world[0], foot.velocity_world[1]);
    clearance += dz * dz * vxy;
  }
  r.foot_clearance = weights.foot_clearance * clearance;

  double rate = 0.0, smooth = 0.0;
  for (int i = 0; i < kActionDim; ++i) {
    const double d1 = action[i] - prev_action[i];
    rate += d1 * d1;
    const double d2 = action[i] - 2.0 * prev_action[i] + prev_prev_action[i];
    smooth += d2 * d2;
  }
  r.action_rate = weights.action_rate * rate;
  r.action_smoothness = weights.action_smoothness * smooth;

  double mean_power = 0.0;
  for (double p : power) mean_power += p;
  mean_power /= sim::kNumJoints;
  double var = 0.0;
  for (double p : power) var += (p - mean_power) * (p - mean_power);
  var /= sim::kNumJoints;
  r.power_distribution = weights.power_distribution * var * var;

  r.total = 0.0;
  for (double t : r.terms()) r.total += t;
  return r;
}

void curriculum_update(CurriculumState& state, double tracking_fraction, bool fell,
                       const CurriculumConfig& config, nn::Rng& rng) {
  if (fell || tracking_fraction < config.demote_threshold) {
    if (state.level > 0) {
      --state.level;
      ++state.demotions;
    }
    return;
  }
  if (tracking_fraction > config.promote_threshold) {
    ++state.promotions;
    if (state.level >= config.max_level) {
      // top-level graduates restart somewhere random
      state.level = rng.uniform_int(0, config.max_level);
    } else {
      ++state.level;
    }
  }
}

}  // namespace loco::task
