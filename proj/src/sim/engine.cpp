#include "loco/sim/engine.hpp"

#include <algorithm>
#include <cmath>

#include "loco/sim/math3d.hpp"

namespace loco::sim {

namespace {

bool state_finite(const SimState& s) {
  auto ok3 = [](const Vec3& v) {
    return std::isfinite(v[0]) && std::isfinite(v[1]) && std::isfinite(v[2]);
  };
  if (!ok3(s.base_position) || !ok3(s.linear_velocity) || !ok3(s.angular_velocity)) return false;
  for (double q : s.base_orientation)
    if (!std::isfinite(q)) return false;
  for (int i = 0; i < kNumJoints; ++i)
    if (!std::isfinite(s.joint_positions[i]) || !std::isfinite(s.joint_velocities[i])) return false;
  return true;
}

}  // namespace

Vec3 leg_foot_position(const RobotConfig& robot, int leg, const double* q3) {
  const double q1 = q3[0], q2 = q3[1], q3k = q3[2];
  const double lt = robot.thigh_length, lc = robot.calf_length;
  const Vec3 thigh = {-lt * std::sin(q2), 0.0, -lt * std::cos(q2)};
  const Vec3 calf = {-lc * std::sin(q2 + q3k), 0.0, -lc * std::cos(q2 + q3k)};
  return robot.hip_offsets[leg] + rotate_x(q1, thigh + calf);
}

std::array<Vec3, 3> leg_foot_jacobian(const RobotConfig& robot, int leg, const double* q3) {
  const double q1 = q3[0], q2 = q3[1], q3k = q3[2];
  const double lt = robot.thigh_length, lc = robot.calf_length;
  const Vec3 thigh = {-lt * std::sin(q2), 0.0, -lt * std::cos(q2)};
  const Vec3 calf = {-lc * std::sin(q2 + q3k), 0.0, -lc * std::cos(q2 + q3k)};
  const Vec3 leg_vec = rotate_x(q1, thigh + calf);
  const Vec3 d_thigh = {-lt * std::cos(q2), 0.0, lt * std::sin(q2)};
  const Vec3 d_calf = {-lc * std::cos(q2 + q3k), 0.0, lc * std::sin(q2 + q3k)};
  std::array<Vec3, 3> jac;
  jac[0] = cross({1.0, 0.0, 0.0}, leg_vec);           // hip roll about body x
  jac[1] = rotate_x(q1, d_thigh + d_calf);            // thigh pitch
  jac[2] = rotate_x(q1, d_calf);                      // knee pitch
  (void)leg;
  return jac;
}

Vec12 pd_torque(const Vec12& q_des, const Vec12& q, const Vec12& dq, const PdConfig& pd,
                const DomainParams& domain, double torque_limit) {
  Vec12 tau;
  const double kp = pd.kp * domain.kp_factor;
  const double kd = pd.kd * domain.kd_factor;
  for (int i = 0; i < kNumJoints; ++i) {
    double t = kp * (q_des[i] - q[i]) - kd * dq[i];
    t = std::clamp(t, -torque_limit, torque_limit);
    tau[i] = domain.motor_strength * t;
  }
  return tau;
}

Vec3 foot_contact_force(const Vec3& pos_w, const Vec3& vel_w, const TerrainMap& terrain,
                        const ContactConfig& contact, std::array<double, 2>& anchor,
                        bool& anchored) {
  const double ground = terrain.height_at(pos_w[0], pos_w[1]);
  const double penetration = ground - pos_w[2];
  if (penetration <= 0.0) {
    anchored = false;
    return {0.0, 0.0, 0.0};
  }
  const double normal =
      std::max(0.0, contact.normal_stiffness * penetration + contact.normal_damping * (-vel_w[2]));
  if (!anchored) {
    anchor = {pos_w[0], pos_w[1]};
    anchored = true;
  }
  double fx = -contact.tangential_stiffness * (pos_w[0] - anchor[0]) -
              contact.tangential_damping * vel_w[0];
  double fy = -contact.tangential_stiffness * (pos_w[1] - anchor[1]) -
              contact.tangential_damping * vel_w[1];
  const double demand = std::sqrt(fx * fx + fy * fy);
  const double cone = terrain.friction * normal;
  if (demand > cone && demand > 0.0) {
    const double scale = cone / demand;
    fx *= scale;
    fy *= scale;
    // let the anchor slip so the spring term sits exactly on the cone
    anchor[0] = pos_w[0] + (fx + contact.tangential_damping * vel_w[0]) / contact.tangential_stiffness;
    anchor[1] = pos_w[1] + (fy + contact.tangential_damping * vel_w[1]) / contact.tangential_stiffness;
  }
  return {fx, fy, normal};
}

DomainParams randomize_domain(nn::Rng& rng, const DomainRandomizationConfig& config) {
  DomainParams d;
  d.payload = rng.uniform(config.payload_min, config.payload_max);
  d.kp_factor = rng.uniform(config.kp_factor_min, config.kp_factor_max);
  d.kd_factor = rng.uniform(config.kd_factor_min, config.kd_factor_max);
  d.motor_strength = rng.uniform(config.motor_strength_min, config.motor_strength_max);
  for (int i = 0; i < 3; ++i) d.com_shift[i] = rng.uniform(-config.com_shift_abs, config.com_shift_abs);
  return d;
}

void update_foot_kinematics(SimState& state, const RobotConfig& robot) {
  const Quat& q = state.base_orientation;
  const Vec3 v_w = quat_rotate(q, state.linear_velocity);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const double* qj = state.joint_positions.data() + leg * kJointsPerLeg;
    const double* dqj = state.joint_velocities.data() + leg * kJointsPerLeg;
    const Vec3 p_body = leg_foot_position(robot, leg, qj);
    const auto jac = leg_foot_jacobian(robot, leg, qj);
    Vec3 v_joint = {0.0, 0.0, 0.0};
    for (int j = 0; j < kJointsPerLeg; ++j) v_joint += dqj[j] * jac[j];
    state.feet[leg].position_world = state.base_position + quat_rotate(q, p_body);
    state.feet[leg].velocity_world =
        v_w + quat_rotate(q, cross(state.angular_velocity, p_body) + v_joint);
  }
}

void physics_substep(SimState& state, const Vec12& tau, const RobotConfig& robot,
                     const PdConfig& pd, const ContactConfig& contact,
                     const DomainParams& domain, const TerrainMap& terrain) {
  const double dt = pd.physics_dt();
  const Quat q = state.base_orientation;
  const double mass = robot.base_mass + domain.payload;
  const Vec3 gravity_w = {0.0, 0.0, -kGravity};

  update_foot_kinematics(state, robot);

  // ground reaction forces and their wrench about the base origin
  Vec3 force_w = mass * gravity_w;
  force_w += quat_rotate(q, state.disturbance);
  Vec3 torque_b = {0.0, 0.0, 0.0};
  // gravity acting at the shifted center of mass tilts the body
  torque_b += cross(domain.com_shift, quat_rotate_inverse(q, mass * gravity_w));

  // Foot forces act on the base as a wrench at the contact point; the joints
  // themselves are driven by their torques against the reflected inertia.
  Vec12 joint_acc{};
  for (int leg = 0; leg < kNumLegs; ++leg) {
    FootState& foot = state.feet[leg];
    const Vec3 f_w = foot_contact_force(foot.position_world, foot.velocity_world, terrain, contact,
                                        foot.anchor, foot.anchored);
    foot.force_world = f_w;
    foot.in_contact = f_w[2] > 0.0;
    force_w += f_w;
    const Vec3 f_b = quat_rotate_inverse(q, f_w);
    const Vec3 r_b = quat_rotate_inverse(q, foot.position_world - state.base_position);
    torque_b += cross(r_b, f_b);
  }
  for (int i = 0; i < kNumJoints; ++i) joint_acc[i] = tau[i] / robot.reflected_inertia;

  // angular dynamics in the body frame with the gyroscopic term
  const Vec3& inertia = robot.base_inertia;
  const Vec3 iw = {inertia[0] * state.angular_velocity[0], inertia[1] * state.angular_velocity[1],
                   inertia[2] * state.angular_velocity[2]};
  const Vec3 gyro = cross(state.angular_velocity, iw);
  Vec3 omega_dot = {(torque_b[0] - gyro[0]) / inertia[0], (torque_b[1] - gyro[1]) / inertia[1],
                    (torque_b[2] - gyro[2]) / inertia[2]};

  // semi-implicit Euler: velocities first, then positions
  Vec3 v_w = quat_rotate(q, state.linear_velocity);
  v_w += dt * (1.0 / mass * force_w);
  state.angular_velocity += dt * omega_dot;
  for (int i = 0; i < kNumJoints; ++i) state.joint_velocities[i] += dt * joint_acc[i];

  state.base_position += dt * v_w;
  state.base_orientation = quat_normalize(quat_integrate(q, state.angular_velocity, dt));
  for (int i = 0; i < kNumJoints; ++i) {
    state.joint_positions[i] += dt * state.joint_velocities[i];
    const int j = i % kJointsPerLeg;
    if (state.joint_positions[i] < robot.joint_lower[j]) {
      state.joint_positions[i] = robot.joint_lower[j];
      if (state.joint_velocities[i] < 0.0) state.joint_velocities[i] = 0.0;
    } else if (state.joint_positions[i] > robot.joint_upper[j]) {
      state.joint_positions[i] = robot.joint_upper[j];
      if (state.joint_velocities[i] > 0.0) state.joint_velocities[i] = 0.0;
    }
  }

  state.linear_velocity = quat_rotate_inverse(state.base_orientation, v_w);
  state.gravity_body = quat_rotate_inverse(state.base_orientation, {0.0, 0.0, -1.0});
  state.applied_torques = tau;
  state.time += dt;
  update_foot_kinematics(state, robot);
}

void env_step(SimState& state, const Vec12& q_des, const RobotConfig& robot, const PdConfig& pd,
              const ContactConfig& contact, const DomainParams& domain,
              const TerrainMap& terrain) {
  if (state.fault) return;
  for (int s = 0; s < pd.substeps(); ++s) {
    const Vec12 tau = pd_torque(q_des, state.joint_positions, state.joint_velocities, pd, domain,
                                robot.torque_limit);
    physics_substep(state, tau, robot, pd, contact, domain, terrain);
    if (!state_finite(state)) {
      state.fault = true;
      return;
    }
  }
}

void apply_push(SimState& state, const Vec3& velocity_body) {
  state.linear_velocity += velocity_body;
}

SimState env_reset(const RobotConfig& robot, const TerrainMap& terrain,
                   const DomainParams& domain, const PdConfig& pd, const ContactConfig& contact,
                   double yaw) {
  SimState state;
  state.base_orientation = quat_from_yaw(yaw);
  state.joint_positions = robot.stand_pose;

  // place the base so the lowest foot just touches its ground point
  double base_z = -1e30;
  for (int leg = 0; leg < kNumLegs; ++leg) {
    const Vec3 p_body =
        leg_foot_position(robot, leg, robot.stand_pose.data() + leg * kJointsPerLeg);
    const Vec3 p_rot = quat_rotate(state.base_orientation, p_body);
    const double ground = terrain.height_at(p_rot[0], p_rot[1]);
    base_z = std::max(base_z, ground - p_rot[2]);
  }
  state.base_position = {0.0, 0.0, base_z + 0.005};
  state.gravity_body = quat_rotate_inverse(state.base_orientation, {0.0, 0.0, -1.0});
  update_foot_kinematics(state, robot);

  // settle the penalty contact with the joints frozen at the stand pose
  const int settle_steps = static_cast<int>(0.5 * pd.physics_hz);
  int calm = 0;
  for (int s = 0; s < settle_steps; ++s) {
    // zero joint torque: the joints stay put while the base finds equilibrium
    physics_substep(state, Vec12{}, robot, pd, contact, domain, terrain);
    if (!state_finite(state)) throw ResetError("reset diverged on this terrain");
    const double speed = norm(state.linear_velocity) + norm(state.angular_velocity);
    calm = speed < 5e-3 ? calm + 1 : 0;
    if (calm >= 5 && s > 10) break;
  }
  if (norm(state.linear_velocity) > 0.5)
    throw ResetError("no resting placement found on this terrain");

  state.linear_velocity = {0.0, 0.0, 0.0};
  state.angular_velocity = {0.0, 0.0, 0.0};
  state.joint_positions = robot.stand_pose;
  state.joint_velocities = {};
  state.applied_torques = {};
  state.time = 0.0;
  state.fault = false;
  update_foot_kinematics(state, robot);
  for (int leg = 0; leg < kNumLegs; ++leg) {
    FootState& foot = state.feet[leg];
    const double ground = terrain.height_at(foot.position_world[0], foot.position_world[1]);
    foot.in_contact = foot.position_world[2] <= ground;
  }
  return state;
}

std::array<double, kScanPoints> height_scan(const SimState& state, const TerrainMap& terrain) {
  std::array<double, kScanPoints> scan;
  const double yaw = yaw_of(state.base_orientation);
  const double cy = std::cos(yaw), sy = std::sin(yaw);
  const int half = kScanPointsPerSide / 2;
  int idx = 0;
  for (int i = 0; i < kScanPointsPerSide; ++i) {
    const double dx = (i - half) * kScanSpacing;
    for (int j = 0; j < kScanPointsPerSide; ++j, ++idx) {
      const double dy = (j - half) * kScanSpacing;
      const double wx = state.base_position[0] + cy * dx - sy * dy;
      const double wy = state.base_position[1] + sy * dx + cy * dy;
      const double rel = terrain.height_at(wx, wy) - state.base_position[2];
      scan[idx] = std::clamp(rel, -1.0, 1.0);
    }
  }
  return scan;
}

double base_height_above_ground(const SimState& state, const TerrainMap& terrain) {
  return state.base_position[2] -
         terrain.height_at(state.base_position[0], state.base_position[1]);
}

double roll_of(const SimState& state) {
  const Quat& q = state.base_orientation;
  return std::atan2(2.0 * (q[0] * q[1] + q[2] * q[3]), 1.0 - 2.0 * (q[1] * q[1] + q[2] * q[2]));
}

double pitch_of(const SimState& state) {
  const Quat& q = state.base_orientation;
  const double s = std::clamp(2.0 * (q[0] * q[2] - q[3] * q[1]), -1.0, 1.0);
  return std::asin(s);
}

}  // namespace loco::sim
