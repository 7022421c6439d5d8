#pragma once

#include <array>
#include <cstdint>

namespace loco::sim {

using Vec3 = std::array<double, 3>;
using Quat = std::array<double, 4>;  // w, x, y, z; body-to-world
using Vec12 = std::array<double, 12>;

inline constexpr int kNumLegs = 4;
inline constexpr int kJointsPerLeg = 3;
inline constexpr int kNumJoints = 12;
inline constexpr double kGravity = 9.81;

// Leg order: FL, FR, RL, RR; joints per leg: hip roll, thigh pitch, knee
// pitch. Legs are massless kinematic chains; joints carry a reflected
// inertia instead.
struct RobotConfig {
  double base_mass = 12.0;                      // kg
  Vec3 base_inertia = {0.10, 0.25, 0.30};       // kg m^2, diagonal, body frame
  std::array<Vec3, kNumLegs> hip_offsets = {{{0.18, 0.14, 0.0},
                                             {0.18, -0.14, 0.0},
                                             {-0.18, 0.14, 0.0},
                                             {-0.18, -0.14, 0.0}}};
  double thigh_length = 0.2;  // m
  double calf_length = 0.2;   // m
  Vec12 stand_pose = {0.0, 0.723, -1.446, 0.0, 0.723, -1.446,
                      0.0, 0.723, -1.446, 0.0, 0.723, -1.446};  // rad
  std::array<double, kJointsPerLeg> joint_lower = {-0.8, -1.0, -2.6};
  std::array<double, kJointsPerLeg> joint_upper = {0.8, 3.9, -0.85};
  double torque_limit = 33.5;           // N m
  double reflected_inertia = 0.02;      // kg m^2 per joint
  double body_height_target = 0.30;     // m, h_des
  double foot_clearance_target = 0.09;  // m, desired swing foot height
};

struct PdConfig {
  double kp = 28.0;          // N m / rad
  double kd = 0.7;           // N m s / rad
  double control_hz = 50.0;
  double physics_hz = 200.0;

  int substeps() const { return static_cast<int>(physics_hz / control_hz); }
  double physics_dt() const { return 1.0 / physics_hz; }
  double control_dt() const { return 1.0 / control_hz; }
};

// Penalty contact parameters. Tangential forces come from an anchor spring
// clamped to the friction cone; the friction coefficient lives on the
// terrain.
struct ContactConfig {
  double normal_stiffness = 5000.0;     // N/m
  double normal_damping = 100.0;        // N s/m
  double tangential_stiffness = 4000.0; // N/m
  double tangential_damping = 50.0;     // N s/m
};

// Per-episode physical randomization (Table-style ranges live in config).
struct DomainParams {
  double payload = 0.0;         // kg, added to base mass
  double kp_factor = 1.0;
  double kd_factor = 1.0;
  double motor_strength = 1.0;  // scales commanded torque
  Vec3 com_shift = {0.0, 0.0, 0.0};  // m, body frame
};

struct FootState {
  Vec3 position_world = {0.0, 0.0, 0.0};
  Vec3 velocity_world = {0.0, 0.0, 0.0};
  Vec3 force_world = {0.0, 0.0, 0.0};  // ground reaction on the foot
  bool in_contact = false;
  // tangential anchor for the friction spring, world xy; valid while touching
  std::array<double, 2> anchor = {0.0, 0.0};
  bool anchored = false;
};

struct SimState {
  double time = 0.0;
  Vec3 base_position = {0.0, 0.0, 0.0};       // world
  Quat base_orientation = {1.0, 0.0, 0.0, 0.0};
  Vec3 linear_velocity = {0.0, 0.0, 0.0};     // body frame
  Vec3 angular_velocity = {0.0, 0.0, 0.0};    // body frame
  Vec12 joint_positions = {};
  Vec12 joint_velocities = {};
  Vec12 applied_torques = {};
  std::array<FootState, kNumLegs> feet = {};
  Vec3 disturbance = {0.0, 0.0, 0.0};         // N, body frame
  Vec3 gravity_body = {0.0, 0.0, -1.0};       // unit gravity direction, body frame
  bool fault = false;                         // set when integration produced non-finite values
};

}  // namespace loco::sim
