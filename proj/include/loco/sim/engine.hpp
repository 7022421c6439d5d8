#pragma once

#include <array>
#include <span>
#include <stdexcept>

#include "loco/nn/rng.hpp"
#include "loco/sim/terrain.hpp"
#include "loco/sim/types.hpp"

namespace loco::sim {

struct ResetError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Forward kinematics of one leg in the body frame. Joint order: hip roll,
// thigh pitch, knee pitch; the foot hangs below the hip when all pitches
// cancel.
Vec3 leg_foot_position(const RobotConfig& robot, int leg, const double* q3);
// 3x3 Jacobian d foot / d joints, column-major columns returned as rows[j] = d p / d q_j
std::array<Vec3, 3> leg_foot_jacobian(const RobotConfig& robot, int leg, const double* q3);

// PD torque law with domain factors and the torque limit clamp.
Vec12 pd_torque(const Vec12& q_des, const Vec12& q, const Vec12& dq, const PdConfig& pd,
                const DomainParams& domain, double torque_limit);

// Ground reaction force for one foot given its world position/velocity and an
// optional persistent anchor (stick friction). Returns the force on the foot
// in world coordinates and updates the anchor state.
Vec3 foot_contact_force(const Vec3& pos_w, const Vec3& vel_w, const TerrainMap& terrain,
                        const ContactConfig& contact, std::array<double, 2>& anchor,
                        bool& anchored);

// Table-style range container for randomize_domain.
struct DomainRandomizationConfig {
  double payload_min = -1.0, payload_max = 2.0;        // kg
  double kp_factor_min = 0.9, kp_factor_max = 1.1;
  double kd_factor_min = 0.9, kd_factor_max = 1.1;
  double motor_strength_min = 0.9, motor_strength_max = 1.1;
  double com_shift_abs = 0.05;                          // m, per axis
};

DomainParams randomize_domain(nn::Rng& rng, const DomainRandomizationConfig& config);

// Piecewise-constant external force on the base, resampled on a fixed
// interval. update() must be called once per control step.
struct DisturbanceSchedule {
  double max_force = 30.0;      // N per axis
  double resample_interval = 3.0;  // s
  double next_resample = 0.0;
  Vec3 current = {0.0, 0.0, 0.0};

  void update(nn::Rng& rng, double time) {
    if (time >= next_resample) {
      for (int i = 0; i < 3; ++i) current[i] = rng.uniform(-max_force, max_force);
      next_resample += resample_interval;
      if (next_resample <= time) next_resample = time + resample_interval;
    }
  }
  void reset() {
    next_resample = 0.0;
    current = {0.0, 0.0, 0.0};
  }
};

// Places the robot at the stand pose over the terrain, settles contact for up
// to 0.5 s, then zeroes the twist and the clock. Throws ResetError if the
// base cannot come to rest.
SimState env_reset(const RobotConfig& robot, const TerrainMap& terrain,
                   const DomainParams& domain, const PdConfig& pd, const ContactConfig& contact,
                   double yaw = 0.0);

// One physics substep at pd.physics_dt() with fixed joint torques.
void physics_substep(SimState& state, const Vec12& tau, const RobotConfig& robot,
                     const PdConfig& pd, const ContactConfig& contact,
                     const DomainParams& domain, const TerrainMap& terrain);

// One control step: pd.substeps() substeps, PD torques recomputed each
// substep from the fixed target. Sets state.fault instead of propagating
// non-finite values.
void env_step(SimState& state, const Vec12& q_des, const RobotConfig& robot, const PdConfig& pd,
              const ContactConfig& contact, const DomainParams& domain,
              const TerrainMap& terrain);

// Instantaneous velocity increment, body frame.
void apply_push(SimState& state, const Vec3& velocity_body);

inline constexpr int kScanPointsPerSide = 11;
inline constexpr int kScanPoints = kScanPointsPerSide * kScanPointsPerSide;
inline constexpr double kScanSpacing = 0.1;  // m

// 11x11 grid of terrain heights relative to the base, yaw-aligned and
// centered under the base; entries clipped to [-1, 1] m.
std::array<double, kScanPoints> height_scan(const SimState& state, const TerrainMap& terrain);

// convenience queries
double base_height_above_ground(const SimState& state, const TerrainMap& terrain);
double roll_of(const SimState& state);
double pitch_of(const SimState& state);
// refresh foot world positions/velocities from the current state
void update_foot_kinematics(SimState& state, const RobotConfig& robot);

}  // namespace loco::sim
