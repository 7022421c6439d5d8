#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "loco/nn/rng.hpp"
#include "loco/sim/engine.hpp"
#include "loco/sim/types.hpp"

namespace loco::task {

inline constexpr int kObservationDim = 45;       // omega(3) g(3) cmd(3) q(12) dq(12) prev_a(12)
inline constexpr int kHistoryLength = 5;         // past frames kept besides the current one
inline constexpr int kTemporalFrames = kHistoryLength + 1;
inline constexpr int kTemporalDim = kTemporalFrames * kObservationDim;  // 270
inline constexpr int kPrivilegedDim = kObservationDim + 3 + 3 + sim::kScanPoints;  // 172
inline constexpr int kActionDim = 12;
inline constexpr int kNumRewardTerms = 12;

using Observation = std::array<double, kObservationDim>;
using Privileged = std::array<double, kPrivilegedDim>;
using Action = std::array<double, kActionDim>;

struct Command {
  double vx = 0.0;      // m/s, body frame
  double vy = 0.0;      // m/s
  double yaw_rate = 0.0;  // rad/s
};

struct CommandRanges {
  double vx_min = -1.0, vx_max = 1.0;
  double vy_min = -0.6, vy_max = 0.6;
  double yaw_min = -1.0, yaw_max = 1.0;
  double deadband = 0.1;  // per-channel snap-to-zero threshold
};

Command sample_command(nn::Rng& rng, const CommandRanges& ranges);

struct ObservationScales {
  double angular_velocity = 0.25;
  double joint_velocity = 0.05;
  // everything else is unscaled
};

struct ObservationNoise {
  bool enabled = false;  // training only
  double angular_velocity = 0.2;  // rad/s, uniform half-width
  double gravity = 0.05;
  double joint_position = 0.01;
  double joint_velocity = 1.5;
};

// Packs Eq-style blocks in fixed order; noise (when enabled) is added to the
// raw sensor values before the normalization scales are applied.
Observation assemble_observation(const sim::SimState& sim, const Command& command,
                                 const Action& prev_action, const ObservationScales& scales,
                                 const ObservationNoise& noise, nn::Rng& rng);

// o_t plus simulator ground truth; never noised.
Privileged assemble_privileged(const Observation& obs, const sim::SimState& sim,
                               const sim::TerrainMap& terrain);

// Newest-first ring of the last kTemporalFrames observations. Slots before
// the first push hold the first observation.
class TemporalObservation {
 public:
  void reset(const Observation& first);
  void push(const Observation& obs);
  // flattened [o_t, o_{t-1}, ..., o_{t-H}]
  std::vector<double> flatten() const;
  const Observation& frame(int age) const { return frames_[age]; }

 private:
  std::array<Observation, kTemporalFrames> frames_{};
  bool initialized_ = false;
};

struct ActionConfig {
  double scale = 0.25;   // rad per network unit
  double clip = 100.0;   // raw network output clip before scaling
};

// theta_des = theta_stand + scale * clip(a), clamped to joint limits.
sim::Vec12 action_to_target(const Action& action, const sim::RobotConfig& robot,
                            const ActionConfig& config);

struct RewardBreakdown {
  double lin_vel_tracking = 0.0;
  double ang_vel_tracking = 0.0;
  double lin_vel_z = 0.0;
  double ang_vel_xy = 0.0;
  double orientation = 0.0;
  double joint_accel = 0.0;
  double joint_power = 0.0;
  double body_height = 0.0;
  double foot_clearance = 0.0;
  double action_rate = 0.0;
  double action_smoothness = 0.0;
  double power_distribution = 0.0;
  double total = 0.0;

  std::array<double, kNumRewardTerms> terms() const {
    return {lin_vel_tracking, ang_vel_tracking, lin_vel_z,   ang_vel_xy,
            orientation,      joint_accel,      joint_power, body_height,
            foot_clearance,   action_rate,      action_smoothness, power_distribution};
  }
  static const std::array<std::string, kNumRewardTerms>& term_names();
};

struct RewardWeights {
  double lin_vel_tracking = 1.0;
  double ang_vel_tracking = 0.5;
  double lin_vel_z = -2.0;
  double ang_vel_xy = -0.05;
  double orientation = -0.2;
  double joint_accel = -2.5e-7;
  double joint_power = -2e-5;
  double body_height = -1.0;
  double foot_clearance = -0.01;
  double action_rate = -0.01;
  double action_smoothness = -0.01;
  double power_distribution = -1e-5;
};

// All twelve weighted terms for one control step. `before` and `after` are
// the states around the step; joint accelerations are finite-differenced from
// the joint velocities across it.
RewardBreakdown compute_reward(const sim::SimState& before, const sim::SimState& after,
                               const Action& action, const Action& prev_action,
                               const Action& prev_prev_action, const Command& command,
                               const sim::RobotConfig& robot, const sim::TerrainMap& terrain,
                               const RewardWeights& weights, double control_dt);

struct CurriculumConfig {
  double promote_threshold = 0.8;  // fraction of the max tracking reward
  double demote_threshold = 0.4;
  int max_level = sim::kTerrainLevels - 1;
};

struct CurriculumState {
  sim::TerrainKind kind = sim::TerrainKind::Smooth;
  int level = 0;
  std::int64_t promotions = 0;
  std::int64_t demotions = 0;
};

// Game-style progression: promote above the threshold, demote on poor
// tracking or an early fall, wrap from the top level to a random one.
void curriculum_update(CurriculumState& state, double tracking_fraction, bool fell,
                       const CurriculumConfig& config, nn::Rng& rng);

}  // namespace loco::task
