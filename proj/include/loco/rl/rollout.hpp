#pragma once

#include <cstdint>
#include <vector>

#include "loco/nn/rng.hpp"
#include "loco/rl/nets.hpp"
#include "loco/sim/engine.hpp"
#include "loco/task/task.hpp"

namespace loco::rl {

// Everything an environment instance needs; defaults match the documented
// configuration.
struct EnvSetup {
  sim::RobotConfig robot;
  sim::PdConfig pd;
  sim::ContactConfig contact;
  sim::TerrainConfig terrain;
  sim::DomainRandomizationConfig domain_rand;
  std::vector<sim::TerrainKind> terrain_kinds = {sim::TerrainKind::Smooth, sim::TerrainKind::Rough,
                                                 sim::TerrainKind::Discrete,
                                                 sim::TerrainKind::Stairs};
  task::CommandRanges commands;
  task::ObservationScales scales;
  task::ObservationNoise noise;          // noise.enabled set true for training
  task::ActionConfig action;
  task::RewardWeights rewards;
  task::CurriculumConfig curriculum;
  double episode_seconds = 20.0;
  double command_resample_seconds = 10.0;
  double disturbance_max_force = 30.0;   // N
  double disturbance_interval = 3.0;     // s
  double termination_tilt_rad = 80.0 * M_PI / 180.0;
  double termination_base_clearance = 0.05;  // m
};

// Where the policy's velocity/latent inputs came from at a given step.
enum class InputSource : std::uint8_t { GroundTruth = 0, Estimated = 1 };

// One environment with its episode bookkeeping. Slots are independent:
// stepping different slots from different threads is safe.
struct EnvSlot {
  sim::TerrainMap terrain;
  sim::DomainParams domain;
  sim::SimState state;
  sim::DisturbanceSchedule disturbance;
  task::CurriculumState curriculum;
  task::Command command;
  task::TemporalObservation stack;
  task::Observation observation{};  // o_t as the policy sees it (noisy in training)
  task::Action prev_action{};
  task::Action prev_prev_action{};
  nn::Rng rng;
  std::uint64_t terrain_seed = 0;
  int episode_steps = 0;
  double episode_reward = 0.0;
  double tracking_sum = 0.0;  // running weighted tracking reward
  double next_command_time = 0.0;
  double last_episode_reward = 0.0;
  bool completed_episode = false;
  std::int64_t episodes_done = 0;
};

struct StepFlags {
  bool done = false;
  bool fell = false;
  bool timeout = false;
};

// N independent simulator instances behind one synchronous interface.
class VecEnv {
 public:
  VecEnv(EnvSetup setup, int num_envs, std::uint64_t seed);

  int size() const { return static_cast<int>(slots_.size()); }
  const EnvSetup& setup() const { return setup_; }
  EnvSlot& slot(int i) { return slots_[i]; }
  const EnvSlot& slot(int i) const { return slots_[i]; }

  // (re)build every slot from scratch at its current curriculum level
  void reset_all();
  // re-seed one slot with a fresh terrain/domain/command draw
  void reset_slot(int i);

  // advance env i one control step with raw policy action `a`; fills the
  // reward breakdown and termination flags. Does not touch other slots.
  StepFlags step_slot(int i, const task::Action& a, task::RewardBreakdown& reward);

  // termination check on the current state
  bool fallen(const EnvSlot& s) const;

  // assemble o_t for slot i from its current state (adds noise when enabled)
  task::Observation make_observation(int i, bool with_noise);
  // privileged state for slot i (always ground truth)
  task::Privileged make_privileged(int i) const;

  // fraction of the maximum achievable tracking reward this episode
  double tracking_fraction(const EnvSlot& s) const;

 private:
  void build_slot(int i, bool reuse_curriculum);

  EnvSetup setup_;
  std::vector<EnvSlot> slots_;
  std::uint64_t seed_ = 0;
};

// Time-major storage for one on-policy batch: index = t * num_envs + i.
struct RolloutBuffer {
  int num_envs = 0;
  int horizon = 0;

  std::vector<double> observations;    // [T*N*45] noisy o_t
  std::vector<double> temporal;        // [T*N*270] stacked history fed to the estimator
  std::vector<double> privileged;      // [T*N*172]
  std::vector<double> policy_inputs;   // [T*N*64] exactly what the actor consumed
  std::vector<double> actions;         // [T*N*12]
  std::vector<double> log_probs;       // [T*N]
  std::vector<double> values;          // [T*N]
  std::vector<double> rewards;         // [T*N]
  std::vector<std::uint8_t> dones;     // [T*N]
  std::vector<std::uint8_t> timeouts;  // [T*N]
  std::vector<double> true_velocity;   // [T*N*3] simulator ground truth at t
  std::vector<double> next_observation;  // [T*N*45] noise-free o_{t+1}
  std::vector<std::uint8_t> provenance;  // [T*N] InputSource per sample
  std::vector<double> bootstrap_values;  // [N] V(s_T)
  std::vector<double> advantages;      // filled by GAE
  std::vector<double> returns;

  std::vector<double> episode_returns_completed;  // episodes that ended in this batch
  std::vector<double> episode_lengths_completed;
  std::array<double, task::kNumRewardTerms> reward_term_sums{};
  std::int64_t steps() const { return static_cast<std::int64_t>(num_envs) * horizon; }

  void allocate(int num_envs, int horizon);
};

struct CollectConfig {
  int horizon = 24;
  double gamma = 0.99;  // for the timeout value bootstrap
};

// Roll the policy for `horizon` steps on every environment. Per-env gate
// bits decide whether the policy sees estimated (v_hat, z) or ground-truth
// velocity with a prior latent sample. Auto-resets finished episodes and
// applies the curriculum.
void collect_rollouts(VecEnv& envs, PolicyNet& policy, ValueNet& value,
                      ContextEstimator& estimator, const std::vector<std::uint8_t>& gates,
                      const CollectConfig& config, RolloutBuffer& buffer);

}  // namespace loco::rl
