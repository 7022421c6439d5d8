#pragma once

#include <array>
#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "loco/io/checkpoint.hpp"
#include "loco/task/task.hpp"

namespace loco::eval {

struct StepInfo {
  std::array<double, 2> v_xy_after = {0.0, 0.0};  // realized planar velocity after the step
  double yaw_rate_after = 0.0;
  std::array<double, 3> v_true_pre = {0.0, 0.0, 0.0};  // ground truth before the step
  std::array<double, 3> v_est_pre = {0.0, 0.0, 0.0};   // estimator's view of it
  bool fell = false;
};

// Anything that can be commanded and stepped at the control rate. The real
// implementation wraps a checkpointed controller in the simulator; the stubs
// exist for protocol-level tests.
class LocomotionSystem {
 public:
  virtual ~LocomotionSystem() = default;
  virtual void reset(std::uint64_t seed) = 0;
  virtual StepInfo step(const task::Command& command) = 0;
  virtual void push(const sim::Vec3& velocity_body) { (void)velocity_body; }
  virtual double control_dt() const = 0;
  virtual std::string terrain_label() const { return "none"; }
};

// Deterministic closed-loop controller from a checkpoint: mean actions, mean
// latent, no observation noise, nominal domain parameters.
class PolicySystem : public LocomotionSystem {
 public:
  PolicySystem(const io::PolicyBundle& bundle, sim::TerrainKind kind, int level);

  void reset(std::uint64_t seed) override;
  StepInfo step(const task::Command& command) override;
  void push(const sim::Vec3& velocity_body) override;
  double control_dt() const override { return setup_.pd.control_dt(); }
  std::string terrain_label() const override;

  const sim::SimState& state() const { return state_; }
  const task::Action& last_action() const { return prev_action_; }
  const std::array<double, rl::kLatentDim>& last_latent() const { return last_z_; }
  const task::RewardBreakdown& last_reward() const { return last_reward_; }

 private:
  rl::EnvSetup setup_;
  rl::PolicyNet policy_;
  rl::ContextEstimator estimator_;
  sim::TerrainKind kind_;
  int level_;
  sim::TerrainMap terrain_;
  sim::SimState state_;
  task::TemporalObservation stack_;
  task::Action prev_action_{};
  task::Action prev_prev_action_{};
  std::array<double, rl::kLatentDim> last_z_{};
  task::RewardBreakdown last_reward_;
  bool fresh_ = true;
};

// stubs for protocol tests
class PerfectTracker : public LocomotionSystem {
 public:
  void reset(std::uint64_t) override {}
  StepInfo step(const task::Command& c) override {
    StepInfo info;
    info.v_xy_after = {c.vx, c.vy};
    info.yaw_rate_after = c.yaw_rate;
    return info;
  }
  double control_dt() const override { return 0.02; }
};

class InertTracker : public LocomotionSystem {
 public:
  void reset(std::uint64_t) override {}
  StepInfo step(const task::Command&) override { return {}; }
  double control_dt() const override { return 0.02; }
};

struct AteProtocol {
  double duration = 600.0;  // s per seed
  double resample = 10.0;   // s between command draws
  int seeds = 5;
  task::CommandRanges ranges;
};

struct AteChannel {
  double mean = 0.0;
  double stddev = 0.0;
  std::vector<double> per_seed;
};

struct AteReport {
  AteChannel vx, vy, yaw;
  std::vector<std::uint64_t> seeds;
  double duration = 0.0;
  int falls = 0;
  std::uint64_t command_hash = 0;  // equal across controllers for the same seed set
};

// Random-command tracking protocol. The command sequence depends only on
// (base_seed, protocol), never on the controller, so compared controllers
// face identical commands.
AteReport ate_eval(LocomotionSystem& system, const AteProtocol& protocol,
                   std::uint64_t base_seed);

struct SurvivalProtocol {
  double duration = 1800.0;
  double resample = 10.0;
  int trials = 3;
  task::CommandRanges ranges;
};

struct PushProtocol {
  double interval = 1.0;        // s between pushes
  double trial_seconds = 30.0;  // survive this long to pass
  int trials = 5;               // per candidate magnitude
  int seeds = 3;                // independent sweeps
  double sweep_start = 0.1;
  double sweep_step = 0.1;
  double sweep_max = 2.0;
  double resample = 10.0;
  task::CommandRanges ranges;
};

struct RobustnessReport {
  double max_push_mean = 0.0;  // m/s over sweep seeds
  double max_push_std = 0.0;
  std::vector<double> max_push_per_seed;
  double survival_mean = 0.0;  // percent of the duration survived
  double survival_std = 0.0;
  std::vector<double> survival_per_trial;
  std::vector<double> fall_times;  // s, one entry per survival trial
  std::vector<double> sweep_speeds;
  std::vector<double> sweep_survival_fraction;  // averaged over seeds
};

// Largest tolerated push (ascending sweep, >= 50% trial survival) plus the
// timed random-walk survival protocol.
RobustnessReport robustness_push_test(LocomotionSystem& system, const PushProtocol& push,
                                      const SurvivalProtocol& survival, std::uint64_t base_seed);

// survival only (used by the acceptance suite on its own)
void survival_eval(LocomotionSystem& system, const SurvivalProtocol& protocol,
                   std::uint64_t base_seed, RobustnessReport& report);

struct EstimationTrace {
  std::vector<double> time;
  std::vector<std::string> terrain;
  std::vector<double> sq_error_a;  // per-step squared velocity estimation error
  std::vector<double> sq_error_b;
  double mean_a = 0.0;
  double mean_b = 0.0;
  std::string label_a = "a";
  std::string label_b = "b";
};

// Steps two systems through the same command script and aligns their
// per-step squared velocity-estimation errors.
EstimationTrace estimation_error_eval(LocomotionSystem& a, LocomotionSystem& b, double duration,
                                      double resample, std::uint64_t seed,
                                      const task::CommandRanges& ranges);

// CSV exports: 9-significant-digit floats, deterministic row order, header
// always present (an empty report produces a header-only file).
void export_ate_csv(const AteReport& report, const std::string& path);
void export_robustness_csv(const RobustnessReport& report, const std::string& path);
void export_estimation_csv(const EstimationTrace& trace, const std::string& path);

}  // namespace loco::eval
