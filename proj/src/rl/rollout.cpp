#include "loco/rl/rollout.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <stdexcept>

#include "loco/sim/math3d.hpp"

namespace loco::rl {

VecEnv::VecEnv(EnvSetup setup, int num_envs, std::uint64_t seed)
    : setup_(std::move(setup)), seed_(seed) {
  if (num_envs < 1) throw std::invalid_argument("VecEnv needs at least one environment");
  if (setup_.terrain_kinds.empty()) throw std::invalid_argument("no terrain kinds configured");
  slots_.resize(num_envs);
  for (int i = 0; i < num_envs; ++i) {
    slots_[i].rng = nn::Rng(nn::Rng::mix(seed_, 0x1000 + i));
    slots_[i].curriculum.kind = setup_.terrain_kinds[i % setup_.terrain_kinds.size()];
    slots_[i].curriculum.level = 0;
  }
  reset_all();
}

void VecEnv::reset_all() {
  for (int i = 0; i < size(); ++i) build_slot(i, /*reuse_curriculum=*/true);
}

void VecEnv::reset_slot(int i) { build_slot(i, /*reuse_curriculum=*/true); }

void VecEnv::build_slot(int i, bool) {
  EnvSlot& s = slots_[i];
  // a fresh terrain draw at the slot's current curriculum difficulty; retry a
  // few seeds if the reset cannot settle (e.g. a block under the spawn pad)
  for (int attempt = 0;; ++attempt) {
    s.terrain_seed = s.rng.raw();
    s.terrain = sim::terrain_generate(s.curriculum.kind, s.curriculum.level, s.terrain_seed,
                                      setup_.terrain);
    s.domain = sim::randomize_domain(s.rng, setup_.domain_rand);
    try {
      s.state = sim::env_reset(setup_.robot, s.terrain, s.domain, setup_.pd, setup_.contact);
      break;
    } catch (const sim::ResetError&) {
      if (attempt >= 4) throw;
    }
  }
  s.disturbance.max_force = setup_.disturbance_max_force;
  s.disturbance.resample_interval = setup_.disturbance_interval;
  s.disturbance.reset();
  s.command = task::sample_command(s.rng, setup_.commands);
  s.next_command_time = setup_.command_resample_seconds;
  s.prev_action = {};
  s.prev_prev_action = {};
  s.episode_steps = 0;
  s.episode_reward = 0.0;
  s.tracking_sum = 0.0;
  s.observation = make_observation(i, setup_.noise.enabled);
  s.stack.reset(s.observation);
}

task::Observation VecEnv::make_observation(int i, bool with_noise) {
  EnvSlot& s = slots_[i];
  task::ObservationNoise noise = setup_.noise;
  noise.enabled = with_noise;
  return task::assemble_observation(s.state, s.command, s.prev_action, setup_.scales, noise,
                                    s.rng);
}

task::Privileged VecEnv::make_privileged(int i) const {
  const EnvSlot& s = slots_[i];
  return task::assemble_privileged(s.observation, s.state, s.terrain);
}

bool VecEnv::fallen(const EnvSlot& s) const {
  if (s.state.fault) return true;
  if (std::fabs(sim::roll_of(s.state)) > setup_.termination_tilt_rad) return true;
  if (std::fabs(sim::pitch_of(s.state)) > setup_.termination_tilt_rad) return true;
  return sim::base_height_above_ground(s.state, s.terrain) < setup_.termination_base_clearance;
}

double VecEnv::tracking_fraction(const EnvSlot& s) const {
  if (s.episode_steps == 0) return 0.0;
  const double max_per_step =
      setup_.rewards.lin_vel_tracking + setup_.rewards.ang_vel_tracking;
  return s.tracking_sum / (s.episode_steps * max_per_step);
}

StepFlags VecEnv::step_slot(int i, const task::Action& a, task::RewardBreakdown& reward) {
  EnvSlot& s = slots_[i];
  const double dt = setup_.pd.control_dt();

  s.disturbance.update(s.rng, s.state.time);
  s.state.disturbance = s.disturbance.current;

  const sim::SimState before = s.state;
  const sim::Vec12 q_des = task::action_to_target(a, setup_.robot, setup_.action);
  sim::env_step(s.state, q_des, setup_.robot, setup_.pd, setup_.contact, s.domain, s.terrain);

  reward = task::compute_reward(before, s.state, a, s.prev_action, s.prev_prev_action, s.command,
                                setup_.robot, s.terrain, setup_.rewards, dt);
  s.episode_reward += reward.total;
  s.tracking_sum += reward.lin_vel_tracking + reward.ang_vel_tracking;
  ++s.episode_steps;

  StepFlags flags;
  flags.fell = fallen(s);
  const int max_steps = static_cast<int>(setup_.episode_seconds * setup_.pd.control_hz);
  flags.timeout = !flags.fell && s.episode_steps >= max_steps;
  flags.done = flags.fell || flags.timeout;
  return flags;
}

void RolloutBuffer::allocate(int n, int t) {
  num_envs = n;
  horizon = t;
  const std::size_t nt = static_cast<std::size_t>(n) * t;
  observations.assign(nt * task::kObservationDim, 0.0);
  temporal.assign(nt * task::kTemporalDim, 0.0);
  privileged.assign(nt * task::kPrivilegedDim, 0.0);
  policy_inputs.assign(nt * kPolicyInputDim, 0.0);
  actions.assign(nt * task::kActionDim, 0.0);
  log_probs.assign(nt, 0.0);
  values.assign(nt, 0.0);
  rewards.assign(nt, 0.0);
  dones.assign(nt, 0);
  timeouts.assign(nt, 0);
  true_velocity.assign(nt * 3, 0.0);
  next_observation.assign(nt * task::kObservationDim, 0.0);
  provenance.assign(nt, 0);
  bootstrap_values.assign(n, 0.0);
  advantages.clear();
  returns.clear();
  episode_returns_completed.clear();
  episode_lengths_completed.clear();
  reward_term_sums.fill(0.0);
}

void collect_rollouts(VecEnv& envs, PolicyNet& policy, ValueNet& value,
                      ContextEstimator& estimator, const std::vector<std::uint8_t>& gates,
                      const CollectConfig& config, RolloutBuffer& buffer) {
  const int n = envs.size();
  const int horizon = config.horizon;
  if (static_cast<int>(gates.size()) != n)
    throw std::invalid_argument("collect_rollouts: gate bits must match the env count");
  buffer.allocate(n, horizon);

  std::vector<double> vel_hat(static_cast<std::size_t>(n) * kVelocityDim);
  std::vector<double> mu(static_cast<std::size_t>(n) * kLatentDim);
  std::vector<double> sigma(static_cast<std::size_t>(n) * kLatentDim);
  std::vector<double> means(static_cast<std::size_t>(n) * task::kActionDim);
  std::vector<double> terminal_priv;
  std::vector<int> terminal_envs;

  for (int t = 0; t < horizon; ++t) {
    const std::size_t row0 = static_cast<std::size_t>(t) * n;

    // record o_t, the stacked history, and the privileged state
    for (int i = 0; i < n; ++i) {
      EnvSlot& s = envs.slot(i);
      std::copy(s.observation.begin(), s.observation.end(),
                buffer.observations.begin() + (row0 + i) * task::kObservationDim);
      const std::vector<double> flat = s.stack.flatten();
      std::copy(flat.begin(), flat.end(),
                buffer.temporal.begin() + (row0 + i) * task::kTemporalDim);
      const task::Privileged priv = envs.make_privileged(i);
      std::copy(priv.begin(), priv.end(),
                buffer.privileged.begin() + (row0 + i) * task::kPrivilegedDim);
      for (int k = 0; k < 3; ++k)
        buffer.true_velocity[(row0 + i) * 3 + k] = s.state.linear_velocity[k];
    }

    // estimate (v_hat, z) from the history
    if (estimator.arch != EstimatorArch::None) {
      estimator.encode(
          std::span<const double>(buffer.temporal.data() + row0 * task::kTemporalDim,
                                  static_cast<std::size_t>(n) * task::kTemporalDim),
          vel_hat, mu, sigma, n);
    }

    // gate per environment and assemble the actor input
    for (int i = 0; i < n; ++i) {
      EnvSlot& s = envs.slot(i);
      double* in = buffer.policy_inputs.data() + (row0 + i) * kPolicyInputDim;
      const double* obs = buffer.observations.data() + (row0 + i) * task::kObservationDim;
      std::memcpy(in, obs, sizeof(double) * task::kObservationDim);
      double* vel_slot = in + task::kObservationDim;
      double* z_slot = vel_slot + kVelocityDim;
      const bool bootstrap = gates[i] != 0 && estimator.arch != EstimatorArch::None;
      if (bootstrap) {
        for (int k = 0; k < kVelocityDim; ++k)
          vel_slot[k] = vel_hat[static_cast<std::size_t>(i) * kVelocityDim + k];
        buffer.provenance[row0 + i] = static_cast<std::uint8_t>(InputSource::Estimated);
      } else {
        for (int k = 0; k < kVelocityDim; ++k)
          vel_slot[k] = estimator.arch == EstimatorArch::None ? 0.0 : s.state.linear_velocity[k];
        buffer.provenance[row0 + i] = static_cast<std::uint8_t>(InputSource::GroundTruth);
      }
      if (estimator.arch == EstimatorArch::ContextVae) {
        if (bootstrap) {
          reparameterize(std::span<const double>(mu.data() + static_cast<std::size_t>(i) * kLatentDim,
                                                 kLatentDim),
                         std::span<const double>(sigma.data() + static_cast<std::size_t>(i) * kLatentDim,
                                                 kLatentDim),
                         std::span<double>(z_slot, kLatentDim), s.rng);
        } else {
          // no bootstrap: latent drawn from the prior
          for (int k = 0; k < kLatentDim; ++k) z_slot[k] = s.rng.normal();
        }
      } else {
        for (int k = 0; k < kLatentDim; ++k) z_slot[k] = 0.0;
      }
    }

    // actor forward, stochastic action, critic value
    policy.mean(std::span<const double>(buffer.policy_inputs.data() + row0 * kPolicyInputDim,
                                        static_cast<std::size_t>(n) * kPolicyInputDim),
                means, n);
    for (int i = 0; i < n; ++i) {
      if (!std::isfinite(means[static_cast<std::size_t>(i) * task::kActionDim]))
        throw std::runtime_error("policy produced a non-finite action mean");
      EnvSlot& s = envs.slot(i);
      double* act = buffer.actions.data() + (row0 + i) * task::kActionDim;
      const std::span<const double> m(means.data() + static_cast<std::size_t>(i) * task::kActionDim,
                                      task::kActionDim);
      policy.head.sample(m, std::span<double>(act, task::kActionDim), s.rng);
      buffer.log_probs[row0 + i] =
          policy.head.log_prob(m, std::span<const double>(act, task::kActionDim));
    }
    value.values(std::span<const double>(buffer.privileged.data() + row0 * task::kPrivilegedDim,
                                         static_cast<std::size_t>(n) * task::kPrivilegedDim),
                 std::span<double>(buffer.values.data() + row0, n), n);

    // step the simulators
    terminal_priv.clear();
    terminal_envs.clear();
    std::vector<StepFlags> flags(n);
    for (int i = 0; i < n; ++i) {
      EnvSlot& s = envs.slot(i);
      task::Action a;
      std::copy_n(buffer.actions.data() + (row0 + i) * task::kActionDim, task::kActionDim,
                  a.begin());
      task::RewardBreakdown reward;
      flags[i] = envs.step_slot(i, a, reward);
      buffer.rewards[row0 + i] = reward.total;
      const auto terms = reward.terms();
      for (int k = 0; k < task::kNumRewardTerms; ++k) buffer.reward_term_sums[k] += terms[k];
      buffer.dones[row0 + i] = flags[i].done ? 1 : 0;
      buffer.timeouts[row0 + i] = flags[i].timeout ? 1 : 0;

      // the action becomes the previous action of the next observation
      s.prev_prev_action = s.prev_action;
      s.prev_action = a;

      if (!flags[i].done && s.state.time >= s.next_command_time) {
        s.command = task::sample_command(s.rng, envs.setup().commands);
        s.next_command_time += envs.setup().command_resample_seconds;
      }

      // noise-free next observation as the reconstruction target
      const task::Observation clean = envs.make_observation(i, /*with_noise=*/false);
      std::copy(clean.begin(), clean.end(),
                buffer.next_observation.begin() + (row0 + i) * task::kObservationDim);

      if (flags[i].timeout) {
        // value bootstrap across the artificial time limit
        const task::Observation term_obs = envs.make_observation(i, envs.setup().noise.enabled);
        const task::Privileged priv = task::assemble_privileged(term_obs, s.state, s.terrain);
        terminal_priv.insert(terminal_priv.end(), priv.begin(), priv.end());
        terminal_envs.push_back(i);
      }
    }
    if (!terminal_envs.empty()) {
      std::vector<double> term_values(terminal_envs.size());
      value.values(terminal_priv, term_values, static_cast<int>(terminal_envs.size()));
      for (std::size_t k = 0; k < terminal_envs.size(); ++k)
        buffer.rewards[row0 + terminal_envs[k]] += config.gamma * term_values[k];
    }

    // episode bookkeeping, resets, and the next observation
    for (int i = 0; i < n; ++i) {
      EnvSlot& s = envs.slot(i);
      if (flags[i].done) {
        buffer.episode_returns_completed.push_back(s.episode_reward);
        buffer.episode_lengths_completed.push_back(static_cast<double>(s.episode_steps));
        s.last_episode_reward = s.episode_reward;
        s.completed_episode = true;
        ++s.episodes_done;
        task::curriculum_update(s.curriculum, envs.tracking_fraction(s), flags[i].fell,
                                envs.setup().curriculum, s.rng);
        envs.reset_slot(i);
      } else {
        s.observation = envs.make_observation(i, envs.setup().noise.enabled);
        s.stack.push(s.observation);
      }
    }
  }

  // V(s_T) for the final bootstrap
  std::vector<double> final_priv(static_cast<std::size_t>(n) * task::kPrivilegedDim);
  for (int i = 0; i < n; ++i) {
    const task::Privileged priv = envs.make_privileged(i);
    std::copy(priv.begin(), priv.end(),
              final_priv.begin() + static_cast<std::size_t>(i) * task::kPrivilegedDim);
  }
  value.values(final_priv, buffer.bootstrap_values, n);
}

}  // namespace loco::rl
