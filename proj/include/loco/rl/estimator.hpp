#pragma once

#include <cstdint>
#include <vector>

#include "loco/nn/adam.hpp"
#include "loco/nn/rng.hpp"
#include "loco/rl/nets.hpp"
#include "loco/rl/rollout.hpp"

namespace loco::rl {

struct EstimatorConfig {
  double beta = 0.01;        // KL weight
  double sigma_floor = 1e-6;
  double learning_rate = 1e-3;
  int minibatches = 4;
  double max_grad_norm = 1.0;
};

struct EstimatorReport {
  double loss_total = 0.0;   // est + recon + beta * kl
  double loss_est = 0.0;     // velocity MSE
  double loss_recon = 0.0;   // next-observation MSE
  double loss_kl = 0.0;      // unweighted KL
};

// Loss components on one batch without touching gradients. `rng` drives the
// latent reparameterization. Arrays are row-major: temporal [n,270],
// true_velocity [n,3], next_observation [n,45].
EstimatorReport estimator_loss(const ContextEstimator& estimator,
                               const std::vector<double>& temporal,
                               const std::vector<double>& true_velocity,
                               const std::vector<double>& next_observation, int n,
                               const EstimatorConfig& config, nn::Rng& rng);

// One pass of minibatch Adam updates over the freshly collected buffer,
// synchronous with the policy update of the same iteration. Touches only the
// estimator's parameters.
EstimatorReport estimator_update(ContextEstimator& estimator, const RolloutBuffer& buffer,
                                 nn::Adam& opt, const EstimatorConfig& config,
                                 nn::Rng& shuffle_rng, nn::Rng& sample_rng);

// 1 - tanh(population variance of the episodic rewards); requires at least
// two environments.
double bootstrap_probability(const std::vector<double>& episodic_rewards);

enum class BootstrapMode {
  Adaptive,  // probability tracks the reward variance
  Always,    // estimates always feed the policy
};

// Per-iteration gate state: which environments receive estimated inputs.
struct BootstrapSchedule {
  BootstrapMode mode = BootstrapMode::Adaptive;
  double reward_scale = 1.0;  // optional pre-scaling of R before the variance
  double p_boot = 1.0;
  std::vector<std::uint8_t> gates;

  void resize(int num_envs) { gates.assign(num_envs, 1); }

  // update p_boot from the reward vector and redraw the per-env bits; bits
  // stay fixed for the whole iteration
  void update(const std::vector<double>& episodic_rewards, nn::Rng& rng);
};

}  // namespace loco::rl
