#pragma once

#include "loco/nn/adam.hpp"
#include "loco/nn/rng.hpp"
#include "loco/rl/nets.hpp"
#include "loco/rl/rollout.hpp"

namespace loco::rl {

struct PpoConfig {
  double clip = 0.2;
  double gae_lambda = 0.95;
  double gamma = 0.99;
  double learning_rate = 1e-3;
  int epochs = 5;
  int minibatches = 4;
  double entropy_coef = 0.01;
  double value_coef = 1.0;
  int horizon = 24;
  int num_envs = 64;
  double kl_stop = 0.05;  // early-stop threshold on the approximate KL
  double max_grad_norm = 1.0;
};

struct PpoReport {
  double policy_loss = 0.0;
  double value_loss = 0.0;
  double entropy = 0.0;
  double clip_fraction = 0.0;
  double approx_kl = 0.0;
  int epochs_run = 0;
};

// Clipped-surrogate update over the buffer. Assumes buffer.advantages /
// buffer.returns were filled (see prepare_advantages). The actor and critic
// have separate optimizers; the actor's log_std is re-clamped after every
// step.
PpoReport ppo_update(const RolloutBuffer& buffer, PolicyNet& policy, ValueNet& value,
                     nn::Adam& policy_opt, nn::Adam& value_opt, const PpoConfig& config,
                     nn::Rng& shuffle_rng);

// GAE + batch normalization, writing buffer.advantages / buffer.returns.
void prepare_advantages(RolloutBuffer& buffer, const PpoConfig& config);

}  // namespace loco::rl
