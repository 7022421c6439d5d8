#include "loco/rl/ppo.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "loco/rl/gae.hpp"

namespace loco::rl {

void prepare_advantages(RolloutBuffer& buffer, const PpoConfig& config) {
  GaeResult gae = compute_gae(buffer.rewards, buffer.values, buffer.dones,
                              buffer.bootstrap_values, buffer.num_envs, buffer.horizon,
                              config.gamma, config.gae_lambda);
  normalize_advantages(gae.advantages);
  buffer.advantages = std::move(gae.advantages);
  buffer.returns = std::move(gae.returns);
}

PpoReport ppo_update(const RolloutBuffer& buffer, PolicyNet& policy, ValueNet& value,
                     nn::Adam& policy_opt, nn::Adam& value_opt, const PpoConfig& config,
                     nn::Rng& shuffle_rng) {
  const std::int64_t total = buffer.steps();
  if (buffer.advantages.size() != static_cast<std::size_t>(total))
    throw std::logic_error("ppo_update: advantages not prepared");
  if (total % config.minibatches != 0)
    throw std::invalid_argument("ppo_update: batch not divisible into minibatches");
  const int mb_size = static_cast<int>(total / config.minibatches);

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);

  PpoReport report;
  int batches_done = 0;
  double clip_count = 0.0;

  for (int epoch = 0; epoch < config.epochs; ++epoch) {
    // Fisher-Yates with the run's own rng keeps the pass deterministic
    for (int i = static_cast<int>(total) - 1; i > 0; --i) {
      const int j = shuffle_rng.uniform_int(0, i);
      std::swap(order[i], order[j]);
    }

    double epoch_kl = 0.0;
    for (int mb = 0; mb < config.minibatches; ++mb) {
      // gather the minibatch
      nn::Tensor in = nn::Tensor::zeros({mb_size, kPolicyInputDim});
      nn::Tensor act = nn::Tensor::zeros({mb_size, task::kActionDim});
      nn::Tensor priv = nn::Tensor::zeros({mb_size, task::kPrivilegedDim});
      nn::Tensor old_logp = nn::Tensor::zeros({mb_size, 1});
      nn::Tensor adv = nn::Tensor::zeros({mb_size, 1});
      nn::Tensor ret = nn::Tensor::zeros({mb_size, 1});
      for (int r = 0; r < mb_size; ++r) {
        const int src = order[static_cast<std::size_t>(mb) * mb_size + r];
        std::copy_n(buffer.policy_inputs.data() + static_cast<std::size_t>(src) * kPolicyInputDim,
                    kPolicyInputDim, in.values.data() + static_cast<std::size_t>(r) * kPolicyInputDim);
        std::copy_n(buffer.actions.data() + static_cast<std::size_t>(src) * task::kActionDim,
                    task::kActionDim, act.values.data() + static_cast<std::size_t>(r) * task::kActionDim);
        std::copy_n(buffer.privileged.data() + static_cast<std::size_t>(src) * task::kPrivilegedDim,
                    task::kPrivilegedDim,
                    priv.values.data() + static_cast<std::size_t>(r) * task::kPrivilegedDim);
        old_logp.values[r] = buffer.log_probs[src];
        adv.values[r] = buffer.advantages[src];
        ret.values[r] = buffer.returns[src];
      }

      // actor: clipped surrogate with an entropy bonus
      {
        nn::Tape tape;
        auto mean = nn::mlp_forward(tape, policy.trunk, tape.constant(in));
        auto logp = tape.gaussian_log_prob(mean, tape.param(policy.head.log_std),
                                           tape.constant(act));
        auto ratio = tape.exp_op(tape.sub(logp, tape.constant(old_logp)));
        auto adv_c = tape.constant(adv);
        auto surr = tape.min_op(tape.mul(ratio, adv_c),
                                tape.mul(tape.clamp(ratio, 1.0 - config.clip, 1.0 + config.clip),
                                         adv_c));
        auto entropy = tape.gaussian_entropy(tape.param(policy.head.log_std));
        auto loss = tape.sub(tape.neg(tape.mean(surr)), tape.scale(entropy, config.entropy_coef));

        policy_opt.zero_grad();
        tape.backward(loss);
        nn::clip_grad_norm(policy.parameters(), config.max_grad_norm);
        policy_opt.step();
        policy.head.clamp_log_std();

        // stats from the pre-step evaluation
        const auto& rv = tape.value(ratio).values;
        double kl = 0.0;
        for (int r = 0; r < mb_size; ++r) {
          const double lr = std::log(rv[r]);
          kl += (rv[r] - 1.0) - lr;
          if (std::fabs(rv[r] - 1.0) > config.clip) clip_count += 1.0;
        }
        kl /= mb_size;
        epoch_kl += kl;
        report.approx_kl += kl;
        report.policy_loss += tape.value(loss).values[0];
        report.entropy += tape.value(entropy).values[0];
      }

      // critic regression to the returns
      {
        nn::Tape tape;
        auto pred = nn::mlp_forward(tape, value.net, tape.constant(priv));
        auto loss = tape.scale(tape.mse(pred, tape.constant(ret)), config.value_coef);
        value_opt.zero_grad();
        tape.backward(loss);
        nn::clip_grad_norm(value.parameters(), config.max_grad_norm);
        value_opt.step();
        report.value_loss += tape.value(loss).values[0];
      }
      ++batches_done;
    }

    ++report.epochs_run;
    if (epoch_kl / config.minibatches > config.kl_stop) break;  // reported, not fatal
  }

  report.policy_loss /= batches_done;
  report.value_loss /= batches_done;
  report.entropy /= batches_done;
  report.approx_kl /= batches_done;
  report.clip_fraction = clip_count / (static_cast<double>(batches_done) * mb_size);
  return report;
}

}  // namespace loco::rl
