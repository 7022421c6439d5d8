#include "loco/rl/estimator.hpp"

#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace loco::rl {

namespace {

// shared tape construction for the loss; returns the node ids needed for
// reporting
struct LossNodes {
  nn::Tape::NodeId total;
  double est = 0.0, recon = 0.0, kl = 0.0;
};

LossNodes build_loss(nn::Tape& tape, ContextEstimator& estimator, nn::Tensor temporal,
                     nn::Tensor v_true, nn::Tensor next_obs, nn::Tensor eps,
                     const EstimatorConfig& config) {
  auto hidden = nn::mlp_forward(tape, estimator.encoder, tape.constant(std::move(temporal)));
  auto vel = nn::mlp_forward(tape, estimator.velocity_head, hidden);
  auto est = tape.mse(vel, tape.constant(std::move(v_true)));

  LossNodes nodes;
  if (estimator.arch == EstimatorArch::ContextVae) {
    auto mu = nn::mlp_forward(tape, estimator.latent_mu, hidden);
    auto log_sigma = nn::mlp_forward(tape, estimator.latent_log_sigma, hidden);
    auto z = tape.add(mu, tape.mul(tape.exp_op(log_sigma), tape.constant(std::move(eps))));
    auto recon = nn::mlp_forward(tape, estimator.decoder, z);
    auto recon_loss = tape.mse(recon, tape.constant(std::move(next_obs)));
    auto kl = tape.kl_standard_normal(mu, log_sigma, config.sigma_floor);
    nodes.total = tape.add(est, tape.add(recon_loss, tape.scale(kl, config.beta)));
    nodes.recon = tape.value(recon_loss).values[0];
    nodes.kl = tape.value(kl).values[0];
  } else {
    nodes.total = est;
  }
  nodes.est = tape.value(est).values[0];
  return nodes;
}

}  // namespace

EstimatorReport estimator_loss(const ContextEstimator& estimator,
                               const std::vector<double>& temporal,
                               const std::vector<double>& true_velocity,
                               const std::vector<double>& next_observation, int n,
                               const EstimatorConfig& config, nn::Rng& rng) {
  if (n < 1) throw std::invalid_argument("estimator_loss: empty batch");
  EstimatorReport r;

  std::vector<double> vel(static_cast<std::size_t>(n) * kVelocityDim);
  std::vector<double> mu(static_cast<std::size_t>(n) * kLatentDim);
  std::vector<double> sigma(static_cast<std::size_t>(n) * kLatentDim);
  estimator.encode(temporal, vel, mu, sigma, n, config.sigma_floor);

  double est = 0.0;
  for (std::size_t i = 0; i < vel.size(); ++i) {
    const double d = vel[i] - true_velocity[i];
    est += d * d;
  }
  r.loss_est = est / vel.size();

  if (estimator.arch == EstimatorArch::ContextVae) {
    std::vector<double> z(mu.size());
    reparameterize(mu, sigma, z, rng);
    std::vector<double> recon(static_cast<std::size_t>(n) * task::kObservationDim);
    estimator.decode(z, recon, n);
    double rec = 0.0;
    for (std::size_t i = 0; i < recon.size(); ++i) {
      const double d = recon[i] - next_observation[i];
      rec += d * d;
    }
    r.loss_recon = rec / recon.size();
    double kl = 0.0;
    for (int i = 0; i < n; ++i)
      kl += kl_standard_normal(
          std::span<const double>(mu.data() + static_cast<std::size_t>(i) * kLatentDim, kLatentDim),
          std::span<const double>(sigma.data() + static_cast<std::size_t>(i) * kLatentDim,
                                  kLatentDim));
    r.loss_kl = kl / n;
  }
  r.loss_total = r.loss_est + r.loss_recon + config.beta * r.loss_kl;
  return r;
}

EstimatorReport estimator_update(ContextEstimator& estimator, const RolloutBuffer& buffer,
                                 nn::Adam& opt, const EstimatorConfig& config,
                                 nn::Rng& shuffle_rng, nn::Rng& sample_rng) {
  if (estimator.arch == EstimatorArch::None) return {};
  const std::int64_t total = buffer.steps();
  if (total % config.minibatches != 0)
    throw std::invalid_argument("estimator_update: batch not divisible into minibatches");
  const int mb_size = static_cast<int>(total / config.minibatches);

  std::vector<int> order(total);
  std::iota(order.begin(), order.end(), 0);
  for (int i = static_cast<int>(total) - 1; i > 0; --i) {
    const int j = shuffle_rng.uniform_int(0, i);
    std::swap(order[i], order[j]);
  }

  EstimatorReport report;
  for (int mb = 0; mb < config.minibatches; ++mb) {
    nn::Tensor temporal = nn::Tensor::zeros({mb_size, task::kTemporalDim});
    nn::Tensor v_true = nn::Tensor::zeros({mb_size, kVelocityDim});
    nn::Tensor next_obs = nn::Tensor::zeros({mb_size, task::kObservationDim});
    nn::Tensor eps = nn::Tensor::zeros({mb_size, kLatentDim});
    for (int r = 0; r < mb_size; ++r) {
      const int src = order[static_cast<std::size_t>(mb) * mb_size + r];
      std::copy_n(buffer.temporal.data() + static_cast<std::size_t>(src) * task::kTemporalDim,
                  task::kTemporalDim,
                  temporal.values.data() + static_cast<std::size_t>(r) * task::kTemporalDim);
      std::copy_n(buffer.true_velocity.data() + static_cast<std::size_t>(src) * 3, 3,
                  v_true.values.data() + static_cast<std::size_t>(r) * 3);
      std::copy_n(buffer.next_observation.data() +
                      static_cast<std::size_t>(src) * task::kObservationDim,
                  task::kObservationDim,
                  next_obs.values.data() + static_cast<std::size_t>(r) * task::kObservationDim);
    }
    for (double& e : eps.values) e = sample_rng.normal();

    nn::Tape tape;
    const LossNodes nodes = build_loss(tape, estimator, std::move(temporal), std::move(v_true),
                                       std::move(next_obs), std::move(eps), config);
    opt.zero_grad();
    tape.backward(nodes.total);
    nn::clip_grad_norm(estimator.parameters(), config.max_grad_norm);
    opt.step();

    report.loss_total += tape.value(nodes.total).values[0];
    report.loss_est += nodes.est;
    report.loss_recon += nodes.recon;
    report.loss_kl += nodes.kl;
  }
  report.loss_total /= config.minibatches;
  report.loss_est /= config.minibatches;
  report.loss_recon /= config.minibatches;
  report.loss_kl /= config.minibatches;
  return report;
}

double bootstrap_probability(const std::vector<double>& episodic_rewards) {
  if (episodic_rewards.size() < 2)
    throw std::invalid_argument("bootstrap_probability needs at least two environments");
  const double m = static_cast<double>(episodic_rewards.size());
  double mean = 0.0;
  for (double r : episodic_rewards) mean += r;
  mean /= m;
  double var = 0.0;
  for (double r : episodic_rewards) var += (r - mean) * (r - mean);
  var /= m;
  // tanh saturates to 1.0 in double precision for large variances; keep the
  // probability strictly positive as the closed form is
  return std::max(1.0 - std::tanh(var), std::numeric_limits<double>::min());
}

void BootstrapSchedule::update(const std::vector<double>& episodic_rewards, nn::Rng& rng) {
  if (mode == BootstrapMode::Always) {
    p_boot = 1.0;
    std::fill(gates.begin(), gates.end(), 1);
    return;
  }
  std::vector<double> scaled(episodic_rewards.size());
  for (std::size_t i = 0; i < scaled.size(); ++i) scaled[i] = reward_scale * episodic_rewards[i];
  p_boot = bootstrap_probability(scaled);
  for (auto& g : gates) g = rng.bernoulli(p_boot) ? 1 : 0;
}

}  // namespace loco::rl
