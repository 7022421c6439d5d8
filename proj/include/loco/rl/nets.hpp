#pragma once

#include <span>
#include <string>
#include <vector>

#include "loco/nn/gaussian.hpp"
#include "loco/nn/mlp.hpp"
#include "loco/nn/rng.hpp"
#include "loco/task/task.hpp"

namespace loco::rl {

inline constexpr int kLatentDim = 16;
inline constexpr int kVelocityDim = 3;
// policy consumes [o_t | v_hat | z]
inline constexpr int kPolicyInputDim = task::kObservationDim + kVelocityDim + kLatentDim;

// Actor: MLP trunk to the action mean plus a learnable per-dimension log std.
struct PolicyNet {
  nn::Mlp trunk;          // 64 -> 512 -> 256 -> 128 -> 12
  nn::GaussianHead head;  // 12

  PolicyNet() = default;
  explicit PolicyNet(nn::Rng& rng)
      : trunk({kPolicyInputDim, 512, 256, 128, task::kActionDim}, nn::Activation::ELU, rng),
        head(task::kActionDim) {}

  // batched deterministic mean
  void mean(std::span<const double> input, std::span<double> out, int batch = 1) const {
    trunk.forward(input, out, batch);
  }
  std::vector<nn::Tensor*> parameters() {
    auto ps = trunk.parameters();
    ps.push_back(&head.log_std);
    return ps;
  }
  bool all_finite() const { return trunk.all_finite() && head.log_std.all_finite(); }
};

// Critic over the privileged state; only simulator ground truth reaches it.
struct ValueNet {
  nn::Mlp net;  // 172 -> 512 -> 256 -> 128 -> 1

  ValueNet() = default;
  explicit ValueNet(nn::Rng& rng)
      : net({task::kPrivilegedDim, 512, 256, 128, 1}, nn::Activation::ELU, rng) {}

  void values(std::span<const double> privileged, std::span<double> out, int batch = 1) const {
    net.forward(privileged, out, batch);
  }
  std::vector<nn::Tensor*> parameters() { return net.parameters(); }
  bool all_finite() const { return net.all_finite(); }
};

// Which estimator feeds the policy:
//  - ContextVae: shared encoder with a velocity head and a variational latent
//    head plus a next-observation decoder (the full architecture).
//  - VelocityOnly: shared encoder with only the velocity head; the latent
//    input to the policy is zero and only the velocity loss trains.
//  - None: no estimator at all; the policy sees zeros for both estimates.
enum class EstimatorArch { ContextVae, VelocityOnly, None };

EstimatorArch estimator_arch_from_ablation(const std::string& ablation);

// Estimator over the stacked observation history: one encoder trunk, three
// linear heads (velocity, latent mean, latent log-sigma) and a decoder that
// reconstructs the next observation from the sampled latent.
struct ContextEstimator {
  nn::Mlp encoder;         // 270 -> 128 -> 64, ELU on the last hidden too
  nn::Mlp velocity_head;   // 64 -> 3
  nn::Mlp latent_mu;       // 64 -> 16
  nn::Mlp latent_log_sigma;  // 64 -> 16
  nn::Mlp decoder;         // 16 -> 64 -> 128 -> 45
  EstimatorArch arch = EstimatorArch::ContextVae;

  ContextEstimator() = default;
  explicit ContextEstimator(nn::Rng& rng, EstimatorArch a = EstimatorArch::ContextVae)
      : encoder({task::kTemporalDim, 128, 64}, nn::Activation::ELU, rng, /*activate_output=*/true),
        velocity_head({64, kVelocityDim}, nn::Activation::Linear, rng),
        latent_mu({64, kLatentDim}, nn::Activation::Linear, rng),
        latent_log_sigma({64, kLatentDim}, nn::Activation::Linear, rng),
        decoder({kLatentDim, 64, 128, task::kObservationDim}, nn::Activation::ELU, rng),
        arch(a) {}

  // Deterministic encoding of a batch of stacked observations. Writes
  // batch*3, batch*16, batch*16; sigma is exp(log_sigma) floored at
  // sigma_floor.
  void encode(std::span<const double> temporal, std::span<double> vel, std::span<double> mu,
              std::span<double> sigma, int batch = 1, double sigma_floor = 1e-6) const;

  void decode(std::span<const double> z, std::span<double> recon, int batch = 1) const;

  // trainable parameters for the active architecture
  std::vector<nn::Tensor*> parameters();
  bool all_finite() const;
};

// z = mu + sigma * eps with eps ~ N(0, I) from rng
void reparameterize(std::span<const double> mu, std::span<const double> sigma,
                    std::span<double> z, nn::Rng& rng);

// closed-form KL(N(mu, diag sigma^2) || N(0, I)) summed over dimensions
double kl_standard_normal(std::span<const double> mu, std::span<const double> sigma);

}  // namespace loco::rl
