#include "loco/rl/nets.hpp"

#include <cmath>
#include <stdexcept>

namespace loco::rl {

EstimatorArch estimator_arch_from_ablation(const std::string& ablation) {
  if (ablation == "full" || ablation == "no-adaboot") return EstimatorArch::ContextVae;
  if (ablation == "estimator-only") return EstimatorArch::VelocityOnly;
  if (ablation == "baseline-no-estimator") return EstimatorArch::None;
  throw std::invalid_argument("unknown ablation: " + ablation);
}

void ContextEstimator::encode(std::span<const double> temporal, std::span<double> vel,
                              std::span<double> mu, std::span<double> sigma, int batch,
                              double sigma_floor) const {
  std::vector<double> hidden(static_cast<std::size_t>(batch) * 64);
  encoder.forward(temporal, hidden, batch);
  velocity_head.forward(hidden, vel, batch);
  latent_mu.forward(hidden, mu, batch);
  latent_log_sigma.forward(hidden, sigma, batch);
  for (double& s : sigma) s = std::max(std::exp(s), sigma_floor);
}

void ContextEstimator::decode(std::span<const double> z, std::span<double> recon,
                              int batch) const {
  decoder.forward(z, recon, batch);
}

std::vector<nn::Tensor*> ContextEstimator::parameters() {
  std::vector<nn::Tensor*> ps;
  if (arch == EstimatorArch::None) return ps;
  for (nn::Tensor* p : encoder.parameters()) ps.push_back(p);
  for (nn::Tensor* p : velocity_head.parameters()) ps.push_back(p);
  if (arch == EstimatorArch::ContextVae) {
    for (nn::Tensor* p : latent_mu.parameters()) ps.push_back(p);
    for (nn::Tensor* p : latent_log_sigma.parameters()) ps.push_back(p);
    for (nn::Tensor* p : decoder.parameters()) ps.push_back(p);
  }
  return ps;
}

bool ContextEstimator::all_finite() const {
  return encoder.all_finite() && velocity_head.all_finite() && latent_mu.all_finite() &&
         latent_log_sigma.all_finite() && decoder.all_finite();
}

void reparameterize(std::span<const double> mu, std::span<const double> sigma,
                    std::span<double> z, nn::Rng& rng) {
  for (std::size_t i = 0; i < z.size(); ++i) z[i] = mu[i] + sigma[i] * rng.normal();
}

double kl_standard_normal(std::span<const double> mu, std::span<const double> sigma) {
  double acc = 0.0;
  for (std::size_t i = 0; i < mu.size(); ++i) {
    const double s2 = sigma[i] * sigma[i];
    acc += 0.5 * (mu[i] * mu[i] + s2 - 1.0 - std::log(s2));
  }
  return acc;
}

}  // namespace loco::rl
