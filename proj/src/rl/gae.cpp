#include "loco/rl/gae.hpp"

#include <cmath>
#include <stdexcept>

namespace loco::rl {

GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones,
                      const std::vector<double>& bootstrap_values, int num_envs, int horizon,
                      double gamma, double lambda) {
  const std::size_t n = static_cast<std::size_t>(num_envs) * horizon;
  if (rewards.size() != n || values.size() != n || dones.size() != n ||
      bootstrap_values.size() != static_cast<std::size_t>(num_envs))
    throw std::invalid_argument("compute_gae: size mismatch");

  GaeResult out;
  out.advantages.assign(n, 0.0);
  out.returns.assign(n, 0.0);
  for (int i = 0; i < num_envs; ++i) {
    double gae = 0.0;
    for (int t = horizon - 1; t >= 0; --t) {
      const std::size_t idx = static_cast<std::size_t>(t) * num_envs + i;
      const double not_done = dones[idx] ? 0.0 : 1.0;
      const double next_value =
          t + 1 < horizon ? values[static_cast<std::size_t>(t + 1) * num_envs + i]
                          : bootstrap_values[i];
      const double delta = rewards[idx] + gamma * next_value * not_done - values[idx];
      gae = delta + gamma * lambda * not_done * gae;
      out.advantages[idx] = gae;
      out.returns[idx] = gae + values[idx];
    }
  }
  return out;
}

void normalize_advantages(std::vector<double>& advantages) {
  if (advantages.empty()) return;
  double mean = 0.0;
  for (double a : advantages) mean += a;
  mean /= advantages.size();
  double var = 0.0;
  for (double a : advantages) var += (a - mean) * (a - mean);
  var /= advantages.size();
  const double inv = 1.0 / (std::sqrt(var) + 1e-8);
  for (double& a : advantages) a = (a - mean) * inv;
}

}  // namespace loco::rl
