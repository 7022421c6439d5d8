#pragma once

#include <cstdint>
#include <vector>

namespace loco::rl {

struct GaeResult {
  std::vector<double> advantages;
  std::vector<double> returns;
};

// Generalized advantage estimation over a time-major [horizon][num_envs]
// batch. dones mask the bootstrap across episode boundaries;
// bootstrap_values supplies V(s_T) per environment.
GaeResult compute_gae(const std::vector<double>& rewards, const std::vector<double>& values,
                      const std::vector<std::uint8_t>& dones,
                      const std::vector<double>& bootstrap_values, int num_envs, int horizon,
                      double gamma, double lambda);

// in-place batch normalization to zero mean, unit std
void normalize_advantages(std::vector<double>& advantages);

}  // namespace loco::rl
