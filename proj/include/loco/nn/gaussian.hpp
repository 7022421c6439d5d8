#pragma once

#include <span>
#include <vector>

#include "loco/nn/rng.hpp"
#include "loco/nn/tensor.hpp"

namespace loco::nn {

inline constexpr double kLogStdMin = -20.0;
inline constexpr double kLogStdMax = 2.0;

// Diagonal Gaussian action head. The mean comes from a network; log_std is a
// free learnable vector, clamped to [kLogStdMin, kLogStdMax] after every
// optimizer step so std stays strictly positive and bounded.
struct GaussianHead {
  Tensor log_std;  // [1, dim]

  GaussianHead() = default;
  explicit GaussianHead(int dim) { log_std = Tensor::zeros({1, dim}); }

  int dim() const { return log_std.cols(); }

  void clamp_log_std() {
    for (double& v : log_std.values)
      v = v < kLogStdMin ? kLogStdMin : (v > kLogStdMax ? kLogStdMax : v);
  }

  void sample(std::span<const double> mean, std::span<double> action, Rng& rng) const;
  double log_prob(std::span<const double> mean, std::span<const double> action) const;
  double entropy() const;
};

}  // namespace loco::nn
