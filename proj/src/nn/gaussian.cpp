#include "loco/nn/gaussian.hpp"

#include <cmath>
#include <stdexcept>

namespace loco::nn {

namespace {
constexpr double kHalfLog2Pi = 0.9189385332046727;
constexpr double kHalfLog2PiE = 1.4189385332046727;
}  // namespace

void GaussianHead::sample(std::span<const double> mean, std::span<double> action,
                          Rng& rng) const {
  if (mean.size() != static_cast<std::size_t>(dim()) || action.size() != mean.size())
    throw std::invalid_argument("GaussianHead::sample: dimension mismatch");
  for (int j = 0; j < dim(); ++j)
    action[j] = mean[j] + std::exp(log_std.values[j]) * rng.normal();
}

double GaussianHead::log_prob(std::span<const double> mean,
                              std::span<const double> action) const {
  if (mean.size() != static_cast<std::size_t>(dim()) || action.size() != mean.size())
    throw std::invalid_argument("GaussianHead::log_prob: dimension mismatch");
  double lp = 0.0;
  for (int j = 0; j < dim(); ++j) {
    const double ls = log_std.values[j];
    const double z = (action[j] - mean[j]) * std::exp(-ls);
    lp += -0.5 * z * z - ls - kHalfLog2Pi;
  }
  return lp;
}

double GaussianHead::entropy() const {
  double h = 0.0;
  for (double ls : log_std.values) h += ls + kHalfLog2PiE;
  return h;
}

}  // namespace loco::nn
