#pragma once

#include <cstdint>
#include <vector>

#include "loco/nn/tensor.hpp"

namespace loco::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
};

// Adam with bias correction over a fixed set of parameter tensors. Gradients
// are read from each tensor's grad buffer; a tensor whose gradient contains a
// non-finite value is skipped for that step and counted in the report.
class Adam {
 public:
  Adam() = default;
  Adam(std::vector<Tensor*> params, AdamConfig config);

  struct StepReport {
    int skipped_tensors = 0;
  };

  StepReport step();
  void zero_grad();

  std::int64_t step_count() const { return step_; }
  const AdamConfig& config() const { return config_; }
  AdamConfig& config() { return config_; }

  // flat serialization of the moment accumulators, parameter order
  std::vector<std::vector<double>> moments_m() const;
  std::vector<std::vector<double>> moments_v() const;
  void restore(std::int64_t step, const std::vector<std::vector<double>>& m,
               const std::vector<std::vector<double>>& v);

 private:
  std::vector<Tensor*> params_;
  std::vector<std::vector<double>> m_, v_;
  AdamConfig config_;
  std::int64_t step_ = 0;
};

// Scales every gradient by max_norm / ||g|| when the global norm exceeds
// max_norm; returns the pre-clip norm. max_norm <= 0 disables clipping.
double clip_grad_norm(const std::vector<Tensor*>& params, double max_norm);

}  // namespace loco::nn
