#pragma once

#include <span>
#include <string>
#include <vector>

#include "loco/nn/rng.hpp"
#include "loco/nn/tensor.hpp"

namespace loco::nn {

enum class Activation { ELU, Linear, Tanh };

// Fully connected network: weights[l] is [in_l, out_l], biases[l] is
// [1, out_l]. The activation applies to every hidden layer; the output layer
// is linear unless activate_output is set (used when another module consumes
// the last hidden features directly).
struct Mlp {
  std::vector<int> layer_sizes;
  Activation activation = Activation::ELU;
  bool activate_output = false;
  std::vector<Tensor> weights;
  std::vector<Tensor> biases;

  Mlp() = default;
  Mlp(std::vector<int> sizes, Activation act, Rng& rng, bool activate_output = false);

  int input_size() const { return layer_sizes.front(); }
  int output_size() const { return layer_sizes.back(); }
  int num_layers() const { return static_cast<int>(weights.size()); }

  std::vector<Tensor*> parameters();
  void zero_grad();
  bool all_finite() const;

  // Inference without gradient recording. `in` is [batch * input_size],
  // row-major; writes [batch * output_size]. Accumulation order matches the
  // tape forward exactly.
  void forward(std::span<const double> in, std::span<double> out, int batch = 1) const;
};

// Records the full forward pass on the tape; parameter gradients flow into
// the Mlp tensors on backward(). Throws on input width mismatch.
Tape::NodeId mlp_forward(Tape& tape, Mlp& net, Tape::NodeId input);

const char* activation_name(Activation a);
Activation activation_from_name(const std::string& s);

}  // namespace loco::nn
