#include "loco/nn/mlp.hpp"

#include <cmath>
#include <stdexcept>

namespace loco::nn {

Mlp::Mlp(std::vector<int> sizes, Activation act, Rng& rng, bool activate_out)
    : layer_sizes(std::move(sizes)), activation(act), activate_output(activate_out) {
  if (layer_sizes.size() < 2) throw std::invalid_argument("Mlp needs at least two layer sizes");
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    const int in = layer_sizes[l];
    const int out = layer_sizes[l + 1];
    Tensor w = Tensor::zeros({in, out});
    Tensor b = Tensor::zeros({1, out});
    // uniform fan-in init
    const double bound = 1.0 / std::sqrt(static_cast<double>(in));
    for (double& v : w.values) v = rng.uniform(-bound, bound);
    for (double& v : b.values) v = rng.uniform(-bound, bound);
    weights.push_back(std::move(w));
    biases.push_back(std::move(b));
  }
}

std::vector<Tensor*> Mlp::parameters() {
  std::vector<Tensor*> ps;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    ps.push_back(&weights[l]);
    ps.push_back(&biases[l]);
  }
  return ps;
}

void Mlp::zero_grad() {
  for (Tensor* p : parameters()) p->zero_grad();
}

bool Mlp::all_finite() const {
  for (const Tensor& w : weights)
    if (!w.all_finite()) return false;
  for (const Tensor& b : biases)
    if (!b.all_finite()) return false;
  return true;
}

namespace {

void apply_activation(Activation act, std::span<double> xs) {
  switch (act) {
    case Activation::ELU:
      for (double& x : xs) x = elu_scalar(x);
      break;
    case Activation::Tanh:
      for (double& x : xs) x = std::tanh(x);
      break;
    case Activation::Linear:
      break;
  }
}

}  // namespace

void Mlp::forward(std::span<const double> in, std::span<double> out, int batch) const {
  const int d_in = input_size();
  const int d_out = output_size();
  if (in.size() != static_cast<std::size_t>(batch) * d_in)
    throw std::invalid_argument("Mlp::forward: input size mismatch");
  if (out.size() != static_cast<std::size_t>(batch) * d_out)
    throw std::invalid_argument("Mlp::forward: output size mismatch");

  std::vector<double> cur(in.begin(), in.end());
  std::vector<double> next;
  for (int l = 0; l < num_layers(); ++l) {
    const int k = layer_sizes[l];
    const int m = layer_sizes[l + 1];
    next.assign(static_cast<std::size_t>(batch) * m, 0.0);
    matmul_accumulate(cur.data(), weights[l].values.data(), next.data(), batch, k, m);
    // bias after the product, same order as the tape forward
    for (int i = 0; i < batch; ++i) {
      double* row = next.data() + static_cast<std::size_t>(i) * m;
      for (int j = 0; j < m; ++j) row[j] += biases[l].values[j];
    }
    if (l + 1 < num_layers() || activate_output)
      apply_activation(activation, std::span<double>(next));
    cur.swap(next);
  }
  std::copy(cur.begin(), cur.end(), out.begin());
}

Tape::NodeId mlp_forward(Tape& tape, Mlp& net, Tape::NodeId input) {
  if (tape.value(input).cols() != net.input_size())
    throw std::invalid_argument("mlp_forward: input width does not match first layer");
  Tape::NodeId x = input;
  for (int l = 0; l < net.num_layers(); ++l) {
    x = tape.matmul(x, tape.param(net.weights[l]));
    x = tape.add_row(x, tape.param(net.biases[l]));
    const bool activate = l + 1 < net.num_layers() || net.activate_output;
    if (activate) {
      switch (net.activation) {
        case Activation::ELU:
          x = tape.elu(x);
          break;
        case Activation::Tanh:
          x = tape.tanh_op(x);
          break;
        case Activation::Linear:
          break;
      }
    }
  }
  return x;
}

const char* activation_name(Activation a) {
  switch (a) {
    case Activation::ELU:
      return "elu";
    case Activation::Linear:
      return "linear";
    case Activation::Tanh:
      return "tanh";
  }
  return "elu";
}

Activation activation_from_name(const std::string& s) {
  if (s == "elu") return Activation::ELU;
  if (s == "linear") return Activation::Linear;
  if (s == "tanh") return Activation::Tanh;
  throw std::invalid_argument("unknown activation: " + s);
}

}  // namespace loco::nn
