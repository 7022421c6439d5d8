#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace loco::nn {

// Dense 64-bit float tensor. Rank 1 ({n}) is treated as a row vector by the
// 2-D ops; rank 2 is {rows, cols}, row-major. `grad` is empty until the
// tensor participates in a backward pass, after which it has the same length
// as `values`.
struct Tensor {
  std::vector<int> shape;
  std::vector<double> values;
  std::vector<double> grad;

  Tensor() = default;

  static Tensor zeros(std::vector<int> shape);
  static Tensor row(std::vector<double> v);  // shape {1, n}
  static Tensor full(std::vector<int> shape, double fill);

  std::int64_t size() const { return static_cast<std::int64_t>(values.size()); }
  int rows() const { return shape.size() == 2 ? shape[0] : 1; }
  int cols() const { return shape.empty() ? 0 : shape.back(); }

  double& at(int r, int c) { return values[static_cast<std::size_t>(r) * cols() + c]; }
  double at(int r, int c) const { return values[static_cast<std::size_t>(r) * cols() + c]; }

  void ensure_grad();  // allocate zeroed grad buffer if absent
  void zero_grad();
  bool all_finite() const;
};

// Reverse-mode tape over whole-tensor operations. Usage per training step:
// build the graph, call backward(loss) once, read gradients, reset().
// Parameters registered through param() accumulate into their own persistent
// grad buffers; everything else lives in tape-local nodes.
class Tape {
 public:
  using NodeId = int;

  // leaf with no gradient tracking
  NodeId constant(Tensor t);
  // leaf bound to an external parameter tensor; backward() adds into p.grad
  NodeId param(Tensor& p);

  // matrix product [n,k]x[k,m] -> [n,m]
  NodeId matmul(NodeId a, NodeId b);
  // [n,m] + [1,m] broadcast over rows
  NodeId add_row(NodeId a, NodeId bias);

  NodeId add(NodeId a, NodeId b);
  NodeId sub(NodeId a, NodeId b);
  NodeId mul(NodeId a, NodeId b);
  NodeId scale(NodeId a, double c);
  NodeId neg(NodeId a) { return scale(a, -1.0); }

  NodeId elu(NodeId a);
  NodeId tanh_op(NodeId a);
  NodeId exp_op(NodeId a);
  NodeId clamp(NodeId a, double lo, double hi);
  // elementwise minimum; on ties the gradient is routed to `a`
  NodeId min_op(NodeId a, NodeId b);

  NodeId sum(NodeId a);   // -> {1,1}
  NodeId mean(NodeId a);  // -> {1,1}
  // mean((a - b)^2) over all elements -> {1,1}
  NodeId mse(NodeId a, NodeId b);

  // Per-row log density of a diagonal Gaussian: mean [n,d], log_std [1,d],
  // action [n,d] (constant) -> [n,1].
  NodeId gaussian_log_prob(NodeId mean, NodeId log_std, NodeId action);
  // Mean per-sample entropy of the diagonal Gaussian -> {1,1}.
  NodeId gaussian_entropy(NodeId log_std);
  // KL(q || N(0,I)) summed over dims, averaged over rows. mu and log_sigma
  // are [n,d]; sigma is floored at sigma_floor inside. -> {1,1}
  NodeId kl_standard_normal(NodeId mu, NodeId log_sigma, double sigma_floor = 1e-6);

  const Tensor& value(NodeId id) const { return nodes_[id].value; }
  const std::vector<double>& grad_of(NodeId id) const { return nodes_[id].value.grad; }

  // seeds d(loss)/d(loss) = 1 and propagates; loss must be a scalar.
  // Calling twice without reset() is a usage error (throws std::logic_error).
  void backward(NodeId loss);
  void reset();

  std::size_t num_nodes() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    bool requires_grad = false;
    Tensor* bound_param = nullptr;
    std::function<void(Tape&, Node&)> backprop;  // reads value.grad, pushes to inputs
  };

  NodeId push(Tensor value, bool requires_grad);
  Node& node(NodeId id) { return nodes_[id]; }

  std::vector<Node> nodes_;
  bool backward_done_ = false;
};

// c [n,m] = a [n,k] * b [k,m]; accumulation over k in index order per output
// element, so results are identical for any thread count.
void matmul_accumulate(const double* a, const double* b, double* c, int n, int k, int m);

// da [n,k] += dc [n,m] * b^T; db [k,m] += a^T * dc
void matmul_backward(const double* a, const double* b, const double* dc, double* da, double* db,
                     int n, int k, int m);

double elu_scalar(double x);

}  // namespace loco::nn
