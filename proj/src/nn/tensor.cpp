#include "loco/nn/tensor.hpp"

#include <cmath>
#include <cstddef>
#include <numeric>
#include <stdexcept>

namespace loco::nn {

namespace {

std::int64_t shape_size(const std::vector<int>& shape) {
  std::int64_t n = 1;
  for (int d : shape) {
    if (d < 0) throw std::invalid_argument("negative tensor dimension");
    n *= d;
  }
  return shape.empty() ? 0 : n;
}

void check_same_shape(const Tensor& a, const Tensor& b, const char* op) {
  if (a.shape != b.shape) throw std::invalid_argument(std::string(op) + ": shape mismatch");
}

}  // namespace

Tensor Tensor::zeros(std::vector<int> shape) {
  Tensor t;
  t.shape = std::move(shape);
  t.values.assign(static_cast<std::size_t>(shape_size(t.shape)), 0.0);
  return t;
}

Tensor Tensor::row(std::vector<double> v) {
  Tensor t;
  t.shape = {1, static_cast<int>(v.size())};
  t.values = std::move(v);
  return t;
}

Tensor Tensor::full(std::vector<int> shape, double fill) {
  Tensor t = zeros(std::move(shape));
  for (double& x : t.values) x = fill;
  return t;
}

void Tensor::ensure_grad() {
  if (grad.size() != values.size()) grad.assign(values.size(), 0.0);
}

void Tensor::zero_grad() { grad.assign(values.size(), 0.0); }

bool Tensor::all_finite() const {
  for (double v : values)
    if (!std::isfinite(v)) return false;
  return true;
}

double elu_scalar(double x) { return x >= 0.0 ? x : std::expm1(x); }

void matmul_accumulate(const double* a, const double* b, double* c, int n, int k, int m) {
#pragma omp parallel for schedule(static) if (static_cast<long long>(n) * k * m > 65536)
  for (int i = 0; i < n; ++i) {
    const double* ai = a + static_cast<std::size_t>(i) * k;
    double* ci = c + static_cast<std::size_t>(i) * m;
    for (int kk = 0; kk < k; ++kk) {
      const double aik = ai[kk];
      const double* bk = b + static_cast<std::size_t>(kk) * m;
      for (int j = 0; j < m; ++j) ci[j] += aik * bk[j];
    }
  }
}

void matmul_backward(const double* a, const double* b, const double* dc, double* da, double* db,
                     int n, int k, int m) {
  if (da) {
    // da[i,kk] = sum_j dc[i,j] * b[kk,j]
#pragma omp parallel for schedule(static) if (static_cast<long long>(n) * k * m > 65536)
    for (int i = 0; i < n; ++i) {
      const double* dci = dc + static_cast<std::size_t>(i) * m;
      double* dai = da + static_cast<std::size_t>(i) * k;
      for (int kk = 0; kk < k; ++kk) {
        const double* bk = b + static_cast<std::size_t>(kk) * m;
        double acc = 0.0;
        for (int j = 0; j < m; ++j) acc += dci[j] * bk[j];
        dai[kk] += acc;
      }
    }
  }
  if (db) {
    // db[kk,j] = sum_i a[i,kk] * dc[i,j]
#pragma omp parallel for schedule(static) if (static_cast<long long>(n) * k * m > 65536)
    for (int kk = 0; kk < k; ++kk) {
      double* dbk = db + static_cast<std::size_t>(kk) * m;
      for (int i = 0; i < n; ++i) {
        const double aik = a[static_cast<std::size_t>(i) * k + kk];
        const double* dci = dc + static_cast<std::size_t>(i) * m;
        for (int j = 0; j < m; ++j) dbk[j] += aik * dci[j];
      }
    }
  }
}

Tape::NodeId Tape::push(Tensor value, bool requires_grad) {
  Node n;
  n.value = std::move(value);
  n.requires_grad = requires_grad;
  if (requires_grad) n.value.ensure_grad();
  nodes_.push_back(std::move(n));
  return static_cast<NodeId>(nodes_.size()) - 1;
}

Tape::NodeId Tape::constant(Tensor t) { return push(std::move(t), false); }

Tape::NodeId Tape::param(Tensor& p) {
  p.ensure_grad();
  Tensor copy = p;
  copy.grad.clear();  // node gradients always start at zero
  NodeId id = push(std::move(copy), true);
  nodes_[id].bound_param = &p;
  return id;
}

Tape::NodeId Tape::matmul(NodeId a, NodeId b) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[b].value;
  if (ta.cols() != tb.rows()) throw std::invalid_argument("matmul: inner dimension mismatch");
  const int n = ta.rows(), k = ta.cols(), m = tb.cols();
  Tensor out = Tensor::zeros({n, m});
  matmul_accumulate(ta.values.data(), tb.values.data(), out.values.data(), n, k, m);
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, b, n, k, m](Tape& t, Node& self) {
      Node& na = t.node(a);
      Node& nb = t.node(b);
      matmul_backward(na.value.values.data(), nb.value.values.data(), self.value.grad.data(),
                      na.requires_grad ? na.value.grad.data() : nullptr,
                      nb.requires_grad ? nb.value.grad.data() : nullptr, n, k, m);
    };
  }
  return id;
}

Tape::NodeId Tape::add_row(NodeId a, NodeId bias) {
  const Tensor& ta = nodes_[a].value;
  const Tensor& tb = nodes_[bias].value;
  if (tb.rows() != 1 || tb.cols() != ta.cols())
    throw std::invalid_argument("add_row: bias must be [1, cols]");
  Tensor out = ta;
  out.grad.clear();
  const int n = ta.rows(), m = ta.cols();
  for (int i = 0; i < n; ++i)
    for (int j = 0; j < m; ++j) out.values[static_cast<std::size_t>(i) * m + j] += tb.values[j];
  const bool rg = nodes_[a].requires_grad || nodes_[bias].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, bias, n, m](Tape& t, Node& self) {
      Node& na = t.node(a);
      Node& nb = t.node(bias);
      if (na.requires_grad)
        for (std::size_t i = 0; i < self.value.grad.size(); ++i)
          na.value.grad[i] += self.value.grad[i];
      if (nb.requires_grad)
        for (int i = 0; i < n; ++i)
          for (int j = 0; j < m; ++j)
            nb.value.grad[j] += self.value.grad[static_cast<std::size_t>(i) * m + j];
    };
  }
  return id;
}

Tape::NodeId Tape::add(NodeId a, NodeId b) {
  check_same_shape(nodes_[a].value, nodes_[b].value, "add");
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] += nodes_[b].value.values[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, b](Tape& t, Node& self) {
      for (NodeId src : {a, b}) {
        Node& n = t.node(src);
        if (!n.requires_grad) continue;
        for (std::size_t i = 0; i < self.value.grad.size(); ++i)
          n.value.grad[i] += self.value.grad[i];
      }
    };
  }
  return id;
}

Tape::NodeId Tape::sub(NodeId a, NodeId b) {
  check_same_shape(nodes_[a].value, nodes_[b].value, "sub");
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] -= nodes_[b].value.values[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, b](Tape& t, Node& self) {
      Node& na = t.node(a);
      if (na.requires_grad)
        for (std::size_t i = 0; i < self.value.grad.size(); ++i)
          na.value.grad[i] += self.value.grad[i];
      Node& nb = t.node(b);
      if (nb.requires_grad)
        for (std::size_t i = 0; i < self.value.grad.size(); ++i)
          nb.value.grad[i] -= self.value.grad[i];
    };
  }
  return id;
}

Tape::NodeId Tape::mul(NodeId a, NodeId b) {
  check_same_shape(nodes_[a].value, nodes_[b].value, "mul");
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (std::size_t i = 0; i < out.values.size(); ++i) out.values[i] *= nodes_[b].value.values[i];
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, b](Tape& t, Node& self) {
      Node& na = t.node(a);
      Node& nb = t.node(b);
      if (na.requires_grad)
        for (std::size_t i = 0; i < self.value.grad.size(); ++i)
          na.value.grad[i] += self.value.grad[i] * nb.value.values[i];
      if (nb.requires_grad)
        for (std::size_t i = 0; i < self.value.grad.size(); ++i)
          nb.value.grad[i] += self.value.grad[i] * na.value.values[i];
    };
  }
  return id;
}

Tape::NodeId Tape::scale(NodeId a, double c) {
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (double& v : out.values) v *= c;
  const bool rg = nodes_[a].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, c](Tape& t, Node& self) {
      Node& na = t.node(a);
      for (std::size_t i = 0; i < self.value.grad.size(); ++i)
        na.value.grad[i] += c * self.value.grad[i];
    };
  }
  return id;
}

Tape::NodeId Tape::elu(NodeId a) {
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (double& v : out.values) v = elu_scalar(v);
  const bool rg = nodes_[a].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a](Tape& t, Node& self) {
      Node& na = t.node(a);
      for (std::size_t i = 0; i < self.value.grad.size(); ++i) {
        const double x = na.value.values[i];
        // d elu/dx = 1 for x >= 0, exp(x) = elu(x) + 1 otherwise
        const double d = x >= 0.0 ? 1.0 : self.value.values[i] + 1.0;
        na.value.grad[i] += self.value.grad[i] * d;
      }
    };
  }
  return id;
}

Tape::NodeId Tape::tanh_op(NodeId a) {
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (double& v : out.values) v = std::tanh(v);
  const bool rg = nodes_[a].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a](Tape& t, Node& self) {
      Node& na = t.node(a);
      for (std::size_t i = 0; i < self.value.grad.size(); ++i) {
        const double y = self.value.values[i];
        na.value.grad[i] += self.value.grad[i] * (1.0 - y * y);
      }
    };
  }
  return id;
}

Tape::NodeId Tape::exp_op(NodeId a) {
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (double& v : out.values) v = std::exp(v);
  const bool rg = nodes_[a].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a](Tape& t, Node& self) {
      Node& na = t.node(a);
      for (std::size_t i = 0; i < self.value.grad.size(); ++i)
        na.value.grad[i] += self.value.grad[i] * self.value.values[i];
    };
  }
  return id;
}

Tape::NodeId Tape::clamp(NodeId a, double lo, double hi) {
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (double& v : out.values) v = v < lo ? lo : (v > hi ? hi : v);
  const bool rg = nodes_[a].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, lo, hi](Tape& t, Node& self) {
      Node& na = t.node(a);
      for (std::size_t i = 0; i < self.value.grad.size(); ++i) {
        const double x = na.value.values[i];
        if (x > lo && x < hi) na.value.grad[i] += self.value.grad[i];
      }
    };
  }
  return id;
}

Tape::NodeId Tape::min_op(NodeId a, NodeId b) {
  check_same_shape(nodes_[a].value, nodes_[b].value, "min");
  Tensor out = nodes_[a].value;
  out.grad.clear();
  for (std::size_t i = 0; i < out.values.size(); ++i)
    out.values[i] = std::min(out.values[i], nodes_[b].value.values[i]);
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, b](Tape& t, Node& self) {
      Node& na = t.node(a);
      Node& nb = t.node(b);
      for (std::size_t i = 0; i < self.value.grad.size(); ++i) {
        const bool take_a = na.value.values[i] <= nb.value.values[i];
        Node& dst = take_a ? na : nb;
        if (dst.requires_grad) dst.value.grad[i] += self.value.grad[i];
      }
    };
  }
  return id;
}

Tape::NodeId Tape::sum(NodeId a) {
  double acc = 0.0;
  for (double v : nodes_[a].value.values) acc += v;
  Tensor out = Tensor::zeros({1, 1});
  out.values[0] = acc;
  const bool rg = nodes_[a].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a](Tape& t, Node& self) {
      Node& na = t.node(a);
      const double g = self.value.grad[0];
      for (double& gv : na.value.grad) gv += g;
    };
  }
  return id;
}

Tape::NodeId Tape::mean(NodeId a) {
  const double n = static_cast<double>(nodes_[a].value.values.size());
  double acc = 0.0;
  for (double v : nodes_[a].value.values) acc += v;
  Tensor out = Tensor::zeros({1, 1});
  out.values[0] = acc / n;
  const bool rg = nodes_[a].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, n](Tape& t, Node& self) {
      Node& na = t.node(a);
      const double g = self.value.grad[0] / n;
      for (double& gv : na.value.grad) gv += g;
    };
  }
  return id;
}

Tape::NodeId Tape::mse(NodeId a, NodeId b) {
  check_same_shape(nodes_[a].value, nodes_[b].value, "mse");
  const double n = static_cast<double>(nodes_[a].value.values.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < nodes_[a].value.values.size(); ++i) {
    const double d = nodes_[a].value.values[i] - nodes_[b].value.values[i];
    acc += d * d;
  }
  Tensor out = Tensor::zeros({1, 1});
  out.values[0] = acc / n;
  const bool rg = nodes_[a].requires_grad || nodes_[b].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [a, b, n](Tape& t, Node& self) {
      Node& na = t.node(a);
      Node& nb = t.node(b);
      const double g = 2.0 * self.value.grad[0] / n;
      for (std::size_t i = 0; i < na.value.values.size(); ++i) {
        const double d = na.value.values[i] - nb.value.values[i];
        if (na.requires_grad) na.value.grad[i] += g * d;
        if (nb.requires_grad) nb.value.grad[i] -= g * d;
      }
    };
  }
  return id;
}

Tape::NodeId Tape::gaussian_log_prob(NodeId mean, NodeId log_std, NodeId action) {
  const Tensor& tm = nodes_[mean].value;
  const Tensor& ts = nodes_[log_std].value;
  const Tensor& ta = nodes_[action].value;
  const int n = tm.rows(), d = tm.cols();
  if (ts.rows() != 1 || ts.cols() != d || ta.rows() != n || ta.cols() != d)
    throw std::invalid_argument("gaussian_log_prob: shape mismatch");
  constexpr double kHalfLog2Pi = 0.9189385332046727;  // 0.5*ln(2*pi)
  Tensor out = Tensor::zeros({n, 1});
  for (int i = 0; i < n; ++i) {
    double lp = 0.0;
    for (int j = 0; j < d; ++j) {
      const double ls = ts.values[j];
      const double z = (ta.at(i, j) - tm.at(i, j)) * std::exp(-ls);
      lp += -0.5 * z * z - ls - kHalfLog2Pi;
    }
    out.values[i] = lp;
  }
  const bool rg = nodes_[mean].requires_grad || nodes_[log_std].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [mean, log_std, action, n, d](Tape& t, Node& self) {
      Node& nm = t.node(mean);
      Node& ns = t.node(log_std);
      Node& na = t.node(action);
      for (int i = 0; i < n; ++i) {
        const double g = self.value.grad[i];
        for (int j = 0; j < d; ++j) {
          const double ls = ns.value.values[j];
          const double inv_std = std::exp(-ls);
          const double z = (na.value.at(i, j) - nm.value.at(i, j)) * inv_std;
          if (nm.requires_grad) nm.value.grad[static_cast<std::size_t>(i) * d + j] += g * z * inv_std;
          if (ns.requires_grad) ns.value.grad[j] += g * (z * z - 1.0);
        }
      }
    };
  }
  return id;
}

Tape::NodeId Tape::gaussian_entropy(NodeId log_std) {
  const Tensor& ts = nodes_[log_std].value;
  constexpr double kHalfLog2PiE = 1.4189385332046727;  // 0.5*ln(2*pi*e)
  double h = 0.0;
  for (double ls : ts.values) h += ls + kHalfLog2PiE;
  Tensor out = Tensor::zeros({1, 1});
  out.values[0] = h;
  const bool rg = nodes_[log_std].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [log_std](Tape& t, Node& self) {
      Node& ns = t.node(log_std);
      for (double& g : ns.value.grad) g += self.value.grad[0];
    };
  }
  return id;
}

Tape::NodeId Tape::kl_standard_normal(NodeId mu, NodeId log_sigma, double sigma_floor) {
  const Tensor& tm = nodes_[mu].value;
  const Tensor& ts = nodes_[log_sigma].value;
  check_same_shape(tm, ts, "kl_standard_normal");
  const int n = tm.rows(), d = tm.cols();
  double acc = 0.0;
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      const double m = tm.at(i, j);
      const double s = std::max(std::exp(ts.at(i, j)), sigma_floor);
      acc += 0.5 * (m * m + s * s - 1.0) - std::log(s);
    }
  }
  Tensor out = Tensor::zeros({1, 1});
  out.values[0] = acc / n;
  const bool rg = nodes_[mu].requires_grad || nodes_[log_sigma].requires_grad;
  NodeId id = push(std::move(out), rg);
  if (rg) {
    nodes_[id].backprop = [mu, log_sigma, sigma_floor, n, d](Tape& t, Node& self) {
      Node& nm = t.node(mu);
      Node& ns = t.node(log_sigma);
      const double g = self.value.grad[0] / n;
      for (int i = 0; i < n; ++i) {
        for (int j = 0; j < d; ++j) {
          const std::size_t idx = static_cast<std::size_t>(i) * d + j;
          const double s = std::exp(ns.value.values[idx]);
          if (nm.requires_grad) nm.value.grad[idx] += g * nm.value.values[idx];
          // d/d(log s) [0.5 s^2 - log s] = s^2 - 1; zero below the floor
          if (ns.requires_grad && s > sigma_floor) ns.value.grad[idx] += g * (s * s - 1.0);
        }
      }
    };
  }
  return id;
}

void Tape::backward(NodeId loss) {
  if (backward_done_) throw std::logic_error("Tape::backward called twice without reset");
  if (nodes_[loss].value.size() != 1) throw std::invalid_argument("backward: loss must be scalar");
  backward_done_ = true;
  if (!nodes_[loss].requires_grad) return;  // nothing to propagate into
  nodes_[loss].value.grad[0] = 1.0;
  for (NodeId id = static_cast<NodeId>(nodes_.size()) - 1; id >= 0; --id) {
    Node& n = nodes_[id];
    if (!n.requires_grad) continue;
    if (n.backprop) n.backprop(*this, n);
    if (n.bound_param) {
      for (std::size_t i = 0; i < n.value.grad.size(); ++i)
        n.bound_param->grad[i] += n.value.grad[i];
    }
  }
}

void Tape::reset() {
  nodes_.clear();
  backward_done_ = false;
}

}  // namespace loco::nn
