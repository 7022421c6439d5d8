#include <cmath>
#include <vector>

#include "doctest.h"
#include "loco/nn/adam.hpp"
#include "loco/nn/gaussian.hpp"
#include "loco/nn/mlp.hpp"
#include "loco/nn/rng.hpp"
#include "loco/nn/tensor.hpp"

using namespace loco::nn;

namespace {

// independent forward oracle: plain nested loops, no shared code with Tape
std::vector<double> mlp_oracle(const Mlp& net, const std::vector<double>& input) {
  std::vector<double> cur = input;
  for (int l = 0; l < net.num_layers(); ++l) {
    const int in = net.layer_sizes[l], out = net.layer_sizes[l + 1];
    std::vector<double> next(out, 0.0);
    for (int j = 0; j < out; ++j) {
      double acc = 0.0;
      for (int k = 0; k < in; ++k) acc += cur[k] * net.weights[l].values[k * out + j];
      next[j] = acc + net.biases[l].values[j];
    }
    if (l + 1 < net.num_layers() || net.activate_output) {
      for (double& v : next) {
        switch (net.activation) {
          case Activation::ELU:
            v = v >= 0.0 ? v : std::exp(v) - 1.0;
            break;
          case Activation::Tanh:
            v = std::tanh(v);
            break;
          case Activation::Linear:
            break;
        }
      }
    }
    cur = next;
  }
  return cur;
}

double mse_oracle(const std::vector<double>& a, const std::vector<double>& b) {
  double acc = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) acc += (a[i] - b[i]) * (a[i] - b[i]);
  return acc / a.size();
}

}  // namespace

TEST_CASE("elu closed forms") {
  CHECK(elu_scalar(0.0) == 0.0);
  CHECK(elu_scalar(1.5) == 1.5);
  CHECK(elu_scalar(-1.0) == doctest::Approx(std::exp(-1.0) - 1.0).epsilon(1e-12));
  // continuity at the origin
  CHECK(std::fabs(elu_scalar(1e-9) - elu_scalar(-1e-9)) < 1e-8);
}

TEST_CASE("mlp forward matches trivial cases") {
  Rng rng(1);
  Mlp zero({3, 2}, Activation::Linear, rng);
  for (auto& w : zero.weights) std::fill(w.values.begin(), w.values.end(), 0.0);
  for (auto& b : zero.biases) std::fill(b.values.begin(), b.values.end(), 0.0);
  double out[2];
  zero.forward(std::vector<double>{1.0, -2.0, 3.0}, out);
  CHECK(out[0] == 0.0);
  CHECK(out[1] == 0.0);

  Mlp ident({2, 2}, Activation::Linear, rng);
  std::fill(ident.weights[0].values.begin(), ident.weights[0].values.end(), 0.0);
  ident.weights[0].at(0, 0) = 1.0;
  ident.weights[0].at(1, 1) = 1.0;
  std::fill(ident.biases[0].values.begin(), ident.biases[0].values.end(), 0.0);
  double out2[2];
  ident.forward(std::vector<double>{1.0, 2.0}, out2);
  CHECK(out2[0] == 1.0);
  CHECK(out2[1] == 2.0);
}

TEST_CASE("mlp forward matches the independent oracle") {
  Rng rng(7);
  Mlp net({5, 8, 3}, Activation::ELU, rng);
  std::vector<double> x(5);
  for (double& v : x) v = rng.uniform(-2.0, 2.0);
  std::vector<double> got(3);
  net.forward(x, got);
  const std::vector<double> want = mlp_oracle(net, x);
  for (int i = 0; i < 3; ++i) CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-12));

  // tape forward agrees with the no-tape forward
  Tape tape;
  auto y = mlp_forward(tape, net, tape.constant(Tensor::row(x)));
  for (int i = 0; i < 3; ++i) CHECK(tape.value(y).values[i] == got[i]);
}

TEST_CASE("backward on hand-differentiable cases") {
  SUBCASE("loss = sum(w * x)") {
    Tape tape;
    Tensor w = Tensor::row({0.5, -1.0, 2.0});
    auto loss = tape.sum(tape.mul(tape.param(w), tape.constant(Tensor::row({1.0, 2.0, 3.0}))));
    tape.backward(loss);
    CHECK(w.grad[0] == 1.0);
    CHECK(w.grad[1] == 2.0);
    CHECK(w.grad[2] == 3.0);
  }
  SUBCASE("loss = (w - 3)^2 at w = 1") {
    Tape tape;
    Tensor w = Tensor::row({1.0});
    auto d = tape.sub(tape.param(w), tape.constant(Tensor::row({3.0})));
    auto loss = tape.sum(tape.mul(d, d));
    tape.backward(loss);
    CHECK(w.grad[0] == doctest::Approx(-4.0).epsilon(1e-14));
  }
  SUBCASE("double backward without reset is a usage error") {
    Tape tape;
    Tensor w = Tensor::row({1.0});
    auto loss = tape.sum(tape.param(w));
    tape.backward(loss);
    CHECK_THROWS_AS(tape.backward(loss), std::logic_error);
    tape.reset();
    auto loss2 = tape.sum(tape.param(w));
    tape.backward(loss2);  // fine after reset
  }
}

TEST_CASE("gradient check: autodiff vs central finite differences, 50 seeds") {
  const double step = 1e-5;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    Rng rng(Rng::mix(99, seed));
    const int depth = 1 + static_cast<int>(rng.uniform() * 3.0);  // 1..3 weight layers
    std::vector<int> sizes;
    sizes.push_back(2 + static_cast<int>(rng.uniform() * 15.0));
    for (int l = 0; l < depth; ++l) sizes.push_back(1 + static_cast<int>(rng.uniform() * 16.0));
    Mlp net(sizes, seed % 3 == 0 ? Activation::Tanh : Activation::ELU, rng);

    std::vector<double> x(sizes.front()), target(sizes.back());
    for (double& v : x) v = rng.uniform(-1.5, 1.5);
    for (double& v : target) v = rng.uniform(-1.5, 1.5);

    Tape tape;
    auto pred = mlp_forward(tape, net, tape.constant(Tensor::row(x)));
    auto loss = tape.mse(pred, tape.constant(Tensor::row(target)));
    net.zero_grad();
    tape.backward(loss);

    std::vector<double> out(sizes.back());
    for (Tensor* p : net.parameters()) {
      for (std::size_t i = 0; i < p->values.size(); ++i) {
        const double keep = p->values[i];
        p->values[i] = keep + step;
        net.forward(x, out);
        const double up = mse_oracle(out, target);
        p->values[i] = keep - step;
        net.forward(x, out);
        const double down = mse_oracle(out, target);
        p->values[i] = keep;
        const double fd = (up - down) / (2.0 * step);
        const double rel = std::fabs(p->grad[i] - fd) / (std::fabs(fd) + 1e-8);
        CHECK(rel < 1e-4);
      }
    }
  }
}

TEST_CASE("determinism: same seed, same outputs and gradients") {
  auto run = [](std::uint64_t seed) {
    Rng rng(seed);
    Mlp net({6, 10, 4}, Activation::ELU, rng);
    std::vector<double> x(6);
    for (double& v : x) v = rng.uniform(-1.0, 1.0);
    Tape tape;
    auto pred = mlp_forward(tape, net, tape.constant(Tensor::row(x)));
    auto loss = tape.mse(pred, tape.constant(Tensor::zeros({1, 4})));
    net.zero_grad();
    tape.backward(loss);
    std::vector<double> sig = {tape.value(loss).values[0]};
    for (Tensor* p : net.parameters())
      for (double g : p->grad) sig.push_back(g);
    return sig;
  };
  CHECK(run(42) == run(42));
}

TEST_CASE("adam: zero gradient leaves parameters unchanged") {
  Tensor p = Tensor::row({1.0, -2.0});
  p.ensure_grad();
  Adam opt({&p}, {});
  auto report = opt.step();
  CHECK(report.skipped_tensors == 0);
  CHECK(p.values[0] == 1.0);
  CHECK(p.values[1] == -2.0);
  CHECK(opt.step_count() == 1);
}

TEST_CASE("adam: first-step magnitude is about lr * sign(g)") {
  AdamConfig cfg;
  cfg.learning_rate = 1e-3;
  Tensor p = Tensor::row({0.5, 0.5});
  p.ensure_grad();
  p.grad = {0.37, -2.4};
  Adam opt({&p}, cfg);
  opt.step();
  CHECK(p.values[0] == doctest::Approx(0.5 - 1e-3).epsilon(1e-4));
  CHECK(p.values[1] == doctest::Approx(0.5 + 1e-3).epsilon(1e-4));
}

TEST_CASE("adam: converges on a scalar quadratic over 100 steps") {
  AdamConfig cfg;
  cfg.learning_rate = 0.05;
  Tensor p = Tensor::row({4.0});
  p.ensure_grad();
  Adam opt({&p}, cfg);
  const double start_gap = std::fabs(p.values[0] - 1.0);
  for (int i = 0; i < 100; ++i) {
    p.grad[0] = 2.0 * (p.values[0] - 1.0);  // d/dx (x-1)^2
    opt.step();
  }
  CHECK(std::fabs(p.values[0] - 1.0) < 0.2 * start_gap);
}

TEST_CASE("adam: non-finite gradient skips that tensor and reports it") {
  Tensor a = Tensor::row({1.0});
  Tensor b = Tensor::row({1.0});
  a.ensure_grad();
  b.ensure_grad();
  a.grad[0] = std::numeric_limits<double>::quiet_NaN();
  b.grad[0] = 1.0;
  Adam opt({&a, &b}, {});
  auto report = opt.step();
  CHECK(report.skipped_tensors == 1);
  CHECK(a.values[0] == 1.0);
  CHECK(b.values[0] != 1.0);
}

TEST_CASE("diagonal gaussian log density closed forms") {
  GaussianHead head(1);
  const std::vector<double> mean = {0.7};
  SUBCASE("at the mean with unit std") {
    CHECK(head.log_prob(mean, mean) == doctest::Approx(-0.9189385332046727).epsilon(1e-12));
  }
  SUBCASE("one std away is exactly 0.5 lower") {
    const std::vector<double> off = {0.7 + 1.0};
    CHECK(head.log_prob(mean, mean) - head.log_prob(mean, off) ==
          doctest::Approx(0.5).epsilon(1e-12));
  }
  SUBCASE("two dims sum the per-dim scalars") {
    GaussianHead h2(2);
    h2.log_std.values = {0.3, -0.4};
    GaussianHead h1a(1), h1b(1);
    h1a.log_std.values = {0.3};
    h1b.log_std.values = {-0.4};
    const std::vector<double> m2 = {0.1, -0.2}, a2 = {0.5, 0.25};
    const double split = h1a.log_prob(std::vector<double>{0.1}, std::vector<double>{0.5}) +
                         h1b.log_prob(std::vector<double>{-0.2}, std::vector<double>{0.25});
    CHECK(h2.log_prob(m2, a2) == doctest::Approx(split).epsilon(1e-12));
  }
}

TEST_CASE("tape gaussian log prob matches the scalar head") {
  Rng rng(3);
  GaussianHead head(4);
  for (double& v : head.log_std.values) v = rng.uniform(-1.0, 0.5);
  Tensor mean = Tensor::zeros({2, 4});
  Tensor actions = Tensor::zeros({2, 4});
  for (double& v : mean.values) v = rng.uniform(-1.0, 1.0);
  for (double& v : actions.values) v = rng.uniform(-1.0, 1.0);
  Tape tape;
  auto lp = tape.gaussian_log_prob(tape.constant(mean), tape.param(head.log_std),
                                   tape.constant(actions));
  for (int i = 0; i < 2; ++i) {
    const std::span<const double> m(mean.values.data() + 4 * i, 4);
    const std::span<const double> a(actions.values.data() + 4 * i, 4);
    CHECK(tape.value(lp).values[i] == doctest::Approx(head.log_prob(m, a)).epsilon(1e-12));
  }
  // gradient of the sampled log prob against finite differences
  auto loss = tape.mean(lp);
  head.log_std.zero_grad();
  tape.backward(loss);
  const double step = 1e-6;
  for (int j = 0; j < 4; ++j) {
    const double keep = head.log_std.values[j];
    auto eval = [&]() {
      double acc = 0.0;
      for (int i = 0; i < 2; ++i) {
        const std::span<const double> m(mean.values.data() + 4 * i, 4);
        const std::span<const double> a(actions.values.data() + 4 * i, 4);
        acc += head.log_prob(m, a);
      }
      return acc / 2.0;
    };
    head.log_std.values[j] = keep + step;
    const double up = eval();
    head.log_std.values[j] = keep - step;
    const double down = eval();
    head.log_std.values[j] = keep;
    const double fd = (up - down) / (2.0 * step);
    CHECK(head.log_std.grad[j] == doctest::Approx(fd).epsilon(1e-5));
  }
}

TEST_CASE("log_std stays inside its clamp under arbitrary updates") {
  Rng rng(11);
  GaussianHead head(12);
  Adam opt({&head.log_std}, {});
  for (int it = 0; it < 500; ++it) {
    for (double& g : head.log_std.grad) g = rng.uniform(-50.0, 50.0);
    opt.step();
    head.clamp_log_std();
    for (double v : head.log_std.values) {
      const double s = std::exp(v);
      CHECK(s >= std::exp(kLogStdMin));
      CHECK(s <= std::exp(kLogStdMax));
    }
  }
}

TEST_CASE("rng round-trips exactly through serialization") {
  Rng a(1234);
  for (int i = 0; i < 100; ++i) a.uniform();
  Rng b;
  b.deserialize(a.serialize());
  for (int i = 0; i < 100; ++i) CHECK(a.raw() == b.raw());
}
