#include "loco/nn/adam.hpp"

#include <cmath>
#include <stdexcept>

namespace loco::nn {

Adam::Adam(std::vector<Tensor*> params, AdamConfig config)
    : params_(std::move(params)), config_(config) {
  m_.reserve(params_.size());
  v_.reserve(params_.size());
  for (Tensor* p : params_) {
    p->ensure_grad();
    m_.emplace_back(p->values.size(), 0.0);
    v_.emplace_back(p->values.size(), 0.0);
  }
}

Adam::StepReport Adam::step() {
  StepReport report;
  ++step_;
  const double bc1 = 1.0 - std::pow(config_.beta1, static_cast<double>(step_));
  const double bc2 = 1.0 - std::pow(config_.beta2, static_cast<double>(step_));
  for (std::size_t t = 0; t < params_.size(); ++t) {
    Tensor& p = *params_[t];
    bool finite = true;
    for (double g : p.grad)
      if (!std::isfinite(g)) {
        finite = false;
        break;
      }
    if (!finite) {
      ++report.skipped_tensors;
      continue;
    }
    std::vector<double>& m = m_[t];
    std::vector<double>& v = v_[t];
    for (std::size_t i = 0; i < p.values.size(); ++i) {
      const double g = p.grad[i];
      m[i] = config_.beta1 * m[i] + (1.0 - config_.beta1) * g;
      v[i] = config_.beta2 * v[i] + (1.0 - config_.beta2) * g * g;
      const double m_hat = m[i] / bc1;
      const double v_hat = v[i] / bc2;
      p.values[i] -= config_.learning_rate * m_hat / (std::sqrt(v_hat) + config_.epsilon);
    }
  }
  return report;
}

void Adam::zero_grad() {
  for (Tensor* p : params_) p->zero_grad();
}

double clip_grad_norm(const std::vector<Tensor*>& params, double max_norm) {
  double sq = 0.0;
  for (const Tensor* p : params)
    for (double g : p->grad) sq += g * g;
  const double norm = std::sqrt(sq);
  if (max_norm > 0.0 && norm > max_norm) {
    const double scale = max_norm / norm;
    for (Tensor* p : params)
      for (double& g : p->grad) g *= scale;
  }
  return norm;
}

std::vector<std::vector<double>> Adam::moments_m() const { return m_; }
std::vector<std::vector<double>> Adam::moments_v() const { return v_; }

void Adam::restore(std::int64_t step, const std::vector<std::vector<double>>& m,
                   const std::vector<std::vector<double>>& v) {
  if (m.size() != m_.size() || v.size() != v_.size())
    throw std::invalid_argument("Adam::restore: slot count mismatch");
  for (std::size_t t = 0; t < m_.size(); ++t) {
    if (m[t].size() != m_[t].size() || v[t].size() != v_[t].size())
      throw std::invalid_argument("Adam::restore: moment size mismatch");
  }
  step_ = step;
  m_ = m;
  v_ = v;
}

}  // namespace loco::nn
